#include "cyberduel/topic.hpp"

#include <vector>

#include "cyberduel/common.hpp"

namespace cyberduel {

std::string to_string(Channel c) {
  switch (c) {
    case Channel::Status: return "status";
    case Channel::Score: return "score";
    case Channel::Opponent: return "opponent";
    case Channel::Events: return "events";
  }
  return "?";
}

namespace {

void check_component(const std::string& s, const char* what) {
  if (s.empty()) throw Rejected(std::string("empty topic component: ") + what);
  if (s.find_first_of("/+#") != std::string::npos)
    throw Rejected(std::string("topic component contains a reserved character: ") + what);
}

std::vector<std::string> levels(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto slash = s.find('/', start);
    out.push_back(s.substr(start, slash - start));
    if (slash == std::string::npos) break;
    start = slash + 1;
  }
  return out;
}

}  // namespace

Topic topic_for(const std::string& game_id, const std::string& player, Channel channel) {
  check_component(game_id, "game_id");
  check_component(player, "player");
  return {"game/" + game_id + "/player/" + player + "/" + to_string(channel)};
}

Topic control_topic(const std::string& game_id) {
  check_component(game_id, "game_id");
  return {"game/" + game_id + "/control"};
}

std::string game_filter(const std::string& game_id) {
  check_component(game_id, "game_id");
  return "game/" + game_id + "/#";
}

bool topic_matches(const std::string& filter, const std::string& topic) {
  const auto f = levels(filter);
  const auto t = levels(topic);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] == "#") return i + 1 == f.size();
    if (i >= t.size()) return false;
    if (f[i] != "+" && f[i] != t[i]) return false;
  }
  return f.size() == t.size();
}

}  // namespace cyberduel
