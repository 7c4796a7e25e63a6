#pragma once

#include <string>

namespace cyberduel {

enum class Channel { Status, Score, Opponent, Events };

std::string to_string(Channel c);

// Publish topics have the form
//   game/{game_id}/player/{name}/{status|score|opponent|events}
//   game/{game_id}/control
// Components must be nonempty and contain no '/', '+' or '#'. Subscription
// filters may use MQTT-style '+' (one level) and a trailing '#' (any rest).
struct Topic {
  std::string path;

  bool operator==(const Topic&) const = default;
  auto operator<=>(const Topic&) const = default;
};

Topic topic_for(const std::string& game_id, const std::string& player, Channel channel);
Topic control_topic(const std::string& game_id);

// All topics of one game: "game/{id}/#".
std::string game_filter(const std::string& game_id);

bool topic_matches(const std::string& filter, const std::string& topic);

}  // namespace cyberduel
