#include "cyberduel/transcript.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace cyberduel {

using nlohmann::json;

namespace {

Timestamp record_time(const TranscriptRecord& r) {
  return std::visit([](const auto& x) { return x.timestamp; }, r);
}

TranscriptRecord decode_record(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  const Timestamp ts{j.at("timestamp").get<std::int64_t>()};
  if (kind == "Keystroke" || kind == "CommandSubmit") {
    CommandEvent e;
    e.kind = parse_event_kind(kind);
    e.timestamp = ts;
    e.player = j.at("player").get<std::string>();
    e.text = j.at("text").get<std::string>();
    e.valid = j.at("valid").get<bool>();
    if (e.player.empty()) throw Error("empty player");
    if (e.kind == EventKind::CommandSubmit && e.text.empty()) throw Error("empty command text");
    return e;
  }
  if (kind == "Health") {
    HealthSample h;
    h.timestamp = ts;
    h.player = j.at("player").get<std::string>();
    h.unit_id = j.at("unit").get<std::string>();
    h.health = j.at("health").get<double>();
    h.tick = j.at("tick").get<std::uint64_t>();
    h.cause = j.value("cause", "");
    return h;
  }
  if (kind == "MatchStart" || kind == "MatchEnd") {
    MatchMarker m;
    m.kind = kind == "MatchStart" ? MatchMarker::Kind::Start : MatchMarker::Kind::End;
    m.timestamp = ts;
    m.game_id = j.value("game", "");
    m.mode = j.value("mode", "");
    if (j.contains("winner") && !j.at("winner").is_null()) m.winner = j.at("winner").get<std::string>();
    m.draw = j.value("draw", false);
    return m;
  }
  throw Error("unknown record kind '" + kind + "'");
}

}  // namespace

std::string encode_record(const TranscriptRecord& r) {
  json j;
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        j["timestamp"] = x.timestamp.count();
        if constexpr (std::is_same_v<T, CommandEvent>) {
          j["kind"] = to_string(x.kind);
          j["player"] = x.player;
          j["text"] = x.text;
          j["valid"] = x.valid;
        } else if constexpr (std::is_same_v<T, HealthSample>) {
          j["kind"] = "Health";
          j["player"] = x.player;
          j["unit"] = x.unit_id;
          j["health"] = x.health;
          j["tick"] = x.tick;
          j["cause"] = x.cause;
        } else {
          j["kind"] = x.kind == MatchMarker::Kind::Start ? "MatchStart" : "MatchEnd";
          j["game"] = x.game_id;
          j["mode"] = x.mode;
          if (x.kind == MatchMarker::Kind::End) {
            j["winner"] = x.winner ? json(*x.winner) : json(nullptr);
            j["draw"] = x.draw;
          }
        }
      },
      r);
  return j.dump();
}

std::vector<CommandEvent> Transcript::command_events() const {
  std::vector<CommandEvent> out;
  for (const auto& r : records_)
    if (const auto* e = std::get_if<CommandEvent>(&r)) out.push_back(*e);
  return out;
}

std::vector<HealthSample> Transcript::health_samples() const {
  std::vector<HealthSample> out;
  for (const auto& r : records_)
    if (const auto* h = std::get_if<HealthSample>(&r)) out.push_back(*h);
  return out;
}

std::vector<std::string> Transcript::players() const {
  std::set<std::string> names;
  for (const auto& r : records_) {
    if (const auto* e = std::get_if<CommandEvent>(&r)) names.insert(e->player);
    if (const auto* h = std::get_if<HealthSample>(&r)) names.insert(h->player);
  }
  return {names.begin(), names.end()};
}

std::optional<Timestamp> Transcript::start() const {
  for (const auto& r : records_)
    if (const auto* m = std::get_if<MatchMarker>(&r); m && m->kind == MatchMarker::Kind::Start)
      return m->timestamp;
  if (records_.empty()) return std::nullopt;
  return record_time(records_.front());
}

Millis Transcript::elapsed() const {
  std::optional<Timestamp> start, end;
  for (const auto& r : records_) {
    if (const auto* m = std::get_if<MatchMarker>(&r)) {
      if (m->kind == MatchMarker::Kind::Start && !start) start = m->timestamp;
      if (m->kind == MatchMarker::Kind::End) end = m->timestamp;
    }
  }
  if (start && end) return *end - *start;
  if (records_.empty()) return Millis{0};
  Timestamp lo = record_time(records_.front()), hi = lo;
  for (const auto& r : records_) {
    lo = std::min(lo, record_time(r));
    hi = std::max(hi, record_time(r));
  }
  return hi - lo;
}

std::string Transcript::to_ndjson() const {
  std::string out;
  for (const auto& r : records_) {
    out += encode_record(r);
    out += '\n';
  }
  return out;
}

Transcript Transcript::parse(const std::string& text) {
  Transcript t;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    try {
      t.add(decode_record(json::parse(line)));
    } catch (const std::exception& e) {
      throw Error("transcript record " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return t;
}

Transcript Transcript::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open transcript " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Transcript::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write transcript " + path.string());
  out << to_ndjson();
}

}  // namespace cyberduel
