#include "cyberduel/protocol.hpp"

#include <cmath>

#include <json.hpp>

namespace cyberduel::protocol {

using nlohmann::json;

namespace {

// Checked field access that names the offending path on failure.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw DecodeError(path_.empty() ? "<root>" : path_, "expected object");
  }

  std::string at(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& raw(const char* key) const {
    auto it = j_.find(key);
    if (it == j_.end()) throw DecodeError(at(key), "missing");
    return *it;
  }

  std::string str(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_string()) throw DecodeError(at(key), "expected string");
    return v.get<std::string>();
  }

  bool boolean(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_boolean()) throw DecodeError(at(key), "expected boolean");
    return v.get<bool>();
  }

  std::int64_t i64(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_number_integer()) throw DecodeError(at(key), "expected integer");
    return v.get<std::int64_t>();
  }

  std::uint64_t u64(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      throw DecodeError(at(key), "expected non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::uint16_t port(const char* key) const {
    const auto v = u64(key);
    if (v > 65535) throw DecodeError(at(key), "port out of range");
    return static_cast<std::uint16_t>(v);
  }

  double real(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_number()) throw DecodeError(at(key), "expected number");
    return v.get<double>();
  }

  double health(const char* key) const {
    const double h = real(key);
    if (!std::isfinite(h) || h < 0.0) throw DecodeError(at(key), "health must be finite and >= 0");
    return h;
  }

  std::optional<std::string> opt_str(const char* key) const {
    const auto& v = raw(key);
    if (v.is_null()) return std::nullopt;
    if (!v.is_string()) throw DecodeError(at(key), "expected string or null");
    return v.get<std::string>();
  }

  std::optional<std::int64_t> opt_i64(const char* key) const {
    const auto& v = raw(key);
    if (v.is_null()) return std::nullopt;
    return i64(key);
  }

  const json& array(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_array()) throw DecodeError(at(key), "expected array");
    return v;
  }

  std::string element(const char* key, std::size_t i) const { return at(key) + "[" + std::to_string(i) + "]"; }

 private:
  const json& j_;
  std::string path_;
};

json opt(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }
json opt(const std::optional<std::int64_t>& v) { return v ? json(*v) : json(nullptr); }

void require_finite(double v, const char* field) {
  if (!std::isfinite(v)) throw Error(std::string("cannot encode non-finite ") + field);
}

json to_json(const StatusReport& m) {
  json units = json::array();
  for (const auto& u : m.units) {
    require_finite(u.health, "health");
    units.push_back({{"code", static_cast<int>(u.code)}, {"id", u.id}, {"health", u.health}, {"port", u.port}});
  }
  json cmds = json::object();
  for (const auto& [k, v] : m.cmds) cmds[k] = v;
  return {{"timestamp", m.timestamp.count()}, {"ip", m.ip}, {"playerName", m.player_name},
          {"cmds", cmds}, {"units", units}};
}

StatusReport status_from(const Reader& r) {
  StatusReport m;
  m.timestamp = Timestamp{r.i64("timestamp")};
  m.ip = r.str("ip");
  m.player_name = r.str("playerName");
  const auto& cmds = r.raw("cmds");
  if (!cmds.is_object()) throw DecodeError(r.at("cmds"), "expected object");
  for (auto it = cmds.begin(); it != cmds.end(); ++it) {
    if (!it.value().is_string()) throw DecodeError(r.at("cmds") + "." + it.key(), "expected string");
    m.cmds[it.key()] = it.value().get<std::string>();
  }
  const auto& units = r.array("units");
  for (std::size_t i = 0; i < units.size(); ++i) {
    Reader u(units[i], r.element("units", i));
    UnitReport ur;
    const auto code = u.i64("code");
    if (code != 200 && code != 400) throw DecodeError(u.at("code"), "status code must be 200 or 400");
    ur.code = static_cast<StatusCode>(code);
    ur.id = u.str("id");
    ur.health = u.health("health");
    ur.port = u.port("port");
    m.units.push_back(std::move(ur));
  }
  return m;
}

json to_json(const CaptureSubmission& m) {
  return {{"attacker", m.attacker}, {"claimed_fingerprint", m.claimed_fingerprint},
          {"timestamp", m.timestamp.count()}};
}

CaptureSubmission capture_from(const Reader& r) {
  return {r.str("attacker"), r.str("claimed_fingerprint"), Timestamp{r.i64("timestamp")}};
}

json to_json(const CaptureVerdict& m) {
  return {{"attacker", m.attacker}, {"claimed_fingerprint", m.claimed_fingerprint},
          {"timestamp", m.timestamp.count()}, {"accepted", m.accepted}, {"reason", m.reason},
          {"unit_id", m.unit_id}};
}

CaptureVerdict verdict_from(const Reader& r) {
  return {r.str("attacker"), r.str("claimed_fingerprint"), Timestamp{r.i64("timestamp")},
          r.boolean("accepted"), r.str("reason"), r.str("unit_id")};
}

json to_json(const RegisterRequest& m) { return {{"player", m.player}, {"host", m.host}, {"units", m.units}}; }

RegisterRequest register_from(const Reader& r) {
  const auto units = r.u64("units");
  if (units > 0xffffffffu) throw DecodeError(r.at("units"), "out of range");
  return {r.str("player"), r.str("host"), static_cast<std::uint32_t>(units)};
}

json to_json(const RegisterAck& m) {
  return {{"player", m.player}, {"accepted", m.accepted}, {"reason", m.reason}};
}

RegisterAck register_ack_from(const Reader& r) { return {r.str("player"), r.boolean("accepted"), r.str("reason")}; }

json to_json(const RealmAssignment& m) {
  json units = json::array();
  for (const auto& u : m.units)
    units.push_back({{"unit_id", u.unit_id}, {"class_id", u.class_id}, {"port", u.port},
                     {"fingerprint", u.fingerprint}, {"vuln_key", u.vuln_key}});
  return {{"player", m.player}, {"units", units}};
}

RealmAssignment realm_from(const Reader& r) {
  RealmAssignment m;
  m.player = r.str("player");
  const auto& units = r.array("units");
  for (std::size_t i = 0; i < units.size(); ++i) {
    Reader u(units[i], r.element("units", i));
    m.units.push_back({u.str("unit_id"), u.str("class_id"), u.port("port"), u.str("fingerprint"),
                       u.str("vuln_key")});
  }
  return m;
}

json to_json(const OpponentInfo& m) { return {{"player", m.player}, {"opponent", m.opponent}, {"ip", m.ip}}; }

OpponentInfo opponent_from(const Reader& r) { return {r.str("player"), r.str("opponent"), r.str("ip")}; }

json to_json(const HealthEvent& m) {
  require_finite(m.health, "health");
  return {{"tick", m.tick},     {"at", m.at.count()},   {"player", m.player}, {"unit_id", m.unit_id},
          {"health", m.health}, {"alive", m.alive},     {"cause", m.cause}};
}

HealthEvent health_from(const Reader& r) {
  return {r.u64("tick"),        Timestamp{r.i64("at")}, r.str("player"), r.str("unit_id"),
          r.health("health"),   r.boolean("alive"),     r.str("cause")};
}

json to_json(const ScoreUpdate& m) {
  json players = json::array();
  for (const auto& p : m.players) {
    require_finite(p.total_health, "total_health");
    players.push_back({{"name", p.name}, {"total_health", p.total_health}, {"alive_units", p.alive_units},
                       {"units", p.units}, {"clock_remaining_ms", opt(p.clock_remaining_ms)}});
  }
  return {{"tick", m.tick},     {"at", m.at.count()},         {"phase", m.phase},
          {"paused", m.paused}, {"players", players},         {"active_player", opt(m.active_player)},
          {"winner", opt(m.winner)}, {"draw", m.draw}};
}

ScoreUpdate score_from(const Reader& r) {
  ScoreUpdate m;
  m.tick = r.u64("tick");
  m.at = Timestamp{r.i64("at")};
  m.phase = r.str("phase");
  m.paused = r.boolean("paused");
  const auto& players = r.array("players");
  for (std::size_t i = 0; i < players.size(); ++i) {
    Reader p(players[i], r.element("players", i));
    PlayerScore s;
    s.name = p.str("name");
    s.total_health = p.health("total_health");
    s.alive_units = static_cast<std::uint32_t>(p.u64("alive_units"));
    s.units = static_cast<std::uint32_t>(p.u64("units"));
    s.clock_remaining_ms = p.opt_i64("clock_remaining_ms");
    m.players.push_back(std::move(s));
  }
  m.active_player = r.opt_str("active_player");
  m.winner = r.opt_str("winner");
  m.draw = r.boolean("draw");
  return m;
}

json to_json(const ControlRequest& m) {
  return {{"op", m.op}, {"player", m.player}, {"request_id", m.request_id}};
}

ControlRequest control_from(const Reader& r) { return {r.str("op"), r.str("player"), r.str("request_id")}; }

json to_json(const ControlAck& m) {
  return {{"op", m.op},           {"player", m.player}, {"request_id", m.request_id},
          {"accepted", m.accepted}, {"reason", m.reason}};
}

ControlAck control_ack_from(const Reader& r) {
  return {r.str("op"), r.str("player"), r.str("request_id"), r.boolean("accepted"), r.str("reason")};
}

json to_json(const CommandEvent& m) {
  return {{"player", m.player}, {"timestamp", m.timestamp.count()}, {"kind", to_string(m.kind)},
          {"text", m.text},     {"valid", m.valid}};
}

CommandEvent command_from(const Reader& r) {
  CommandEvent e;
  e.player = r.str("player");
  e.timestamp = Timestamp{r.i64("timestamp")};
  const auto kind = r.str("kind");
  if (kind != "Keystroke" && kind != "CommandSubmit") throw DecodeError(r.at("kind"), "unknown event kind");
  e.kind = parse_event_kind(kind);
  e.text = r.str("text");
  e.valid = r.boolean("valid");
  return e;
}

json to_json(const LinkPublish& m) { return {{"topic", m.topic}, {"payload", m.payload}}; }
json to_json(const LinkSubscribe& m) { return {{"filter", m.filter}}; }
json to_json(const LinkDeliver& m) {
  return {{"filter", m.filter}, {"topic", m.topic}, {"payload", m.payload}};
}

template <class T>
constexpr const char* tag();
template <> constexpr const char* tag<StatusReport>() { return "status_report"; }
template <> constexpr const char* tag<CaptureSubmission>() { return "capture_submission"; }
template <> constexpr const char* tag<CaptureVerdict>() { return "capture_verdict"; }
template <> constexpr const char* tag<RegisterRequest>() { return "register"; }
template <> constexpr const char* tag<RegisterAck>() { return "register_ack"; }
template <> constexpr const char* tag<RealmAssignment>() { return "realm_assignment"; }
template <> constexpr const char* tag<OpponentInfo>() { return "opponent_info"; }
template <> constexpr const char* tag<HealthEvent>() { return "health_event"; }
template <> constexpr const char* tag<ScoreUpdate>() { return "score_update"; }
template <> constexpr const char* tag<ControlRequest>() { return "control"; }
template <> constexpr const char* tag<ControlAck>() { return "control_ack"; }
template <> constexpr const char* tag<CommandEvent>() { return "command_event"; }
template <> constexpr const char* tag<LinkPublish>() { return "link_publish"; }
template <> constexpr const char* tag<LinkSubscribe>() { return "link_subscribe"; }
template <> constexpr const char* tag<LinkDeliver>() { return "link_deliver"; }

}  // namespace

std::string type_name(const Message& m) {
  return std::visit([](const auto& x) { return std::string(tag<std::decay_t<decltype(x)>>()); }, m);
}

std::string encode_payload(const Message& m) {
  json body = std::visit([](const auto& x) { return to_json(x); }, m);
  json envelope = {{"type", type_name(m)}, {"body", std::move(body)}};
  return envelope.dump();
}

Message decode_payload(const std::string& payload) {
  json j;
  try {
    j = json::parse(payload);
  } catch (const json::parse_error& e) {
    throw DecodeError("<root>", std::string("malformed payload: ") + e.what());
  }
  Reader env(j, "");
  const auto type = env.str("type");
  Reader r(env.raw("body"), "body");
  if (type == tag<StatusReport>()) return status_from(r);
  if (type == tag<CaptureSubmission>()) return capture_from(r);
  if (type == tag<CaptureVerdict>()) return verdict_from(r);
  if (type == tag<RegisterRequest>()) return register_from(r);
  if (type == tag<RegisterAck>()) return register_ack_from(r);
  if (type == tag<RealmAssignment>()) return realm_from(r);
  if (type == tag<OpponentInfo>()) return opponent_from(r);
  if (type == tag<HealthEvent>()) return health_from(r);
  if (type == tag<ScoreUpdate>()) return score_from(r);
  if (type == tag<ControlRequest>()) return control_from(r);
  if (type == tag<ControlAck>()) return control_ack_from(r);
  if (type == tag<CommandEvent>()) return command_from(r);
  if (type == tag<LinkPublish>()) return LinkPublish{r.str("topic"), r.str("payload")};
  if (type == tag<LinkSubscribe>()) return LinkSubscribe{r.str("filter")};
  if (type == tag<LinkDeliver>()) return LinkDeliver{r.str("filter"), r.str("topic"), r.str("payload")};
  throw DecodeError("type", "unknown message type '" + type + "'");
}

std::string frame(const std::string& payload) {
  if (payload.size() > kMaxFrame) throw Error("payload exceeds maximum frame size");
  const auto n = static_cast<std::uint32_t>(payload.size());
  std::string out;
  out.reserve(kHeaderSize + payload.size());
  out.push_back(static_cast<char>((n >> 24) & 0xff));
  out.push_back(static_cast<char>((n >> 16) & 0xff));
  out.push_back(static_cast<char>((n >> 8) & 0xff));
  out.push_back(static_cast<char>(n & 0xff));
  out += payload;
  return out;
}

std::string encode(const Message& m) { return frame(encode_payload(m)); }

FrameResult try_unframe(std::span<const char> bytes) {
  FrameResult r;
  if (bytes.size() < kHeaderSize) return r;
  std::uint32_t n = 0;
  for (std::size_t i = 0; i < kHeaderSize; ++i) n = (n << 8) | static_cast<std::uint8_t>(bytes[i]);
  if (n > kMaxFrame) throw DecodeError("<length>", "frame length " + std::to_string(n) + " exceeds limit");
  if (bytes.size() < kHeaderSize + n) return r;
  r.status = FrameStatus::Complete;
  r.payload.assign(bytes.data() + kHeaderSize, n);
  r.consumed = kHeaderSize + n;
  return r;
}

Message decode(std::span<const char> frame_bytes) {
  auto r = try_unframe(frame_bytes);
  if (r.status == FrameStatus::Incomplete) throw IncompleteFrame();
  return decode_payload(r.payload);
}

std::optional<std::string> FrameReader::next() {
  auto r = try_unframe(buffer_);
  if (r.status == FrameStatus::Incomplete) return std::nullopt;
  buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(r.consumed));
  return std::move(r.payload);
}

UnitReport unit_report(const UnitState& u) { return {u.status, u.unit_id, u.health, u.port}; }

}  // namespace cyberduel::protocol
