#pragma once

// Wire messages exchanged between player daemons, the game server and the
// scoreboard bridge.
//
// Payloads are canonical JSON: object keys sorted, no insignificant
// whitespace, doubles in shortest round-trip form. The same bytes are the
// hashing preimage for ledger blocks, so encoding must stay deterministic.
//
// Frames on a stream socket are a 4-byte big-endian payload length followed
// by the payload.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cyberduel/common.hpp"
#include "cyberduel/core_model.hpp"
#include "cyberduel/metrics.hpp"

namespace cyberduel::protocol {

struct UnitReport {
  StatusCode code = StatusCode::Up;
  std::string id;
  double health = 0.0;
  std::uint16_t port = 0;

  bool operator==(const UnitReport&) const = default;
};

struct StatusReport {
  Timestamp timestamp{0};
  std::string ip;
  std::string player_name;
  std::map<std::string, std::string> cmds;
  std::vector<UnitReport> units;

  bool operator==(const StatusReport&) const = default;
};

struct CaptureSubmission {
  std::string attacker;
  std::string claimed_fingerprint;
  Timestamp timestamp{0};

  bool operator==(const CaptureSubmission&) const = default;
};

struct CaptureVerdict {
  std::string attacker;
  std::string claimed_fingerprint;
  Timestamp timestamp{0};
  bool accepted = false;
  std::string reason;
  std::string unit_id;  // destroyed unit when accepted

  bool operator==(const CaptureVerdict&) const = default;
};

struct RegisterRequest {
  std::string player;
  std::string host;
  std::uint32_t units = 0;

  bool operator==(const RegisterRequest&) const = default;
};

struct RegisterAck {
  std::string player;
  bool accepted = false;
  std::string reason;

  bool operator==(const RegisterAck&) const = default;
};

struct AssignedUnit {
  std::string unit_id;
  std::string class_id;
  std::uint16_t port = 0;
  std::string fingerprint;
  std::string vuln_key;

  bool operator==(const AssignedUnit&) const = default;
};

struct RealmAssignment {
  std::string player;
  std::vector<AssignedUnit> units;

  bool operator==(const RealmAssignment&) const = default;
};

struct OpponentInfo {
  std::string player;
  std::string opponent;
  std::string ip;

  bool operator==(const OpponentInfo&) const = default;
};

struct HealthEvent {
  std::uint64_t tick = 0;
  Timestamp at{0};
  std::string player;
  std::string unit_id;
  double health = 0.0;
  bool alive = true;
  std::string cause;  // decay | capture | reshuffle

  bool operator==(const HealthEvent&) const = default;
};

struct PlayerScore {
  std::string name;
  double total_health = 0.0;
  std::uint32_t alive_units = 0;
  std::uint32_t units = 0;
  std::optional<std::int64_t> clock_remaining_ms;

  bool operator==(const PlayerScore&) const = default;
};

struct ScoreUpdate {
  std::uint64_t tick = 0;
  Timestamp at{0};
  std::string phase;
  bool paused = false;
  std::vector<PlayerScore> players;
  std::optional<std::string> active_player;
  std::optional<std::string> winner;
  bool draw = false;

  bool operator==(const ScoreUpdate&) const = default;
};

struct ControlRequest {
  std::string op;  // start | pause | resume | clock_press
  std::string player;
  std::string request_id;

  bool operator==(const ControlRequest&) const = default;
};

struct ControlAck {
  std::string op;
  std::string player;
  std::string request_id;
  bool accepted = false;
  std::string reason;

  bool operator==(const ControlAck&) const = default;
};

// Link-level messages of the framed stream transport.
struct LinkPublish {
  std::string topic;
  std::string payload;

  bool operator==(const LinkPublish&) const = default;
};

struct LinkSubscribe {
  std::string filter;

  bool operator==(const LinkSubscribe&) const = default;
};

struct LinkDeliver {
  std::string filter;  // the subscription this delivery answers
  std::string topic;
  std::string payload;

  bool operator==(const LinkDeliver&) const = default;
};

using Message =
    std::variant<StatusReport, CaptureSubmission, CaptureVerdict, RegisterRequest, RegisterAck,
                 RealmAssignment, OpponentInfo, HealthEvent, ScoreUpdate, ControlRequest, ControlAck,
                 CommandEvent, LinkPublish, LinkSubscribe, LinkDeliver>;

std::string type_name(const Message& m);

class DecodeError : public Error {
 public:
  DecodeError(std::string field, const std::string& what)
      : Error("decode error at '" + field + "': " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Canonical payload bytes (no length prefix).
std::string encode_payload(const Message& m);
Message decode_payload(const std::string& payload);

// Length-prefixed frame.
std::string encode(const Message& m);
std::string frame(const std::string& payload);

inline constexpr std::size_t kHeaderSize = 4;
inline constexpr std::size_t kMaxFrame = 16u << 20;

enum class FrameStatus { Complete, Incomplete };

struct FrameResult {
  FrameStatus status = FrameStatus::Incomplete;
  std::string payload;
  std::size_t consumed = 0;
};

// Inspects the front of `bytes` for one frame. Incomplete when the header or
// body is short. Oversized length prefixes throw DecodeError.
FrameResult try_unframe(std::span<const char> bytes);

// Decodes exactly one complete frame; throws IncompleteFrame when short.
class IncompleteFrame : public Error {
 public:
  IncompleteFrame() : Error("incomplete frame") {}
};
Message decode(std::span<const char> frame_bytes);

// Accumulates stream bytes and yields complete payloads in order.
class FrameReader {
 public:
  void feed(std::span<const char> bytes) { buffer_.insert(buffer_.end(), bytes.begin(), bytes.end()); }
  std::optional<std::string> next();
  std::size_t buffered() const { return buffer_.size(); }

 private:
  std::vector<char> buffer_;
};

// Conversions between server state and the wire report shape.
UnitReport unit_report(const UnitState& u);

}  // namespace cyberduel::protocol
