#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cyberduel/metrics.hpp"

namespace cyberduel {

struct HealthSample {
  Timestamp timestamp{0};
  std::string player;
  std::string unit_id;
  double health = 0.0;
  std::uint64_t tick = 0;
  std::string cause;  // decay | silence | capture | reshuffle

  bool operator==(const HealthSample&) const = default;
};

struct MatchMarker {
  enum class Kind { Start, End };
  Kind kind = Kind::Start;
  Timestamp timestamp{0};
  std::string game_id;
  std::string mode;
  std::optional<std::string> winner;
  bool draw = false;

  bool operator==(const MatchMarker&) const = default;
};

using TranscriptRecord = std::variant<CommandEvent, HealthSample, MatchMarker>;

// Newline-delimited match log. One JSON object per line, discriminated by
// "kind": Keystroke | CommandSubmit | Health | MatchStart | MatchEnd.
class Transcript {
 public:
  void add(TranscriptRecord r) { records_.push_back(std::move(r)); }
  const std::vector<TranscriptRecord>& records() const { return records_; }

  std::vector<CommandEvent> command_events() const;
  std::vector<HealthSample> health_samples() const;
  std::vector<std::string> players() const;  // sorted, from command and health records
  // MatchEnd - MatchStart when both exist, otherwise the span of all records.
  Millis elapsed() const;
  std::optional<Timestamp> start() const;

  std::string to_ndjson() const;
  // Throws Error naming the 1-based line of the first bad record.
  static Transcript parse(const std::string& text);
  static Transcript load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<TranscriptRecord> records_;
};

std::string encode_record(const TranscriptRecord& r);

}  // namespace cyberduel
