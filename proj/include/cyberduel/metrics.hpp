#pragma once

#include <span>
#include <string>
#include <vector>

#include "cyberduel/common.hpp"

namespace cyberduel {

enum class EventKind { Keystroke, CommandSubmit };

inline constexpr char kBackspace = '\b';
inline constexpr char kDelete = '\x7f';
inline constexpr Millis kCommandWindow{10000};
inline constexpr double kWindowsPerMinute = 6.0;

struct CommandEvent {
  std::string player;
  Timestamp timestamp{0};
  EventKind kind = EventKind::Keystroke;
  std::string text;  // one char for Keystroke, the submitted line otherwise
  bool valid = false;

  bool operator==(const CommandEvent&) const = default;
};

std::string to_string(EventKind k);
EventKind parse_event_kind(const std::string& s);

struct MetricsSnapshot {
  std::string player;
  Timestamp at{0};
  double copm = 0.0;
  double cpm = 0.0;
  double epm = 0.0;
  double cope = 0.0;
  double consistency = 0.0;
};

// Commands per minute over the whole game: total / elapsed minutes.
double copm_total(std::size_t total_commands, double elapsed_minutes);
// Same formula fed by an event stream; counts valid CommandSubmit events.
double copm_total(std::span<const CommandEvent> events, double elapsed_minutes);

// Real-time commands per minute: 6 x valid submits in (now - 10 s, now].
double copm_window(std::span<const CommandEvent> events, Timestamp now);

// Characters per minute; Backspace and Delete count as characters.
double cpm(std::span<const CommandEvent> events, double elapsed_minutes);

// Backspace/Delete keystrokes per minute.
double epm(std::span<const CommandEvent> events, double elapsed_minutes);

// Mean commands per entry: 1 + top-level ';' separators, averaged.
double cope(std::span<const std::string> entries);

// 1 - distinct head tokens / entries.
double consistency(std::span<const std::string> entries);

// Positional mismatch count; rejects strings of unequal length.
std::size_t hamming_distance(const std::string& a, const std::string& b);

std::vector<CommandEvent> events_for(std::span<const CommandEvent> events, const std::string& player);
std::vector<std::string> submitted_lines(std::span<const CommandEvent> events);

MetricsSnapshot snapshot(std::span<const CommandEvent> events, const std::string& player, Timestamp at,
                         double elapsed_minutes);

}  // namespace cyberduel
