#include "cyberduel/metrics.hpp"

#include <algorithm>
#include <set>

#include "cyberduel/command_grammar.hpp"

namespace cyberduel {

std::string to_string(EventKind k) {
  return k == EventKind::Keystroke ? "Keystroke" : "CommandSubmit";
}

EventKind parse_event_kind(const std::string& s) {
  if (s == "Keystroke") return EventKind::Keystroke;
  if (s == "CommandSubmit") return EventKind::CommandSubmit;
  throw Rejected("unknown event kind '" + s + "'");
}

namespace {

void require_elapsed(double elapsed_minutes) {
  if (!(elapsed_minutes > 0.0)) throw Rejected("elapsed minutes must be > 0");
}

bool is_valid_submit(const CommandEvent& e) { return e.kind == EventKind::CommandSubmit && e.valid; }

bool is_error_key(const CommandEvent& e) {
  return e.kind == EventKind::Keystroke && e.text.size() == 1 &&
         (e.text[0] == kBackspace || e.text[0] == kDelete);
}

}  // namespace

double copm_total(std::size_t total_commands, double elapsed_minutes) {
  require_elapsed(elapsed_minutes);
  return static_cast<double>(total_commands) / elapsed_minutes;
}

double copm_total(std::span<const CommandEvent> events, double elapsed_minutes) {
  const auto n = std::count_if(events.begin(), events.end(), is_valid_submit);
  return copm_total(static_cast<std::size_t>(n), elapsed_minutes);
}

double copm_window(std::span<const CommandEvent> events, Timestamp now) {
  const Timestamp from = now - kCommandWindow;
  const auto n = std::count_if(events.begin(), events.end(), [&](const CommandEvent& e) {
    return is_valid_submit(e) && e.timestamp > from && e.timestamp <= now;
  });
  return kWindowsPerMinute * static_cast<double>(n);
}

double cpm(std::span<const CommandEvent> events, double elapsed_minutes) {
  require_elapsed(elapsed_minutes);
  const auto n = std::count_if(events.begin(), events.end(),
                               [](const CommandEvent& e) { return e.kind == EventKind::Keystroke; });
  return static_cast<double>(n) / elapsed_minutes;
}

double epm(std::span<const CommandEvent> events, double elapsed_minutes) {
  require_elapsed(elapsed_minutes);
  const auto n = std::count_if(events.begin(), events.end(), is_error_key);
  return static_cast<double>(n) / elapsed_minutes;
}

double cope(std::span<const std::string> entries) {
  if (entries.empty()) throw Rejected("cope needs at least one entry");
  double total = 0.0;
  for (const auto& e : entries) total += 1.0 + static_cast<double>(count_separators(e));
  return total / static_cast<double>(entries.size());
}

double consistency(std::span<const std::string> entries) {
  if (entries.empty()) throw Rejected("consistency needs at least one entry");
  std::set<std::string> heads;
  for (const auto& e : entries) heads.insert(head_token(e));
  return 1.0 - static_cast<double>(heads.size()) / static_cast<double>(entries.size());
}

std::size_t hamming_distance(const std::string& a, const std::string& b) {
  if (a.size() != b.size()) throw Rejected("Unequal length");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

std::vector<CommandEvent> events_for(std::span<const CommandEvent> events, const std::string& player) {
  std::vector<CommandEvent> out;
  for (const auto& e : events)
    if (e.player == player) out.push_back(e);
  return out;
}

std::vector<std::string> submitted_lines(std::span<const CommandEvent> events) {
  std::vector<std::string> out;
  for (const auto& e : events)
    if (e.kind == EventKind::CommandSubmit) out.push_back(e.text);
  return out;
}

MetricsSnapshot snapshot(std::span<const CommandEvent> events, const std::string& player, Timestamp at,
                         double elapsed_minutes) {
  const auto mine = events_for(events, player);
  MetricsSnapshot s;
  s.player = player;
  s.at = at;
  if (elapsed_minutes > 0.0) {
    s.copm = copm_total(mine, elapsed_minutes);
    s.cpm = cpm(mine, elapsed_minutes);
    s.epm = epm(mine, elapsed_minutes);
  }
  const auto lines = submitted_lines(mine);
  if (!lines.empty()) {
    s.cope = cope(lines);
    s.consistency = consistency(lines);
  }
  return s;
}

}  // namespace cyberduel
