#include "cyberduel/report.hpp"

#include <cstdio>

namespace cyberduel {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

ReportRow row_for(const std::string& label, const std::vector<CommandEvent>& events, double minutes) {
  ReportRow r;
  r.player = label;
  r.elapsed_minutes = minutes;
  for (const auto& e : events) {
    if (e.kind == EventKind::CommandSubmit) {
      ++r.commands;
      r.valid_commands += e.valid;
    } else {
      ++r.keystrokes;
      r.corrections += e.text.size() == 1 && (e.text[0] == kBackspace || e.text[0] == kDelete);
    }
  }
  const auto s = snapshot(events, label, Timestamp{0}, minutes);
  r.copm = s.copm;
  r.cpm = s.cpm;
  r.epm = s.epm;
  r.cope = s.cope;
  r.consistency = s.consistency;
  return r;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::vector<ReportRow> summarize(const Transcript& t) {
  const double minutes = to_minutes(t.elapsed());
  const auto events = t.command_events();
  std::vector<ReportRow> rows;
  for (const auto& p : t.players()) rows.push_back(row_for(p, events_for(events, p), minutes));
  // snapshot() filters by player, so the ALL row relabels every event.
  auto all = events;
  for (auto& e : all) e.player = "ALL";
  rows.push_back(row_for("ALL", all, minutes));
  return rows;
}

std::string summary_csv(const Transcript& t) {
  std::string out = "player,commands,valid_commands,keystrokes,corrections,elapsed_min,copm,cpm,epm,cope,consistency\n";
  for (const auto& r : summarize(t)) {
    out += csv_field(r.player) + "," + std::to_string(r.commands) + "," + std::to_string(r.valid_commands) + "," +
           std::to_string(r.keystrokes) + "," + std::to_string(r.corrections) + "," + fmt(r.elapsed_minutes) + "," +
           fmt(r.copm) + "," + fmt(r.cpm) + "," + fmt(r.epm) + "," + fmt(r.cope) + "," + fmt(r.consistency) + "\n";
  }
  return out;
}

std::string health_timeline_csv(const Transcript& t) {
  std::string out = "timestamp_ms,player,unit,health,cause\n";
  for (const auto& h : t.health_samples())
    out += std::to_string(h.timestamp.count()) + "," + csv_field(h.player) + "," + csv_field(h.unit_id) + "," +
           fmt(h.health) + "," + csv_field(h.cause) + "\n";
  return out;
}

std::string copm_series_csv(const Transcript& t) {
  std::string out = "seconds,player,copm\n";
  const auto start = t.start();
  if (!start) return out;
  const auto events = t.command_events();
  const auto players = t.players();
  std::vector<std::vector<CommandEvent>> mine;
  for (const auto& p : players) mine.push_back(events_for(events, p));
  for (Millis off = kCommandWindow; off <= t.elapsed(); off += kCommandWindow)
    for (std::size_t i = 0; i < players.size(); ++i)
      out += std::to_string(off.count() / 1000) + "," + csv_field(players[i]) + "," +
             fmt(copm_window(mine[i], *start + off)) + "\n";
  return out;
}

}  // namespace cyberduel
