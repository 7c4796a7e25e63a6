#pragma once

#include <string>
#include <vector>

#include "cyberduel/transcript.hpp"

namespace cyberduel {

struct ReportRow {
  std::string player;  // "ALL" for the whole-match row
  std::size_t commands = 0;
  std::size_t valid_commands = 0;
  std::size_t keystrokes = 0;
  std::size_t corrections = 0;
  double elapsed_minutes = 0.0;
  double copm = 0.0;
  double cpm = 0.0;
  double epm = 0.0;
  double cope = 0.0;
  double consistency = 0.0;
};

// One row per player (sorted) followed by the ALL row.
std::vector<ReportRow> summarize(const Transcript& t);

std::string summary_csv(const Transcript& t);
// timestamp_ms,player,unit,health,cause
std::string health_timeline_csv(const Transcript& t);
// Real-time CoPM sampled at every 10 s boundary since match start:
// seconds,player,copm
std::string copm_series_csv(const Transcript& t);

}  // namespace cyberduel
