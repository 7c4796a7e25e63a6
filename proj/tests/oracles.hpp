#pragma once

// Slow, obviously-correct reference implementations used to check the engine.
// None of these call into the library code they are compared against.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cyberduel/metrics.hpp"

namespace oracle {

// Health of a continuously-down unit after `seconds`, stepping one second at a
// time and finishing with the fractional remainder.
inline double health_loop(double start, double seconds, double dc) {
  double h = start;
  double left = seconds;
  while (left >= 1.0) {
    h -= dc;
    if (h < 0.0) h = 0.0;
    left -= 1.0;
  }
  if (left > 0.0) h -= left * dc;
  return h < 0.0 ? 0.0 : h;
}

inline std::size_t count_valid_submits(const std::vector<cyberduel::CommandEvent>& log) {
  std::size_t n = 0;
  for (const auto& e : log) n += (e.kind == cyberduel::EventKind::CommandSubmit && e.valid) ? 1 : 0;
  return n;
}

inline double copm_total(const std::vector<cyberduel::CommandEvent>& log, double minutes) {
  return static_cast<double>(count_valid_submits(log)) / minutes;
}

// Walks the log once per window; the window is (now - 10 s, now].
inline double copm_window(const std::vector<cyberduel::CommandEvent>& log, std::int64_t now_ms) {
  std::size_t n = 0;
  for (const auto& e : log) {
    const auto t = e.timestamp.count();
    if (e.kind == cyberduel::EventKind::CommandSubmit && e.valid && t > now_ms - 10000 && t <= now_ms) ++n;
  }
  return 6.0 * static_cast<double>(n);
}

inline double cpm(const std::vector<cyberduel::CommandEvent>& log, double minutes) {
  std::size_t n = 0;
  for (const auto& e : log) n += e.kind == cyberduel::EventKind::Keystroke ? 1 : 0;
  return static_cast<double>(n) / minutes;
}

inline double epm(const std::vector<cyberduel::CommandEvent>& log, double minutes) {
  std::size_t n = 0;
  for (const auto& e : log)
    if (e.kind == cyberduel::EventKind::Keystroke && (e.text == "\b" || e.text == "\x7f")) ++n;
  return static_cast<double>(n) / minutes;
}

// Character walk tracking quote state; counts ';' outside quotes.
inline std::size_t separators(const std::string& line) {
  std::size_t n = 0;
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote == '\'') {
      if (c == '\'') quote = 0;
    } else if (quote == '"') {
      if (c == '\\') ++i;
      else if (c == '"') quote = 0;
    } else if (c == '\\') {
      ++i;
    } else if (c == '\'' || c == '"') {
      quote = c;
    } else if (c == ';') {
      ++n;
    }
  }
  return n;
}

inline double cope(const std::vector<std::string>& entries) {
  double sum = 0;
  for (const auto& e : entries) sum += 1.0 + static_cast<double>(separators(e));
  return sum / static_cast<double>(entries.size());
}

inline std::string first_word(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_first_of(" \t;", b);
  return s.substr(b, e == std::string::npos ? std::string::npos : e - b);
}

inline double consistency(const std::vector<std::string>& entries) {
  std::set<std::string> heads;
  for (const auto& e : entries) heads.insert(first_word(e));
  return 1.0 - static_cast<double>(heads.size()) / static_cast<double>(entries.size());
}

inline std::size_t hamming(const std::string& a, const std::string& b) {
  std::size_t n = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (true) {
    auto [ma, mb] = std::mismatch(ia, a.end(), ib);
    if (ma == a.end()) return n;
    ++n;
    ia = ma + 1;
    ib = mb + 1;
  }
}

// Renormalizes a weight map so it sums to one.
template <typename K>
std::map<K, double> normalize(std::map<K, double> w) {
  double total = 0;
  for (const auto& [k, v] : w) total += v;
  for (auto& [k, v] : w) v /= total;
  return w;
}

}  // namespace oracle
