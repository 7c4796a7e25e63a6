#include "cyberduel/command_grammar.hpp"

namespace cyberduel {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

}  // namespace

std::vector<std::string> split_words(const std::string& line) {
  std::vector<std::string> words;
  std::string cur;
  bool in_word = false;
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == quote) {
        quote = 0;
      } else if (c == '\\' && quote == '"' && i + 1 < line.size()) {
        cur.push_back(line[++i]);
      } else {
        cur.push_back(c);
      }
      continue;
    }
    if (c == '"' || c == '\'') {
      quote = c;
      in_word = true;
    } else if (c == '\\' && i + 1 < line.size()) {
      cur.push_back(line[++i]);
      in_word = true;
    } else if (is_space(c)) {
      if (in_word) words.push_back(std::move(cur));
      cur.clear();
      in_word = false;
    } else {
      cur.push_back(c);
      in_word = true;
    }
  }
  if (in_word) words.push_back(std::move(cur));
  return words;
}

std::vector<std::string> split_top_level(const std::string& line) {
  std::vector<std::string> parts;
  std::string cur;
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      cur.push_back(c);
      if (c == quote) quote = 0;
      else if (c == '\\' && quote == '"' && i + 1 < line.size()) cur.push_back(line[++i]);
      continue;
    }
    if (c == '\\' && i + 1 < line.size()) {
      cur.push_back(c);
      cur.push_back(line[++i]);
    } else if (c == '"' || c == '\'') {
      quote = c;
      cur.push_back(c);
    } else if (c == ';') {
      parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(std::move(cur));
  return parts;
}

std::size_t count_separators(const std::string& line) { return split_top_level(line).size() - 1; }

std::string head_token(const std::string& line) {
  const auto segments = split_top_level(line);
  if (segments.empty()) return {};
  const auto words = split_words(segments.front());
  return words.empty() ? std::string{} : words.front();
}

CommandGrammar CommandGrammar::standard() {
  return CommandGrammar({
      {"ls", {0, 4}},      {"cd", {0, 1}},     {"pwd", {0, 0}},      {"cat", {1, 4}},
      {"echo", {0, 16}},   {"whoami", {0, 0}}, {"id", {0, 1}},       {"ping", {1, 4}},
      {"curl", {1, 6}},    {"wget", {1, 4}},   {"whois", {1, 2}},    {"host", {1, 2}},
      {"dig", {1, 3}},     {"nmap", {1, 8}},   {"nc", {1, 5}},       {"hping3", {1, 6}},
      {"ssh", {1, 3}},     {"exploit", {3, 3}}, {"dos", {2, 2}},     {"flood", {2, 2}},
      {"capture", {1, 1}}, {"getip", {0, 0}},  {"flags", {0, 0}},    {"enter", {1, 1}},
      {"attack", {2, 3}},  {"clear", {0, 0}},  {"history", {0, 1}},  {"msfconsole", {0, 4}},
  });
}

bool CommandGrammar::accepts(const std::string& line) const {
  const auto segments = split_top_level(line);
  for (const auto& seg : segments) {
    const auto words = split_words(seg);
    if (words.empty()) return false;
    const auto it = rules_.find(words.front());
    if (it == rules_.end()) return false;
    const auto nargs = words.size() - 1;
    if (nargs < it->second.min_args || nargs > it->second.max_args) return false;
  }
  return true;
}

}  // namespace cyberduel
