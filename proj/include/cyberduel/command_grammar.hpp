#pragma once

#include <map>
#include <string>
#include <vector>

namespace cyberduel {

// Shell-like word splitting: whitespace separates words outside quotes,
// quotes are stripped, backslash escapes the next char outside single quotes.
std::vector<std::string> split_words(const std::string& line);

// Splits on ';' that are outside quotes. "a; b;c" -> {"a", " b", "c"}.
std::vector<std::string> split_top_level(const std::string& line);

// Number of top-level ';' separators in `line`.
std::size_t count_separators(const std::string& line);

// First word of the entry, or "" when the line is blank.
std::string head_token(const std::string& line);

struct ArgShape {
  std::size_t min_args = 0;
  std::size_t max_args = 0;
};

// Decides whether a submitted line is a "valid command": every top-level
// segment must start with an allowlisted head and carry an argument count
// inside that head's shape.
class CommandGrammar {
 public:
  CommandGrammar() = default;
  explicit CommandGrammar(std::map<std::string, ArgShape> rules) : rules_(std::move(rules)) {}

  static CommandGrammar standard();

  void allow(std::string head, ArgShape shape) { rules_[std::move(head)] = shape; }
  bool accepts(const std::string& line) const;
  const std::map<std::string, ArgShape>& rules() const { return rules_; }

 private:
  std::map<std::string, ArgShape> rules_;
};

}  // namespace cyberduel
