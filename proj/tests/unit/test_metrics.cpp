#include <doctest.h>

#include "cyberduel/command_grammar.hpp"
#include "cyberduel/metrics.hpp"
#include "oracles.hpp"

using namespace cyberduel;

namespace {

CommandEvent key(char c, std::int64_t ms) { return {"p", Timestamp{ms}, EventKind::Keystroke, std::string(1, c), false}; }
CommandEvent submit(std::string line, std::int64_t ms, bool valid = true) {
  return {"p", Timestamp{ms}, EventKind::CommandSubmit, std::move(line), valid};
}

std::vector<CommandEvent> synthetic_log(Rng& rng, std::int64_t span_ms, std::size_t n) {
  std::vector<CommandEvent> log;
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(span_ms)));
    switch (rng.below(4)) {
      case 0: log.push_back(submit("ls -la", t, rng.below(4) != 0)); break;
      case 1: log.push_back(key('\b', t)); break;
      case 2: log.push_back(key('\x7f', t)); break;
      default: log.push_back(key(static_cast<char>('a' + rng.below(26)), t));
    }
  }
  return log;
}

}  // namespace

TEST_CASE("copm_total") {
  CHECK(copm_total(30, 15) == 2.0);
  CHECK(copm_total(0, 10) == 0.0);
  CHECK_THROWS_AS(copm_total(1, 0), Rejected);

  std::vector<CommandEvent> log;
  for (int i = 0; i < 30; ++i) log.push_back(submit("ls", i * 30000));
  log.push_back(submit("bogus", 1000, false));
  CHECK(copm_total(log, 15) == 2.0);
}

TEST_CASE("copm_window counts valid submits in the last ten seconds") {
  std::vector<CommandEvent> log = {submit("ls", 1000), submit("ls", 4000), submit("ls", 7000), submit("ls", 10000)};
  CHECK(copm_window(log, Timestamp{10000}) == 24.0);
  CHECK(copm_window(log, Timestamp{11000}) == 18.0);
  CHECK(copm_window({}, Timestamp{5000}) == 0.0);
  log.push_back(submit("nope", 9000, false));
  CHECK(copm_window(log, Timestamp{10000}) == 24.0);
}

TEST_CASE("uniform one-per-second stream gives the same copm both ways") {
  std::vector<CommandEvent> log;
  for (int s = 1; s <= 600; ++s) log.push_back(submit("ls", s * 1000));
  for (std::int64_t now = 10000; now <= 600000; now += 10000) CHECK(copm_window(log, Timestamp{now}) == 60.0);
  CHECK(copm_total(log, 10) == 60.0);
}

TEST_CASE("rate metrics match brute-force scans") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto log = synthetic_log(rng, 900000, 400);
    const double minutes = 15;
    CHECK(copm_total(log, minutes) == oracle::copm_total(log, minutes));
    CHECK(cpm(log, minutes) == oracle::cpm(log, minutes));
    CHECK(epm(log, minutes) == oracle::epm(log, minutes));
    CHECK(cpm(log, minutes) >= epm(log, minutes));
    for (std::int64_t now = 0; now <= 900000; now += 7919)
      CHECK(copm_window(log, Timestamp{now}) == oracle::copm_window(log, now));
  }
}

TEST_CASE("cpm and epm") {
  std::vector<CommandEvent> log;
  for (int i = 0; i < 300; ++i) log.push_back(key('x', i * 1000));
  CHECK(cpm(log, 5) == 60);
  CHECK(epm(log, 5) == 0);
  for (int i = 0; i < 10; ++i) log.push_back(key(kBackspace, i));
  CHECK(epm(log, 5) == 2.0);
  CHECK(cpm({}, 1) == 0);
}

TEST_CASE("cope counts top-level separators") {
  const std::vector<std::string> a = {"ls", "cd /tmp; ls; pwd"};
  CHECK(cope(a) == 2.0);
  const std::vector<std::string> b = {"ls"};
  CHECK(cope(b) == 1.0);
  const std::vector<std::string> c = {"echo \"a;b\""};
  CHECK(cope(c) == 1.0);
  CHECK(cope(c) == oracle::cope(c));
  CHECK_THROWS_AS(cope(std::vector<std::string>{}), Rejected);
}

TEST_CASE("cope matches the tokenizer oracle on random lines") {
  Rng rng(17);
  const std::string alphabet = "ab ;'\"\\";
  for (int trial = 0; trial < 2000; ++trial) {
    std::string line;
    const auto n = rng.below(14);
    for (std::uint64_t i = 0; i < n; ++i) line.push_back(alphabet[rng.below(alphabet.size())]);
    const std::vector<std::string> entries = {line};
    CAPTURE(line);
    CHECK(cope(entries) == oracle::cope(entries));
    CHECK(cope(entries) >= 1.0);
  }
}

TEST_CASE("consistency is head-token repetition") {
  const std::vector<std::string> same = {"nmap a", "nmap b", "nmap c"};
  CHECK(consistency(same) == doctest::Approx(oracle::consistency(same)));
  CHECK(consistency(same) == doctest::Approx(2.0 / 3.0));
  const std::vector<std::string> distinct = {"ls", "pwd", "id"};
  CHECK(consistency(distinct) == 0);
  const std::vector<std::string> one = {"ls"};
  CHECK(consistency(one) == 0);
  const std::vector<std::string> chained = {"ls; pwd", "ls -la"};
  CHECK(consistency(chained) == oracle::consistency(chained));
}

TEST_CASE("hamming distance") {
  CHECK(hamming_distance("nmap -Pn", "nmap -sS") == 2);
  CHECK(hamming_distance("x", "x") == 0);
  CHECK(hamming_distance("", "") == 0);
  CHECK_THROWS_AS(hamming_distance("ab", "abc"), Rejected);
}

TEST_CASE("hamming distance is a metric") {
  Rng rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto len = rng.below(20);
    std::string a, b, c;
    for (std::uint64_t i = 0; i < len; ++i) {
      a.push_back(static_cast<char>('a' + rng.below(3)));
      b.push_back(static_cast<char>('a' + rng.below(3)));
      c.push_back(static_cast<char>('a' + rng.below(3)));
    }
    CHECK(hamming_distance(a, b) == oracle::hamming(a, b));
    CHECK(hamming_distance(a, b) == hamming_distance(b, a));
    CHECK(hamming_distance(a, a) == 0);
    CHECK((hamming_distance(a, b) == 0) == (a == b));
    CHECK(hamming_distance(a, c) <= hamming_distance(a, b) + hamming_distance(b, c));
  }
}

TEST_CASE("snapshot is a pure function of the log") {
  Rng rng(8);
  auto log = synthetic_log(rng, 60000, 200);
  for (auto& e : log) e.player = "p";
  const auto a = snapshot(log, "p", Timestamp{60000}, 1.0);
  const auto b = snapshot(log, "p", Timestamp{60000}, 1.0);
  CHECK(a.copm == b.copm);
  CHECK(a.cpm == b.cpm);
  CHECK(a.cope == b.cope);
  const auto other = snapshot(log, "q", Timestamp{60000}, 1.0);
  CHECK(other.cpm == 0);
}

TEST_CASE("command grammar") {
  const auto g = CommandGrammar::standard();
  CHECK(g.accepts("ls"));
  CHECK(g.accepts("nmap -Pn 10.0.0.2"));
  CHECK(g.accepts("cd /tmp; ls; pwd"));
  CHECK_FALSE(g.accepts("rm -rf /"));
  CHECK_FALSE(g.accepts("pwd now"));
  CHECK_FALSE(g.accepts(""));
  CHECK_FALSE(g.accepts("ls;"));
  CHECK(split_words("echo 'a b' \"c\\\"d\" e\\ f") == std::vector<std::string>{"echo", "a b", "c\"d", "e f"});
  CHECK(split_top_level("a; b;c") == std::vector<std::string>{"a", " b", "c"});
  CHECK(head_token("  ls; pwd") == "ls");
}
