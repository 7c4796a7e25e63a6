// Runs every acceptance criterion once and prints PASS or FAIL per line.
// Exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <sstream>

#include "cyberduel/bot_model.hpp"
#include "cyberduel/health.hpp"
#include "cyberduel/ledger.hpp"
#include "cyberduel/metrics.hpp"
#include "cyberduel/simulation.hpp"
#include "fuzz.hpp"
#include "harness.hpp"
#include "oracles.hpp"

using namespace cyberduel;

namespace {

struct Failed {
  std::string what;
};

void expect(bool ok, const std::string& what) {
  if (!ok) throw Failed{what};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void within(std::chrono::steady_clock::time_point t0, double limit, const std::string& what) {
  const double s = seconds_since(t0);
  std::ostringstream o;
  o << what << " took " << s << " s, limit " << limit << " s";
  expect(s < limit, o.str());
}

bool close(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

// --- health ---------------------------------------------------------------

void health_law() {
  Rng rng(101);
  for (int i = 0; i < 5000; ++i) {
    const double ch = 1 + static_cast<double>(rng.below(500));
    const double dc = 0.05 + rng.unit() * 5;
    const double t = rng.unit() * 400;
    expect(close(unit_health(ch, t, dc), oracle::health_loop(ch, t, dc), 1e-9), "unit_health vs loop oracle");
  }

  const auto t0 = std::chrono::steady_clock::now();
  GameConfig c;
  c.damage_constant = 0.5;
  auto s = new_game("g", c, {"alice", "bob"}, default_class_pool(), 50);
  s.phase = GamePhase::Running;
  const auto units = game_units(s);
  expect(units.size() == 100, "100 units");
  std::map<std::string, double> downtime;
  for (int step = 0; step < 300; ++step) {
    DownSet d{static_cast<std::uint64_t>(step), {}};
    for (const auto& u : units)
      if (rng.below(3) == 0) d.unit_ids.insert(u.unit_id);
    apply_tick_in_place(s, d, 1.0);
    for (const auto& id : d.unit_ids) downtime[id] += 1.0;
  }
  for (const auto& u : units)
    expect(close(find_unit(s, u.unit_id)->health, oracle::health_loop(100, downtime[u.unit_id], 0.5), 1e-9),
           "100-unit fuzz vs loop oracle");
  within(t0, 1.0, "100-unit fuzz");
}

void sudden_death() {
  harness::Server h;
  GameConfig c;
  c.default_health = 1;
  const auto st = h.start("g", c);
  const auto u = harness::unit_ids(st, "bob")[0];
  h.clock.advance(Millis{1000});
  h.send("g", "bob", {u});
  const auto* after = find_unit(h.server.snapshot("g"), u);
  expect(after->health == 0 && !after->alive, "one down report destroys a health-1 unit");
  const auto events = h.messages<protocol::HealthEvent>("game/g/player/bob/events");
  expect(!events.empty() && events.back().unit_id == u && events.back().health == 0, "destruction event on that tick");
}

void capture() {
  const auto t0 = std::chrono::steady_clock::now();
  harness::Server h;
  const auto st = h.start("g", {}, {"alice", "bob", "carol"});
  auto fp = [&](const std::string& p, std::size_t i) { return st.player(p).realm.units[i].fingerprint; };

  const auto target = harness::unit_ids(st, "bob")[0];
  expect(h.server.handle_capture("g", {"alice", fp("bob", 0), h.clock.now()}).accepted, "correct claim accepted");
  const auto* u = find_unit(h.server.snapshot("g"), target);
  expect(u->health == 0.0 && !u->alive, "captured unit is exactly 0");

  const auto before = h.server.snapshot("g");
  const auto events = h.messages<protocol::HealthEvent>().size();
  const std::vector<protocol::CaptureSubmission> bad = {
      {"alice", fp("alice", 1), h.clock.now()},
      {"alice", fp("bob", 0), h.clock.now()},
      {"alice", std::string(64, 'f'), h.clock.now()},
      {"alice", "not-hex", h.clock.now()},
      {"mallory", fp("bob", 1), h.clock.now()},
  };
  for (const auto& b : bad) expect(!h.server.handle_capture("g", b).accepted, "bad claim refused");
  expect(h.server.snapshot("g") == before, "refused claims leave state alone");
  expect(h.messages<protocol::HealthEvent>().size() == events, "refused claims emit nothing");

  for (std::size_t i = 1; i < 3; ++i) h.server.handle_capture("g", {"alice", fp("bob", i), h.clock.now()});
  expect(is_defeated(h.server.snapshot("g"), "bob"), "bob defeated after three captures");
  within(t0, 1.0, "capture scenario");
}

// --- modes ----------------------------------------------------------------

SimConfig duel(ParticipantKind a, ParticipantKind b, std::uint64_t seed) {
  SimConfig c;
  c.participants = {{"bot", a, {}}, {"victim", b, {}}};
  c.game.rng_seed = seed;
  c.bot.seed = seed;
  return c;
}

void modes() {
  auto t0 = std::chrono::steady_clock::now();
  const auto objective = simulate(duel(ParticipantKind::Bot, ParticipantKind::Scripted, 1));
  expect(objective.final_state.phase == GamePhase::Finished && objective.final_state.winner == "bot",
         "objective: bot wins");
  within(t0, 5.0, "objective simulation");

  t0 = std::chrono::steady_clock::now();
  auto tc = duel(ParticipantKind::Scripted, ParticipantKind::Scripted, 2);
  tc.game.mode = GameMode::Time;
  tc.game.time_limit = Millis{60000};
  const auto draw = simulate(tc);
  expect(draw.final_state.draw && !draw.final_state.winner, "time: symmetric realms draw");
  tc.participants[1].outages = {{0, Millis{10000}, Millis{30000}}};
  const auto time_win = simulate(tc);
  expect(time_win.final_state.winner == "bot", "time: healthier realm wins");
  within(t0, 5.0, "time simulations");

  t0 = std::chrono::steady_clock::now();
  auto sc = duel(ParticipantKind::Scripted, ParticipantKind::Silent, 3);
  sc.game.mode = GameMode::Speed;
  sc.game.clock_budget = Millis{20000};
  sc.game.default_health = 1000;
  const auto speed = simulate(sc);
  expect(speed.final_state.winner == "bot", "speed: opponent of the exhausted clock wins");
  expect(speed.clock.remaining.at("victim") <= Millis{0}, "speed: loser clock exhausted");
  within(t0, 5.0, "speed simulation");
}

// --- metrics --------------------------------------------------------------

std::vector<CommandEvent> random_log(Rng& rng, std::int64_t span_ms, int n) {
  static const char* keys[] = {"a", "l", "s", " ", ";", "\b", "\x7f"};
  static const char* lines[] = {"ls", "ls; pwd", "nmap -Pn 10.0.0.2", "echo 'a;b'; id", "whoami", "cat \"x;y\""};
  std::vector<CommandEvent> log;
  for (int i = 0; i < n; ++i) {
    CommandEvent e;
    e.player = "alice";
    e.timestamp = Timestamp{static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(span_ms)))};
    if (rng.below(3) == 0) {
      e.kind = EventKind::CommandSubmit;
      e.text = lines[rng.below(std::size(lines))];
      e.valid = rng.below(4) != 0;
    } else {
      e.text = keys[rng.below(std::size(keys))];
    }
    log.push_back(e);
  }
  return log;
}

void metrics() {
  Rng rng(202);
  for (int trial = 0; trial < 200; ++trial) {
    const auto log = random_log(rng, 180000, 1 + static_cast<int>(rng.below(300)));
    const double minutes = 3.0;
    expect(close(copm_total(log, minutes), oracle::copm_total(log, minutes), 1e-9), "CoPM total");
    expect(close(cpm(log, minutes), oracle::cpm(log, minutes), 1e-9), "CPM");
    expect(close(epm(log, minutes), oracle::epm(log, minutes), 1e-9), "EPM");
    for (std::int64_t now = 0; now <= 180000; now += 2500)
      expect(close(copm_window(log, Timestamp{now}), oracle::copm_window(log, now), 1e-9), "CoPM window");
    const auto entries = submitted_lines(log);
    if (!entries.empty()) expect(close(cope(entries), oracle::cope(entries), 1e-9), "CoPE");
  }
  expect(close(copm_total(30, 15.0), 2.0, 1e-9), "30 commands in 15 min");
  std::vector<CommandEvent> four;
  for (int i = 0; i < 4; ++i) four.push_back({"alice", Timestamp{i * 2000 + 1000}, EventKind::CommandSubmit, "ls", true});
  expect(close(copm_window(four, Timestamp{10000}), 24.0, 1e-9), "4 commands in 10 s");
}

void hamming() {
  Rng rng(303);
  for (int i = 0; i < 1000; ++i) {
    const auto len = rng.below(40);
    std::string a, b;
    for (std::uint64_t k = 0; k < len; ++k) {
      a.push_back(static_cast<char>(rng.below(256)));
      b.push_back(rng.below(2) ? a.back() : static_cast<char>(rng.below(256)));
    }
    expect(hamming_distance(a, b) == oracle::hamming(a, b), "hamming vs oracle");
  }
  bool refused = false;
  try {
    hamming_distance("abc", "ab");
  } catch (const Rejected&) {
    refused = true;
  }
  expect(refused, "unequal lengths rejected");
}

// --- protocol -------------------------------------------------------------

void protocol_round_trip() {
  Rng rng(404);
  for (int i = 0; i < 10000; ++i) {
    const auto m = fuzz::message(rng);
    const auto bytes = protocol::encode(m);
    const auto back = protocol::decode(bytes);
    expect(back == m && protocol::encode(back) == bytes, "fuzz round-trip");
  }

  harness::Server h;
  const auto st = h.start("g", {});
  h.clock.advance(Millis{1000});
  const auto r = h.report("g", "alice", {harness::unit_ids(st, "alice")[0]});
  h.server.handle_status_report("g", r);
  const auto once = h.server.snapshot("g");
  h.clock.advance(Millis{700});
  h.server.handle_status_report("g", r);
  expect(h.server.snapshot("g") == once, "duplicate StatusReport is a no-op");
}

// --- ledger ---------------------------------------------------------------

void ledger_integrity() {
  using namespace ledger;
  std::vector<LedgerBlock> chain = {genesis()};
  while (chain.size() < 20)
    chain.push_back(make_block(chain.back(), "{\"health\":" + std::to_string(100 - chain.size()) + "}", 0));
  expect(verify_chain(chain).valid, "fresh chain verifies");

  auto flip = [&](std::size_t b, std::size_t byte, int bit) {
    auto t = chain;
    t[b].payload[byte] = static_cast<char>(t[b].payload[byte] ^ (1 << bit));
    const auto r = verify_chain(t);
    expect(!r.valid && r.first_bad_index == b, "bit flip detected at its block");
  };
  const std::size_t target = 11;
  for (std::size_t byte = 0; byte < chain[target].payload.size(); ++byte)
    for (int bit = 0; bit < 8; ++bit) flip(target, byte, bit);
  Rng rng(505);
  for (int i = 0; i < 200; ++i) {
    const auto b = 1 + rng.below(chain.size() - 1);
    flip(b, rng.below(chain[b].payload.size()), static_cast<int>(rng.below(8)));
  }

  auto peer = [&](const std::string& tag) {
    std::vector<LedgerBlock> c = {genesis()};
    while (c.size() < 6) c.push_back(make_block(c.back(), tag + std::to_string(c.size()), 0));
    return c;
  };
  const auto a = peer("a"), b = peer("b");
  const auto& low = to_hex(a.back().hash) < to_hex(b.back().hash) ? a : b;
  expect(resolve({a, b}) == low && resolve({b, a}) == low, "equal lengths go to the lowest tip hash");
  expect(resolve({a, chain}) == chain, "longest valid chain wins");

  const auto t0 = std::chrono::steady_clock::now();
  const auto hard = make_block(genesis(8), "{\"capture\":true}", 8);
  expect(meets_difficulty(hard.hash, 8) && hard.hash[0] == 0, "difficulty 8 block");
  within(t0, 2.0, "difficulty 8 mining");
}

// --- bot ------------------------------------------------------------------

double worst_row_error(const bot::Policy& p) {
  double worst = 0;
  auto row_sum = [&](const auto& row) {
    double s = 0;
    for (const auto& kv : row) s += kv.second;
    worst = std::max(worst, std::fabs(s - 1.0));
  };
  for (const auto& [k, row] : p.transitions.rows()) row_sum(row);
  for (const auto& [phase, m] : p.models)
    for (const auto& table : m.tables)
      for (const auto& [ctx, row] : table) row_sum(row);
  return worst;
}

void bot_model() {
  using namespace bot;
  auto policy = train_policy(default_corpus());
  expect(worst_row_error(policy) <= 1e-9, "stochastic after training");
  expect(policy.transitions.phases().size() <= 5, "|S| <= 5");

  Rng rng(606);
  for (int round = 0; round < 100; ++round) {
    Trace t;
    for (int i = 0; i < 3; ++i) {
      const auto phase = kAllPhases[rng.below(3)];
      policy_predict(policy.models.at(phase), "", "10.0.0.2", rng, DecodeMode::Sample, kMaxCommandLength, &t);
      t.transitions.push_back({phase, rng.below(2) ? AgentAction::Stall : AgentAction::Progress, kAllPhases[rng.below(3)]});
    }
    apply_outcome_penalty(policy, t, false, 0.1);
  }
  expect(worst_row_error(policy) <= 1e-9, "stochastic after 100 penalties");

  bool refused = false;
  try {
    PhaseSet({Phase::Recon, Phase::Scanning, Phase::GainingAccess, Phase::MaintainingAccess, Phase::CoveringTracks,
              Phase::Recon});
  } catch (const Rejected&) {
    refused = true;
  }
  expect(refused, "phase set larger than five refused");

  const auto model = TransitionModel::standard();
  for (int mask = 0; mask < 4; ++mask) {
    KnowledgeBase kb;
    if (mask & 1) kb.who = "bob";
    if (mask & 2) kb.what = "3001";
    const auto pref = preferred_phase(kb);
    const std::optional<Phase> want = !kb.who ? std::optional(Phase::Recon)
                                      : !kb.what ? std::optional(Phase::Scanning)
                                                 : std::nullopt;
    expect(pref == want, "preferred phase follows the knowledge base");
    for (const auto& [key, row] : model.rows()) {
      auto weights = row;
      if (pref) weights[*pref] *= 3.0;
      const auto expected = oracle::normalize(weights);
      for (const auto& [phase, p] : gated_distribution(row, kb, 3.0))
        expect(close(p, expected.at(phase), 1e-12), "gated row vs renormalized oracle");
    }
  }
}

// --- end to end -----------------------------------------------------------

void end_to_end() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto a = simulate(duel(ParticipantKind::Bot, ParticipantKind::Scripted, 7));
  expect(a.final_state.winner == "bot", "bot beats scripted");
  std::size_t captures = 0;
  for (const auto& h : a.transcript.health_samples()) captures += h.cause == "capture";
  expect(captures > 0 && a.captures.at("bot") == captures, "win came by capture");
  const auto b = simulate(duel(ParticipantKind::Bot, ParticipantKind::Scripted, 7));
  expect(a.transcript.to_ndjson() == b.transcript.to_ndjson(), "same seed, byte-identical transcript");
  within(t0, 10.0, "end-to-end");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void()>>> criteria = {
      {"health law matches the per-second oracle; 100-unit fuzz", health_law},
      {"sudden death at default_health 1", sudden_death},
      {"capture sets health to zero; bad claims change nothing", capture},
      {"objective, time and speed victories", modes},
      {"CoPM, CPM, EPM, CoPE match oracles", metrics},
      {"hamming distance matches oracle; unequal lengths rejected", hamming},
      {"protocol fuzz round-trip; duplicate reports idempotent", protocol_round_trip},
      {"ledger tamper detection, resolve and difficulty 8", ledger_integrity},
      {"bot rows stochastic; phase bound; knowledge gating", bot_model},
      {"bot beats scripted by capture, deterministically", end_to_end},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    std::string detail;
    try {
      run();
    } catch (const Failed& f) {
      detail = f.what;
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    if (detail.empty()) {
      std::cout << "PASS  " << name << "\n";
    } else {
      std::cout << "FAIL  " << name << " (" << detail << ")\n";
      ++failures;
    }
  }
  return failures;
}
