#include "cyberduel/simulation.hpp"

#include <algorithm>
#include <limits>
#include <memory>

#include "cyberduel/clock.hpp"
#include "cyberduel/mock_unit.hpp"
#include "cyberduel/player_daemon.hpp"

namespace cyberduel {

std::string to_string(ParticipantKind k) {
  switch (k) {
    case ParticipantKind::Bot: return "bot";
    case ParticipantKind::Scripted: return "scripted";
    case ParticipantKind::Silent: return "silent";
  }
  return "?";
}

ParticipantKind parse_participant_kind(const std::string& s) {
  for (auto k : {ParticipantKind::Bot, ParticipantKind::Scripted, ParticipantKind::Silent})
    if (to_string(k) == s) return k;
  throw Rejected("unknown participant kind '" + s + "'");
}

namespace {

struct Seat {
  Participant who;
  std::unique_ptr<PlayerDaemon> daemon;
  std::unique_ptr<bot::Bot> bot;
  Timestamp next_action{0};
  std::size_t script_pos = 0;
};

Timestamp type_line(PlayerDaemon& d, const std::string& line, Timestamp at, Millis per_key) {
  for (char c : line) {
    d.record_keystroke(c, at);
    at += per_key;
  }
  d.submit_command(line, at);
  return at;
}

}  // namespace

SimResult simulate(const SimConfig& config) {
  if (config.participants.size() < 2) throw Rejected("a simulation needs at least two participants");
  if (config.max_duration <= Millis{0}) throw Rejected("max_duration must be > 0");
  if (config.script.empty() || config.script_period <= Millis{0}) throw Rejected("script must be nonempty");

  ManualClock clock(Timestamp{0});
  InProcessBus bus;
  LocalUnitNetwork network;
  GameServer server(bus, clock);
  server.attach();

  std::vector<std::string> names;
  for (const auto& p : config.participants) names.push_back(p.name);
  server.create_game(config.game_id, config.game, names, config.pool, config.units_per_player, config.ledger);

  SimResult result;
  auto& transcript = result.transcript;
  const auto recorder = bus.subscribe(game_filter(config.game_id), [&](const std::string&, const std::string& p) {
    const auto msg = protocol::decode_payload(p);
    if (const auto* e = std::get_if<CommandEvent>(&msg)) {
      transcript.add(*e);
    } else if (const auto* h = std::get_if<protocol::HealthEvent>(&msg)) {
      transcript.add(HealthSample{h->at, h->player, h->unit_id, h->health, h->tick, h->cause});
    }
  });

  std::vector<Seat> seats;
  for (std::size_t i = 0; i < config.participants.size(); ++i) {
    Seat s;
    s.who = config.participants[i];
    DaemonOptions opts;
    opts.game_id = config.game_id;
    opts.name = s.who.name;
    opts.host_address = "10.0.0." + std::to_string(i + 1);
    opts.units = static_cast<std::uint32_t>(config.units_per_player);
    s.daemon = std::make_unique<PlayerDaemon>(bus, network, clock, opts);
    s.daemon->register_with_server();
    if (!s.daemon->has_realm()) throw Error(s.who.name + " did not receive a realm");
    for (const auto& o : s.who.outages)
      if (o.unit_index >= config.units_per_player || o.to <= o.from)
        throw Rejected("bad outage for " + s.who.name);
    seats.push_back(std::move(s));
  }

  const auto policy = bot::train_policy(config.corpus, config.order);
  for (std::size_t i = 0; i < seats.size(); ++i) {
    if (seats[i].who.kind != ParticipantKind::Bot) continue;
    auto bc = config.bot;
    bc.seed = config.bot.seed + i;
    if (bc.key_candidates.empty()) bc.key_candidates = bot::exploit_keys(config.corpus);
    seats[i].bot = std::make_unique<bot::Bot>(*seats[i].daemon, policy, bc);
  }

  server.start_game(config.game_id);
  const auto mode = to_string(config.game.mode);
  transcript.add(MatchMarker{MatchMarker::Kind::Start, clock.now(), config.game_id, mode, std::nullopt, false});

  const Millis interval = config.game.report_interval;
  Timestamp next_report = clock.now() + interval;
  for (auto& s : seats) s.next_action = clock.now() + (s.bot ? Millis{0} : config.script_period);

  auto running = [&] { return server.snapshot(config.game_id).phase == GamePhase::Running; };
  auto set_outages = [&](Timestamp t) {
    for (auto& s : seats) {
      const auto units = s.daemon->units();
      for (const auto& o : s.who.outages) {
        const auto& proc = units[o.unit_index].process;
        if (t == o.from) proc->stop();
        if (t == o.to) proc->restart();
      }
    }
  };

  while (running() && clock.now() < Timestamp{config.max_duration}) {
    Timestamp t = next_report;
    for (const auto& s : seats) {
      if (s.who.kind != ParticipantKind::Silent) t = std::min(t, s.next_action);
      for (const auto& o : s.who.outages) {
        if (o.from > clock.now()) t = std::min(t, Timestamp{o.from});
        if (o.to > clock.now()) t = std::min(t, Timestamp{o.to});
      }
    }
    clock.set(t);
    set_outages(t);
    if (t == next_report) {
      for (auto& s : seats)
        if (s.who.kind != ParticipantKind::Silent) s.daemon->publish_status(t);
      server.advance(config.game_id);
      next_report += interval;
    }
    for (auto& s : seats) {
      if (s.who.kind == ParticipantKind::Silent || s.next_action != t || !running()) continue;
      if (s.bot) {
        s.next_action = std::max(s.bot->step(t).next_at, t + Millis{1});
      } else {
        // Scripted players defend: anything knocked over outside a planned
        // outage gets restarted.
        const auto units = s.daemon->units();
        for (std::size_t u = 0; u < units.size(); ++u) {
          const bool planned = std::any_of(s.who.outages.begin(), s.who.outages.end(), [&](const Outage& o) {
            return o.unit_index == u && t >= Timestamp{o.from} && t < Timestamp{o.to};
          });
          if (!planned && units[u].alive && !units[u].process->running()) s.daemon->restart_unit(units[u].unit_id);
        }
        const auto& line = config.script[s.script_pos++ % config.script.size()];
        type_line(*s.daemon, line, t, config.bot.keystroke_interval);
        s.next_action = t + config.script_period;
      }
    }
  }
  result.final_state = server.snapshot(config.game_id);
  result.clock = server.clock_snapshot(config.game_id);
  const auto& st = result.final_state;
  transcript.add(MatchMarker{MatchMarker::Kind::End, clock.now(), config.game_id, mode, st.winner, st.draw});

  for (auto& s : seats) {
    if (!s.bot) continue;
    const bool won = st.winner == s.who.name;
    s.bot->finish(won);
    result.captures[s.who.name] = s.bot->captured().size();
    result.policies.emplace(s.who.name, s.bot->policy());
  }
  result.ledger = server.ledger_blocks(config.game_id);
  result.rejected_messages = server.rejected_messages();
  bus.unsubscribe(recorder);
  seats.clear();
  return result;
}

}  // namespace cyberduel
