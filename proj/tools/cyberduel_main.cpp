#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include <CLI11.hpp>

#include "cyberduel/bot_agent.hpp"
#include "cyberduel/class_pool.hpp"
#include "cyberduel/game_server.hpp"
#include "cyberduel/health.hpp"
#include "cyberduel/net.hpp"
#include "cyberduel/player_daemon.hpp"
#include "cyberduel/report.hpp"
#include "cyberduel/simulation.hpp"
#include "cyberduel/web_bridge.hpp"

using namespace cyberduel;
using namespace std::chrono_literals;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

std::string default_bind() {
  const char* env = std::getenv("CYBERDUEL_BIND");
  return env && *env ? env : "127.0.0.1:7700";
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

Millis seconds(double s) { return Millis(static_cast<std::int64_t>(s * 1000.0)); }

struct GameFlags {
  std::string mode = "objective";
  double time_limit_s = 900;
  double clock_s = 300;
  double reshuffle_s = 0;
  double health = 100;
  double damage = 1;
  double defeat_fraction = 1.0;
  std::int64_t report_ms = 1000;
  std::uint64_t seed = 0;
  std::size_t units = 3;
  std::string classes;

  void add(CLI::App* app) {
    app->add_option("--mode", mode, "objective | time | speed")->capture_default_str();
    app->add_option("--time-limit", time_limit_s, "Time mode limit, seconds")->capture_default_str();
    app->add_option("--clock", clock_s, "Speed mode budget per player, seconds")->capture_default_str();
    app->add_option("--reshuffle", reshuffle_s, "Seconds between unit reshuffles, 0 = off")->capture_default_str();
    app->add_option("--health", health, "Starting unit health")->capture_default_str();
    app->add_option("--damage", damage, "Health lost per second down")->capture_default_str();
    app->add_option("--defeat-fraction", defeat_fraction, "Share of a realm destroyed for defeat")
        ->capture_default_str();
    app->add_option("--report-interval", report_ms, "Milliseconds between status reports")->capture_default_str();
    app->add_option("--seed", seed, "RNG seed")->capture_default_str();
    app->add_option("--units", units, "Units per player")->capture_default_str();
    app->add_option("--classes", classes, "Class pool CSV (default: built-in pool)");
  }

  GameConfig config() const {
    GameConfig c;
    c.mode = parse_game_mode(mode);
    c.time_limit = seconds(time_limit_s);
    c.clock_budget = seconds(clock_s);
    if (reshuffle_s > 0) c.reshuffle_interval = seconds(reshuffle_s);
    c.default_health = health;
    c.damage_constant = damage;
    c.defeat_fraction = defeat_fraction;
    c.report_interval = Millis(report_ms);
    c.rng_seed = seed;
    validate(c);
    return c;
  }

  std::vector<UnitClass> pool() const { return classes.empty() ? default_class_pool() : load_class_pool(classes); }
};

std::string describe_result(const GameState& st) {
  if (st.winner) return "winner " + *st.winner;
  if (st.draw) return "draw";
  return "no result";
}

// ---------------------------------------------------------------------------

struct GamedFlags {
  std::string bind = default_bind();
  std::string ui_bind = "127.0.0.1:7780";
  std::string ui_dir;
  std::string game = "match";
  std::string players;
  std::string ledger;
  bool decentralized = false;
  unsigned difficulty = 0;
  bool manual_start = false;
  double duration_s = 0;
  bool quiet = false;
  GameFlags g;
};

int run_gamed(const GamedFlags& f) {
  const auto players = split_list(f.players);
  InProcessBus bus;
  SystemClock clock;
  GameServer server(bus, clock);
  if (!f.quiet) server.set_logger([](const std::string& line) { std::cerr << "gamed: " << line << '\n'; });
  server.attach();
  LedgerOptions lo;
  lo.enabled = f.decentralized;
  lo.difficulty_bits = f.difficulty;
  if (!f.ledger.empty()) lo.file = f.ledger;
  const auto config = f.g.config();
  server.create_game(f.game, config, players, f.g.pool(), f.g.units, lo);

  net::TcpBroker broker(bus, net::parse_endpoint(f.bind));
  std::optional<WebBridge> bridge;
  if (!f.ui_bind.empty())
    bridge.emplace(server, bus, net::parse_endpoint(f.ui_bind),
                   f.ui_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(f.ui_dir));
  std::cout << "gamed: game " << f.game << " (" << f.g.mode << ") on port " << broker.port();
  if (bridge) std::cout << ", ui on port " << bridge->port() << " /ws/game/" << f.game;
  std::cout << std::endl;

  const auto began = std::chrono::steady_clock::now();
  while (!g_stop) {
    std::this_thread::sleep_for(config.report_interval);
    const auto st = server.snapshot(f.game);
    if (st.phase == GamePhase::Lobby && !f.manual_start && server.all_registered(f.game)) {
      server.start_game(f.game);
      std::cout << "gamed: started" << std::endl;
    }
    server.advance(f.game);
    if (server.snapshot(f.game).phase == GamePhase::Finished) break;
    if (f.duration_s > 0 && std::chrono::steady_clock::now() - began > seconds(f.duration_s)) break;
  }
  const auto st = server.snapshot(f.game);
  std::cout << "gamed: " << to_string(st.phase) << ", " << describe_result(st) << std::endl;
  // Give remote daemons a moment to read the final score.
  std::this_thread::sleep_for(200ms);
  return 0;
}

// ---------------------------------------------------------------------------

struct DaemonFlags {
  std::string game = "match";
  std::string name;
  std::string server = default_bind();
  std::string host = "127.0.0.1";
  std::string flag_dir;
  std::uint32_t units = 3;
  std::int64_t report_ms = 1000;
  bool interactive = false;

  void add(CLI::App* app) {
    app->add_option("--game", game, "Game id")->capture_default_str();
    app->add_option("--name", name, "Player name")->required();
    app->add_option("--server", server, "Game server address")->capture_default_str();
    app->add_option("--host", host, "Address this player's units bind to")->capture_default_str();
    app->add_option("--flag-dir", flag_dir, "Directory for unit flag files");
    app->add_option("--units", units, "Units to host (must match the game)")->capture_default_str();
    app->add_option("--report-interval", report_ms, "Milliseconds between status reports")->capture_default_str();
  }
};

struct Connected {
  std::unique_ptr<net::TcpClientTransport> link;
  TcpUnitNetwork network;
  SystemClock clock;
  std::unique_ptr<PlayerDaemon> daemon;
};

std::unique_ptr<Connected> connect_daemon(const DaemonFlags& f) {
  auto c = std::make_unique<Connected>();
  c->link = net::TcpClientTransport::connect(net::parse_endpoint(f.server), 3s);
  if (!c->link) throw Error("cannot reach game server at " + f.server);
  c->link->on_disconnect([] { g_stop = true; });
  DaemonOptions o;
  o.game_id = f.game;
  o.name = f.name;
  o.host_address = f.host;
  o.units = f.units;
  if (!f.flag_dir.empty()) o.flag_dir = f.flag_dir;
  c->daemon = std::make_unique<PlayerDaemon>(*c->link, c->network, c->clock, o);
  for (int attempt = 0; attempt < 10 && !g_stop; ++attempt) {
    c->daemon->register_with_server();
    if (c->daemon->wait_for_realm(1s)) break;
    if (c->daemon->registration_rejected()) throw Error("registration rejected");
  }
  if (!c->daemon->has_realm()) throw Error("no realm assignment from " + f.server);
  for (const auto& u : c->daemon->units())
    std::cout << f.name << ": unit " << u.unit_id << " (" << u.class_id << ") on " << f.host << ":" << u.port
              << std::endl;
  return c;
}

// Publishes status reports until the game ends or the process is stopped.
std::thread report_loop(PlayerDaemon& d, const Clock& clock, Millis interval, std::atomic<bool>& done) {
  return std::thread([&d, &clock, interval, &done] {
    while (!g_stop && !done) {
      std::this_thread::sleep_for(interval);
      if (d.phase() == GamePhase::Running) d.publish_status(clock.now());
      if (d.phase() == GamePhase::Finished) done = true;
    }
  });
}

void interactive_command(PlayerDaemon& d, const std::string& line, const Clock& clock) {
  auto t = clock.now();
  for (char c : line) d.record_keystroke(c, t);
  d.submit_command(line, t);
  const auto w = split_words(line);
  if (w.empty()) return;
  try {
    if (w[0] == "getip") {
      std::cout << d.get_opponent_ip().value_or("(unknown)") << '\n';
    } else if (w[0] == "flags") {
      for (const auto& fp : d.get_flags()) std::cout << fp << '\n';
    } else if (w[0] == "enter" && w.size() == 2) {
      std::cout << d.enter_unit(w[1]) << '\n';
    } else if (w[0] == "capture" && w.size() == 2) {
      std::cout << (d.capture_unit(w[1]) ? "accepted" : "rejected") << '\n';
    } else if (w[0] == "attack" && w.size() >= 3) {
      std::cout << d.attack_unit(static_cast<std::uint16_t>(std::stoi(w[1])), w[2], w.size() > 3 ? w[3] : "")
                << '\n';
    } else if (w[0] == "scan" && w.size() == 2) {
      std::cout << (d.scan_port(static_cast<std::uint16_t>(std::stoi(w[1]))) ? "open" : "closed") << '\n';
    }
  } catch (const Rejected& e) {
    std::cout << "rejected: " << e.what() << '\n';
  } catch (const std::invalid_argument&) {
    std::cout << "bad number\n";
  }
}

int run_playerd(const DaemonFlags& f) {
  auto c = connect_daemon(f);
  std::atomic<bool> done{false};
  auto reporter = report_loop(*c->daemon, c->clock, Millis(f.report_ms), done);
  if (f.interactive) {
    std::string line;
    while (!g_stop && !done && std::getline(std::cin, line)) interactive_command(*c->daemon, line, c->clock);
  } else {
    while (!g_stop && !done) std::this_thread::sleep_for(100ms);
  }
  done = true;
  reporter.join();
  if (const auto s = c->daemon->last_score(); s && s->phase == to_string(GamePhase::Finished))
    std::cout << f.name << ": game over, " << (s->winner ? "winner " + *s->winner : std::string("draw")) << std::endl;
  else if (!c->link->connected())
    std::cout << f.name << ": lost connection to the game server" << std::endl;
  return 0;
}

// ---------------------------------------------------------------------------

struct BotFlags {
  DaemonFlags d;
  std::string corpus;
  std::uint64_t seed = 0;
  double alpha = bot::kDefaultAlpha;
  std::size_t order = bot::kDefaultOrder;
};

int run_botd(const BotFlags& f) {
  const auto corpus = f.corpus.empty() ? bot::default_corpus() : bot::load_corpus(f.corpus);
  auto policy = bot::train_policy(corpus, f.order);
  auto c = connect_daemon(f.d);
  bot::BotConfig bc;
  bc.seed = f.seed;
  bc.key_candidates = bot::exploit_keys(corpus);
  bot::Bot agent(*c->daemon, std::move(policy), bc);
  std::atomic<bool> done{false};
  auto reporter = report_loop(*c->daemon, c->clock, Millis(f.d.report_ms), done);
  while (!g_stop && !done && c->daemon->phase() != GamePhase::Running) std::this_thread::sleep_for(50ms);
  while (!g_stop && !done && !agent.forfeited()) {
    const auto r = agent.step(c->clock.now());
    if (!r.command.empty()) std::cout << f.d.name << " [" << bot::to_string(r.phase) << "] " << r.command << std::endl;
    const auto wait = r.next_at - c->clock.now();
    if (wait > Millis{0}) std::this_thread::sleep_for(wait);
  }
  done = true;
  reporter.join();
  const auto s = c->daemon->last_score();
  const bool won = s && s->winner == f.d.name;
  agent.finish(won, f.alpha);
  std::cout << f.d.name << ": " << (won ? "won" : agent.forfeited() ? "forfeited" : "did not win") << ", "
            << agent.captured().size() << " capture(s)" << std::endl;
  return 0;
}

// ---------------------------------------------------------------------------

struct SimFlags {
  std::string players = "bot:bot,victim:scripted";
  double max_duration_s = 1800;
  std::string transcript;
  std::string ledger;
  bool decentralized = false;
  unsigned difficulty = 0;
  std::string corpus;
  GameFlags g;
};

int run_simulate(const SimFlags& f) {
  SimConfig c;
  c.game = f.g.config();
  c.pool = f.g.pool();
  c.units_per_player = f.g.units;
  c.max_duration = seconds(f.max_duration_s);
  c.bot.seed = f.g.seed;
  if (!f.corpus.empty()) c.corpus = bot::load_corpus(f.corpus);
  c.ledger.enabled = f.decentralized;
  c.ledger.difficulty_bits = f.difficulty;
  if (!f.ledger.empty()) c.ledger.file = f.ledger;
  for (const auto& item : split_list(f.players)) {
    const auto colon = item.find(':');
    Participant p;
    p.name = item.substr(0, colon);
    if (colon != std::string::npos) p.kind = parse_participant_kind(item.substr(colon + 1));
    c.participants.push_back(p);
  }
  const auto r = simulate(c);
  if (!f.transcript.empty()) r.transcript.save(f.transcript);
  std::cout << "simulate: " << to_string(r.final_state.phase) << " after "
            << to_seconds(r.transcript.elapsed()) << " s, " << describe_result(r.final_state) << '\n';
  for (const auto& p : r.final_state.players)
    std::cout << "  " << p.name << ": health " << total_health(p) << ", "
              << alive_units(p) << "/" << p.realm.units.size() << " units alive\n";
  for (const auto& [name, n] : r.captures) std::cout << "  " << name << ": " << n << " capture(s)\n";
  if (c.ledger.enabled) std::cout << "  ledger: " << r.ledger.size() << " blocks\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct ReportFlags {
  std::string transcript;
  std::string out;
  std::string timeline;
  std::string series;
};

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error("cannot write " + path);
}

int run_report(const ReportFlags& f) {
  const auto t = Transcript::load(f.transcript);
  write_or_print(f.out, summary_csv(t));
  if (!f.timeline.empty()) write_or_print(f.timeline, health_timeline_csv(t));
  if (!f.series.empty()) write_or_print(f.series, copm_series_csv(t));
  return 0;
}

// ---------------------------------------------------------------------------

struct ControlFlags {
  std::string server = default_bind();
  std::string game = "match";
  std::string op;
  std::string player;
};

int run_control(const ControlFlags& f) {
  auto link = net::TcpClientTransport::connect(net::parse_endpoint(f.server), 3s);
  if (!link) throw Error("cannot reach game server at " + f.server);
  std::mutex mu;
  std::condition_variable cv;
  std::optional<protocol::ControlAck> ack;
  const std::string request_id = "cli-" + std::to_string(::getpid());
  link->subscribe(control_topic(f.game).path, [&](const std::string&, const std::string& payload) {
    const auto msg = protocol::decode_payload(payload);
    if (const auto* a = std::get_if<protocol::ControlAck>(&msg); a && a->request_id == request_id) {
      std::lock_guard lk(mu);
      ack = *a;
      cv.notify_all();
    }
  });
  publish(*link, control_topic(f.game), protocol::ControlRequest{f.op, f.player, request_id});
  std::unique_lock lk(mu);
  if (!cv.wait_for(lk, 3s, [&] { return ack.has_value(); })) throw Error("no acknowledgement from the server");
  std::cout << f.op << ": " << (ack->accepted ? "accepted" : "rejected: " + ack->reason) << '\n';
  return ack->accepted ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::signal(SIGPIPE, SIG_IGN);

  CLI::App app{"Head-to-head attack/defend match engine"};
  app.require_subcommand(1);

  GamedFlags gamed;
  auto* g = app.add_subcommand("gamed", "Run the game server");
  g->add_option("--bind", gamed.bind, "Broker address (env CYBERDUEL_BIND)")->capture_default_str();
  g->add_option("--ui-bind", gamed.ui_bind, "HTTP/websocket address, empty to disable")->capture_default_str();
  g->add_option("--ui-dir", gamed.ui_dir, "Static scoreboard assets");
  g->add_option("--game", gamed.game, "Game id")->capture_default_str();
  g->add_option("--players", gamed.players, "Comma-separated player names")->required();
  g->add_option("--ledger", gamed.ledger, "Append-only ledger file");
  g->add_flag("--decentralized", gamed.decentralized, "Record every transition in the ledger");
  g->add_option("--difficulty", gamed.difficulty, "Proof-of-work bits per ledger block")->capture_default_str();
  g->add_flag("--manual-start", gamed.manual_start, "Wait for a start control message");
  g->add_option("--duration", gamed.duration_s, "Stop after this many seconds, 0 = until finished");
  g->add_flag("--quiet", gamed.quiet, "No per-event log");
  gamed.g.add(g);

  DaemonFlags playerd;
  auto* p = app.add_subcommand("playerd", "Run a player daemon");
  playerd.add(p);
  p->add_flag("--interactive", playerd.interactive, "Read player commands from stdin");

  BotFlags botd;
  auto* b = app.add_subcommand("botd", "Run a bot player");
  botd.d.add(b);
  b->add_option("--corpus", botd.corpus, "Corpus directory (default: built-in corpus)");
  b->add_option("--seed", botd.seed, "Bot RNG seed")->capture_default_str();
  b->add_option("--alpha", botd.alpha, "Outcome penalty rate")->capture_default_str();
  b->add_option("--order", botd.order, "Character model order")->capture_default_str();

  SimFlags sim;
  auto* s = app.add_subcommand("simulate", "Run a seeded match on a simulated clock");
  s->add_option("--players", sim.players, "name:kind list, kind = bot | scripted | silent")->capture_default_str();
  s->add_option("--max-duration", sim.max_duration_s, "Simulated seconds before giving up")->capture_default_str();
  s->add_option("--transcript", sim.transcript, "Write the NDJSON transcript here");
  s->add_option("--ledger", sim.ledger, "Append-only ledger file");
  s->add_flag("--decentralized", sim.decentralized, "Record every transition in the ledger");
  s->add_option("--difficulty", sim.difficulty, "Proof-of-work bits per ledger block")->capture_default_str();
  s->add_option("--corpus", sim.corpus, "Corpus directory (default: built-in corpus)");
  sim.g.add(s);

  ReportFlags rep;
  auto* r = app.add_subcommand("report", "Summarize a transcript as CSV");
  r->add_option("transcript", rep.transcript, "Transcript file")->required();
  r->add_option("--out", rep.out, "Summary CSV path (default: stdout)");
  r->add_option("--timeline", rep.timeline, "Health timeline CSV path");
  r->add_option("--series", rep.series, "Real-time CoPM CSV path");

  ControlFlags ctl;
  auto* c = app.add_subcommand("control", "Send an operator control message");
  c->add_option("--server", ctl.server, "Game server address")->capture_default_str();
  c->add_option("--game", ctl.game, "Game id")->capture_default_str();
  c->add_option("op", ctl.op, "start | pause | resume | clock_press")->required();
  c->add_option("--player", ctl.player, "Player pressing the clock");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*g) return run_gamed(gamed);
    if (*p) return run_playerd(playerd);
    if (*b) return run_botd(botd);
    if (*s) return run_simulate(sim);
    if (*r) return run_report(rep);
    if (*c) return run_control(ctl);
  } catch (const Rejected& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
