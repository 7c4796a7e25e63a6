#include "cyberduel/game_server.hpp"

#include <algorithm>
#include <deque>
#include <iostream>

#include "cyberduel/health.hpp"
#include "cyberduel/topic.hpp"

namespace cyberduel {

MatchClock initial_clock(const GameState& state) {
  MatchClock c;
  c.mode = state.config.mode;
  c.time_limit = state.config.time_limit;
  if (c.mode == GameMode::Speed) {
    for (const auto& p : state.players) c.remaining[p.name] = state.config.clock_budget;
    c.active_player = state.players.front().name;
  }
  return c;
}

namespace {

std::optional<MatchResult> sole_survivor(const std::vector<std::string>& standing, const char* reason) {
  if (standing.size() == 1) return MatchResult{standing.front(), false, reason};
  if (standing.empty()) return MatchResult{std::nullopt, true, reason};
  return std::nullopt;
}

std::optional<MatchResult> time_result(const GameState& state) {
  const Player* best = nullptr;
  bool tied = false;
  for (const auto& p : state.players) {
    if (!best) {
      best = &p;
      continue;
    }
    const double hp = total_health(p), hb = total_health(*best);
    int cmp = hp > hb ? 1 : hp < hb ? -1 : 0;
    if (cmp == 0 && state.config.tiebreak_alive_units) {
      const auto ap = alive_units(p), ab = alive_units(*best);
      cmp = ap > ab ? 1 : ap < ab ? -1 : 0;
    }
    if (cmp > 0) {
      best = &p;
      tied = false;
    } else if (cmp == 0) {
      tied = true;
    }
  }
  if (tied) return MatchResult{std::nullopt, true, "time expired, tied"};
  return MatchResult{best->name, false, "time expired"};
}

}  // namespace

std::optional<MatchResult> evaluate_win(const GameState& state, const MatchClock& clock) {
  if (state.phase != GamePhase::Running) return std::nullopt;
  std::vector<std::string> standing;
  switch (state.config.mode) {
    case GameMode::Objective:
      for (const auto& p : state.players)
        if (!is_defeated(state, p.name, state.config.defeat_fraction)) standing.push_back(p.name);
      return sole_survivor(standing, "last hacker alive");
    case GameMode::Time:
      if (clock.elapsed < clock.time_limit) return std::nullopt;
      return time_result(state);
    case GameMode::Speed:
      for (const auto& p : state.players) {
        auto it = clock.remaining.find(p.name);
        const bool out_of_time = it != clock.remaining.end() && it->second <= Millis{0};
        if (!out_of_time && !is_defeated(state, p.name)) standing.push_back(p.name);
      }
      return sole_survivor(standing, "clock exhausted");
  }
  return std::nullopt;
}

struct GameServer::Session {
  std::mutex mu;
  GameState state;
  MatchClock clock;
  Rng rng;
  std::size_t units_per_player = 0;
  std::set<std::string> registered;
  std::map<std::string, Timestamp> accounted_until;
  // Receive time of each player's last accepted report.
  std::map<std::string, Timestamp> last_heard;
  std::set<std::pair<std::string, std::int64_t>> seen_reports;
  Timestamp clock_mark{0};
  Timestamp last_reshuffle{0};
  bool paused = false;
  std::optional<ledger::Ledger> ledger;
  std::deque<protocol::HealthEvent> recent;
};

namespace {

constexpr std::size_t kRecentEvents = 256;
constexpr std::uint64_t kReshuffleSalt = 0x9e3779b97f4a7c15ULL;

const UnitClass* class_of(const GameState& s, const std::string& class_id) {
  for (const auto& c : s.class_pool)
    if (c.class_id == class_id) return &c;
  return nullptr;
}

protocol::RealmAssignment assignment(const GameState& s, const Player& p) {
  protocol::RealmAssignment a;
  a.player = p.name;
  for (const auto& u : p.realm.units) {
    const auto* cls = class_of(s, u.class_id);
    a.units.push_back({u.unit_id, u.class_id, u.port, u.fingerprint, cls ? cls->vuln_key : ""});
  }
  return a;
}

}  // namespace

GameServer::GameServer(InProcessBus& bus, const Clock& clock) : bus_(bus), clock_(clock) {}

GameServer::~GameServer() { detach(); }

void GameServer::attach() {
  std::lock_guard lk(mu_);
  if (!subs_.empty()) return;
  subs_.push_back(bus_.subscribe("game/+/player/+/status",
                                 [this](const std::string& t, const std::string& p) { on_status(t, p); }));
  subs_.push_back(
      bus_.subscribe("game/+/control", [this](const std::string& t, const std::string& p) { on_control(t, p); }));
}

void GameServer::detach() {
  std::lock_guard lk(mu_);
  for (auto id : subs_) bus_.unsubscribe(id);
  subs_.clear();
}

void GameServer::set_logger(std::function<void(const std::string&)> log) {
  std::lock_guard lk(mu_);
  log_ = std::move(log);
}

void GameServer::log(const std::string& line) {
  std::function<void(const std::string&)> sink;
  {
    std::lock_guard lk(mu_);
    sink = log_;
  }
  if (sink) sink(line);
}

std::uint64_t GameServer::rejected_messages() const {
  std::lock_guard lk(mu_);
  return rejected_;
}

void GameServer::create_game(const std::string& game_id, const GameConfig& config,
                             const std::vector<std::string>& players, std::vector<UnitClass> pool,
                             std::size_t units_per_player, LedgerOptions ledger) {
  for (const auto& n : players) topic_for(game_id, n, Channel::Status);
  auto s = std::make_shared<Session>();
  s->state = new_game(game_id, config, players, std::move(pool), units_per_player);
  s->clock = initial_clock(s->state);
  s->rng = Rng(config.rng_seed ^ kReshuffleSalt);
  s->units_per_player = units_per_player;
  if (ledger.enabled) s->ledger.emplace(ledger.difficulty_bits, ledger.file);
  std::lock_guard lk(mu_);
  if (!sessions_.emplace(game_id, std::move(s)).second) throw Rejected("game '" + game_id + "' already exists");
}

std::vector<std::string> GameServer::games() const {
  std::lock_guard lk(mu_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

bool GameServer::has_game(const std::string& game_id) const {
  std::lock_guard lk(mu_);
  return sessions_.count(game_id) > 0;
}

std::shared_ptr<GameServer::Session> GameServer::session(const std::string& game_id) const {
  std::lock_guard lk(mu_);
  auto it = sessions_.find(game_id);
  if (it == sessions_.end()) throw Rejected("unknown game '" + game_id + "'");
  return it->second;
}

GameState GameServer::snapshot(const std::string& game_id) const {
  auto s = session(game_id);
  std::lock_guard lk(s->mu);
  return s->state;
}

MatchClock GameServer::clock_snapshot(const std::string& game_id) const {
  auto s = session(game_id);
  std::lock_guard lk(s->mu);
  return s->clock;
}

bool GameServer::paused(const std::string& game_id) const {
  auto s = session(game_id);
  std::lock_guard lk(s->mu);
  return s->paused;
}

bool GameServer::all_registered(const std::string& game_id) const {
  auto s = session(game_id);
  std::lock_guard lk(s->mu);
  return s->registered.size() == s->state.players.size();
}

std::vector<protocol::HealthEvent> GameServer::recent_events(const std::string& game_id) const {
  auto s = session(game_id);
  std::lock_guard lk(s->mu);
  return {s->recent.begin(), s->recent.end()};
}

std::vector<ledger::LedgerBlock> GameServer::ledger_blocks(const std::string& game_id) const {
  auto s = session(game_id);
  std::lock_guard lk(s->mu);
  if (!s->ledger) return {};
  return s->ledger->blocks();
}

namespace {

protocol::ScoreUpdate make_score(const GameState& st, const MatchClock& clock, bool paused, Timestamp now) {
  protocol::ScoreUpdate u;
  u.tick = st.tick;
  u.at = now;
  u.phase = to_string(st.phase);
  u.paused = paused;
  for (const auto& p : st.players) {
    protocol::PlayerScore ps;
    ps.name = p.name;
    ps.total_health = total_health(p);
    ps.alive_units = static_cast<std::uint32_t>(alive_units(p));
    ps.units = static_cast<std::uint32_t>(p.realm.units.size());
    if (auto it = clock.remaining.find(p.name); it != clock.remaining.end())
      ps.clock_remaining_ms = it->second.count();
    u.players.push_back(ps);
  }
  u.active_player = clock.active_player;
  u.winner = st.winner;
  u.draw = st.draw;
  return u;
}

void require_running(const GameState& st, bool paused) {
  if (st.phase != GamePhase::Running) throw Rejected("game is not running");
  if (paused) throw Rejected("game is paused");
}

}  // namespace

protocol::ScoreUpdate GameServer::score(const std::string& game_id) const {
  auto s = session(game_id);
  std::lock_guard lk(s->mu);
  return make_score(s->state, s->clock, s->paused, s->clock_mark);
}

void GameServer::queue(const Topic& topic, const protocol::Message& m) {
  bus_.enqueue(topic.path, protocol::encode_payload(m));
}

void GameServer::sync_clock(Session& s, Timestamp now) {
  if (now <= s.clock_mark) return;
  if (s.state.phase == GamePhase::Running && !s.paused) {
    const Millis d = now - s.clock_mark;
    s.clock.elapsed += d;
    if (s.clock.mode == GameMode::Speed && s.clock.active_player) {
      auto& r = s.clock.remaining[*s.clock.active_player];
      r = std::max(Millis{0}, r - d);
    }
  }
  s.clock_mark = now;
}

void GameServer::publish_score(Session& s, Timestamp now) {
  const auto u = make_score(s.state, s.clock, s.paused, now);
  for (const auto& p : s.state.players) queue(topic_for(s.state.game_id, p.name, Channel::Score), u);
}

void GameServer::send_opponent_info(Session& s, const std::string& player) {
  const auto& p = s.state.player(player);
  const auto& opp = s.state.player(p.opponent);
  const std::string ip = s.registered.count(opp.name) ? opp.host_address : "";
  queue(topic_for(s.state.game_id, p.name, Channel::Opponent), protocol::OpponentInfo{p.name, opp.name, ip});
}

void GameServer::record(Session& s, const protocol::Message& m) {
  if (s.ledger) s.ledger->append(protocol::encode_payload(m));
}

void GameServer::emit_health(Session& s, const std::string& unit_id, const char* cause, Timestamp now) {
  const auto* u = find_unit(s.state, unit_id);
  protocol::HealthEvent e{s.state.tick, now, u->owner, u->unit_id, u->health, u->alive, cause};
  queue(topic_for(s.state.game_id, u->owner, Channel::Events), e);
  s.recent.push_back(e);
  if (s.recent.size() > kRecentEvents) s.recent.pop_front();
}

void GameServer::charge(Session& s, const std::string& player, const std::set<std::string>& down, Timestamp now,
                        const char* cause) {
  const Millis dt = now - s.accounted_until[player];
  s.accounted_until[player] = now;
  if (dt <= Millis{0}) return;
  const auto changed = apply_tick_in_place(s.state, DownSet{s.state.tick + 1, down}, to_seconds(dt));
  for (const auto& id : changed) emit_health(s, id, cause, now);
}

void GameServer::finish_if_won(Session& s, Timestamp now) {
  const auto result = evaluate_win(s.state, s.clock);
  if (!result) return;
  s.state.phase = GamePhase::Finished;
  s.state.winner = result->winner;
  s.state.draw = result->draw;
  log(s.state.game_id + ": finished (" + result->reason + "), " +
      (result->winner ? "winner " + *result->winner : std::string("draw")));
  (void)now;
}

void GameServer::press(Session& s, const std::string& player, Timestamp now) {
  if (s.state.config.mode != GameMode::Speed) throw Rejected("clock press outside speed mode");
  require_running(s.state, s.paused);
  sync_clock(s, now);
  if (s.clock.active_player != player) throw Rejected("'" + player + "' is not the active player");
  s.clock.active_player = s.state.player(player).opponent;
}

void GameServer::reshuffle(Session& s, Timestamp now) {
  const auto& interval = s.state.config.reshuffle_interval;
  if (!interval || now - s.last_reshuffle < *interval) return;
  s.last_reshuffle = now;
  for (std::size_t i = 0; i < s.state.players.size(); ++i) {
    const auto& p = s.state.players[i];
    std::vector<std::string> living;
    for (const auto& u : p.realm.units)
      if (u.alive) living.push_back(u.unit_id);
    if (living.empty()) continue;
    const auto victim = living[s.rng.below(living.size())];
    const auto owner = p.name;
    s.state = reshuffle_unit(s.state, owner, victim, s.rng);
    const auto& fresh = s.state.players[i].realm.units;
    for (const auto& u : fresh)
      if (std::find(living.begin(), living.end(), u.unit_id) == living.end() && u.alive)
        emit_health(s, u.unit_id, "reshuffle", now);
    queue(topic_for(s.state.game_id, owner, Channel::Events), assignment(s.state, s.state.players[i]));
  }
}

protocol::RegisterAck GameServer::register_player(const std::string& game_id,
                                                  const protocol::RegisterRequest& req) {
  auto s = session(game_id);
  protocol::RegisterAck ack{req.player, false, ""};
  {
    std::lock_guard lk(s->mu);
    auto& st = s->state;
    if (!st.has_player(req.player)) {
      ack.reason = "not a player of this game";
    } else if (req.units != s->units_per_player) {
      ack.reason = "game expects " + std::to_string(s->units_per_player) + " units per player";
    } else if (req.host.empty()) {
      ack.reason = "host address is empty";
    } else if (st.phase == GamePhase::Finished) {
      ack.reason = "game is finished";
    } else {
      ack.accepted = true;
      st.player(req.player).host_address = req.host;
      s->registered.insert(req.player);
    }
    const auto events = topic_for(game_id, req.player, Channel::Events);
    queue(events, ack);
    if (ack.accepted) {
      queue(events, assignment(st, st.player(req.player)));
      if (st.phase == GamePhase::Running) {
        send_opponent_info(*s, req.player);
        for (const auto& p : st.players)
          if (p.opponent == req.player) send_opponent_info(*s, p.name);
      }
    }
  }
  bus_.flush();
  if (!ack.accepted) throw Rejected(req.player + ": " + ack.reason);
  return ack;
}

void GameServer::start_game(const std::string& game_id) {
  auto s = session(game_id);
  {
    std::lock_guard lk(s->mu);
    auto& st = s->state;
    if (st.phase != GamePhase::Lobby) throw Rejected("game has already started");
    for (const auto& p : st.players)
      if (!s->registered.count(p.name)) throw Rejected("player '" + p.name + "' has not registered");
    const auto now = clock_.now();
    st.phase = GamePhase::Running;
    st.started_at = now;
    s->clock = initial_clock(st);
    s->clock_mark = now;
    s->last_reshuffle = now;
    for (const auto& p : st.players) s->accounted_until[p.name] = s->last_heard[p.name] = now;
    for (const auto& p : st.players) send_opponent_info(*s, p.name);
    publish_score(*s, now);
    log(game_id + ": started");
  }
  bus_.flush();
}

void GameServer::pause_game(const std::string& game_id) {
  auto s = session(game_id);
  {
    std::lock_guard lk(s->mu);
    require_running(s->state, s->paused);
    const auto now = clock_.now();
    sync_clock(*s, now);
    s->paused = true;
    publish_score(*s, now);
  }
  bus_.flush();
}

void GameServer::resume_game(const std::string& game_id) {
  auto s = session(game_id);
  {
    std::lock_guard lk(s->mu);
    if (s->state.phase != GamePhase::Running || !s->paused) throw Rejected("game is not paused");
    const auto now = clock_.now();
    sync_clock(*s, now);
    s->paused = false;
    // Time spent paused is neither decay nor clock time.
    for (auto& [name, t] : s->accounted_until) t = s->last_heard[name] = now;
    publish_score(*s, now);
  }
  bus_.flush();
}

void GameServer::clock_press(const std::string& game_id, const std::string& player) {
  auto s = session(game_id);
  {
    std::lock_guard lk(s->mu);
    const auto now = clock_.now();
    press(*s, player, now);
    finish_if_won(*s, now);
    publish_score(*s, now);
  }
  bus_.flush();
}

void GameServer::handle_status_report(const std::string& game_id, const protocol::StatusReport& report) {
  auto s = session(game_id);
  {
    std::lock_guard lk(s->mu);
    auto& st = s->state;
    require_running(st, s->paused);
    if (!st.has_player(report.player_name) || !s->registered.count(report.player_name))
      throw Rejected("unknown player '" + report.player_name + "'");
    if (s->seen_reports.count({report.player_name, report.timestamp.count()})) return;
    auto& realm = st.player(report.player_name).realm;
    std::set<std::string> reported;
    for (const auto& u : report.units) {
      const bool mine = std::any_of(realm.units.begin(), realm.units.end(),
                                    [&](const UnitState& x) { return x.unit_id == u.id; });
      if (!mine) throw Rejected("unknown unit '" + u.id + "' for " + report.player_name);
      reported.insert(u.id);
    }

    const auto now = clock_.now();
    s->seen_reports.insert({report.player_name, report.timestamp.count()});
    sync_clock(*s, now);
    std::set<std::string> down;
    for (const auto& u : realm.units) {
      if (!u.alive) continue;
      const auto it = std::find_if(report.units.begin(), report.units.end(),
                                   [&](const protocol::UnitReport& r) { return r.id == u.unit_id; });
      // A living unit missing from the report is as good as down.
      if (it == report.units.end() || it->code == StatusCode::Down) down.insert(u.unit_id);
    }
    for (auto& u : realm.units)
      if (u.alive && !down.count(u.unit_id)) u.status = StatusCode::Up;
    charge(*s, report.player_name, down, now, "decay");
    s->last_heard[report.player_name] = now;

    if (s->ledger) {
      auto entry = report;
      for (auto& u : entry.units) u.health = find_unit(st, u.id)->health;
      record(*s, entry);
    }
    finish_if_won(*s, now);
    publish_score(*s, now);
  }
  bus_.flush();
}

protocol::CaptureVerdict GameServer::handle_capture(const std::string& game_id,
                                                    const protocol::CaptureSubmission& sub) {
  auto s = session(game_id);
  protocol::CaptureVerdict v{sub.attacker, sub.claimed_fingerprint, sub.timestamp, false, "", ""};
  {
    std::lock_guard lk(s->mu);
    auto& st = s->state;
    const UnitState* target = nullptr;
    if (!st.has_player(sub.attacker)) {
      v.reason = "unknown player";
    } else if (st.phase != GamePhase::Running) {
      v.reason = "game is not running";
    } else if (s->paused) {
      v.reason = "game is paused";
    } else if (!is_lower_hex(sub.claimed_fingerprint, 64)) {
      v.reason = "malformed fingerprint";
    } else if (!(target = find_unit_by_fingerprint(st, sub.claimed_fingerprint))) {
      v.reason = "unknown fingerprint";
    } else if (target->owner == sub.attacker) {
      v.reason = "own unit";
    } else if (target->owner != st.player(sub.attacker).opponent) {
      v.reason = "not an opponent unit";
    } else if (!target->alive) {
      v.reason = "unit already destroyed";
    } else {
      v.accepted = true;
      v.unit_id = target->unit_id;
    }
    const auto now = clock_.now();
    if (v.accepted) {
      sync_clock(*s, now);
      auto* u = find_unit(st, v.unit_id);
      u->health = 0.0;
      u->alive = false;
      u->status = StatusCode::Down;
      emit_health(*s, u->unit_id, "capture", now);
      record(*s, v);
      log(game_id + ": " + sub.attacker + " captured " + v.unit_id);
    }
    if (st.has_player(sub.attacker)) queue(topic_for(game_id, sub.attacker, Channel::Events), v);
    if (v.accepted) {
      finish_if_won(*s, now);
      publish_score(*s, now);
    }
  }
  bus_.flush();
  return v;
}

void GameServer::handle_command(const std::string& game_id, const CommandEvent& event) {
  if (event.kind != EventKind::CommandSubmit || !event.valid) return;
  auto s = session(game_id);
  {
    std::lock_guard lk(s->mu);
    const auto& st = s->state;
    if (st.config.mode != GameMode::Speed || st.phase != GamePhase::Running || s->paused) return;
    if (s->clock.active_player != event.player) return;
    const auto now = clock_.now();
    press(*s, event.player, now);
    finish_if_won(*s, now);
    publish_score(*s, now);
  }
  bus_.flush();
}

protocol::ControlAck GameServer::handle_control(const std::string& game_id, const protocol::ControlRequest& req) {
  protocol::ControlAck ack{req.op, req.player, req.request_id, false, ""};
  try {
    if (req.op == "start") {
      start_game(game_id);
    } else if (req.op == "pause") {
      pause_game(game_id);
    } else if (req.op == "resume") {
      resume_game(game_id);
    } else if (req.op == "clock_press") {
      clock_press(game_id, req.player);
    } else {
      throw Rejected("unknown control op '" + req.op + "'");
    }
    ack.accepted = true;
  } catch (const Rejected& e) {
    ack.reason = e.what();
  }
  publish(bus_, control_topic(game_id), ack);
  return ack;
}

void GameServer::advance(const std::string& game_id) {
  auto s = session(game_id);
  {
    std::lock_guard lk(s->mu);
    auto& st = s->state;
    if (st.phase != GamePhase::Running) return;
    const auto now = clock_.now();
    sync_clock(*s, now);
    if (!s->paused) {
      const Millis grace = 2 * st.config.report_interval;
      for (const auto& p : st.players) {
        if (now - s->last_heard[p.name] <= grace) continue;
        std::set<std::string> down;
        for (const auto& u : p.realm.units)
          if (u.alive) down.insert(u.unit_id);
        charge(*s, p.name, down, now, "silence");
      }
      reshuffle(*s, now);
      finish_if_won(*s, now);
    }
    publish_score(*s, now);
  }
  bus_.flush();
}

void GameServer::advance() {
  for (const auto& id : games()) advance(id);
}

namespace {

// game/{id}/player/{name}/status -> {id, name}
std::pair<std::string, std::string> status_topic_parts(const std::string& topic) {
  const auto a = topic.find('/');
  const auto b = topic.find('/', a + 1);
  const auto c = topic.find('/', b + 1);
  const auto d = topic.find('/', c + 1);
  return {topic.substr(a + 1, b - a - 1), topic.substr(c + 1, d - c - 1)};
}

}  // namespace

void GameServer::on_status(const std::string& topic, const std::string& payload) {
  const auto [game_id, sender] = status_topic_parts(topic);
  try {
    const auto msg = protocol::decode_payload(payload);
    auto check_sender = [&, &sender = sender](const std::string& claimed) {
      if (claimed != sender) throw Rejected("message for '" + claimed + "' on " + sender + "'s topic");
    };
    if (auto* r = std::get_if<protocol::StatusReport>(&msg)) {
      check_sender(r->player_name);
      handle_status_report(game_id, *r);
    } else if (auto* c = std::get_if<protocol::CaptureSubmission>(&msg)) {
      check_sender(c->attacker);
      handle_capture(game_id, *c);
    } else if (auto* g = std::get_if<protocol::RegisterRequest>(&msg)) {
      check_sender(g->player);
      register_player(game_id, *g);
    } else if (auto* e = std::get_if<CommandEvent>(&msg)) {
      check_sender(e->player);
      handle_command(game_id, *e);
    } else {
      throw Rejected("unexpected " + protocol::type_name(msg) + " on status topic");
    }
  } catch (const Error& e) {
    {
      std::lock_guard lk(mu_);
      ++rejected_;
    }
    log(topic + ": rejected: " + e.what());
  }
}

void GameServer::on_control(const std::string& topic, const std::string& payload) {
  const auto game_id = topic.substr(5, topic.size() - 5 - std::string("/control").size());
  try {
    const auto msg = protocol::decode_payload(payload);
    if (auto* r = std::get_if<protocol::ControlRequest>(&msg)) handle_control(game_id, *r);
  } catch (const Error& e) {
    {
      std::lock_guard lk(mu_);
      ++rejected_;
    }
    log(topic + ": rejected: " + e.what());
  }
}

}  // namespace cyberduel
