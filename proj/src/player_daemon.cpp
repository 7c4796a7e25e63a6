#include "cyberduel/player_daemon.hpp"

#include <fstream>
#include <iostream>

#include "cyberduel/topic.hpp"

namespace cyberduel {

namespace {

std::string verdict_key(const std::string& fp, Timestamp ts) { return fp + "@" + std::to_string(ts.count()); }

}  // namespace

PlayerDaemon::PlayerDaemon(Transport& transport, UnitNetwork& network, const Clock& clock,
                           DaemonOptions options, CommandGrammar grammar)
    : transport_(transport),
      network_(network),
      clock_(clock),
      options_(std::move(options)),
      grammar_(std::move(grammar)) {
  auto handler = [this](const std::string& t, const std::string& p) { on_message(t, p); };
  for (auto ch : {Channel::Events, Channel::Score, Channel::Opponent})
    subs_.push_back(transport_.subscribe(topic_for(options_.game_id, options_.name, ch).path, handler));
}

PlayerDaemon::~PlayerDaemon() {
  for (auto id : subs_) transport_.unsubscribe(id);
  std::lock_guard lk(mu_);
  for (const auto& [id, u] : units_) network_.retire(options_.host_address, u.port);
}

void PlayerDaemon::register_with_server() {
  publish(transport_, topic_for(options_.game_id, options_.name, Channel::Status),
          protocol::RegisterRequest{options_.name, options_.host_address, options_.units});
}

bool PlayerDaemon::has_realm() const {
  std::lock_guard lk(mu_);
  return has_realm_;
}

bool PlayerDaemon::registration_rejected() const {
  std::lock_guard lk(mu_);
  return rejected_;
}

bool PlayerDaemon::wait_for_realm(std::chrono::milliseconds timeout) {
  std::unique_lock lk(mu_);
  return cv_.wait_for(lk, timeout, [&] { return has_realm_ || rejected_; }) && has_realm_;
}

void PlayerDaemon::on_message(const std::string&, const std::string& payload) {
  auto msg = protocol::decode_payload(payload);
  std::lock_guard lk(mu_);
  if (auto* a = std::get_if<protocol::RealmAssignment>(&msg)) {
    if (a->player == options_.name) apply_assignment(*a);
  } else if (auto* o = std::get_if<protocol::OpponentInfo>(&msg)) {
    if (o->player == options_.name) opponent_ = *o;
  } else if (auto* s = std::get_if<protocol::ScoreUpdate>(&msg)) {
    score_ = *s;
  } else if (auto* v = std::get_if<protocol::CaptureVerdict>(&msg)) {
    if (v->attacker == options_.name) {
      verdicts_[verdict_key(v->claimed_fingerprint, v->timestamp)] = *v;
      last_verdict_ = *v;
    }
  } else if (auto* h = std::get_if<protocol::HealthEvent>(&msg)) {
    auto it = units_.find(h->unit_id);
    if (it != units_.end()) {
      it->second.alive = h->alive;
      it->second.health = h->health;
    }
  } else if (auto* r = std::get_if<protocol::RegisterAck>(&msg)) {
    if (r->player == options_.name && !r->accepted) {
      rejected_ = true;
      std::cerr << options_.name << ": registration rejected: " << r->reason << '\n';
    }
  }
  cv_.notify_all();
}

void PlayerDaemon::apply_assignment(const protocol::RealmAssignment& a) {
  std::map<std::string, MockUnit> next;
  std::vector<std::string> order;
  for (const auto& au : a.units) {
    order.push_back(au.unit_id);
    auto existing = units_.find(au.unit_id);
    if (existing != units_.end()) {
      next.emplace(au.unit_id, std::move(existing->second));
      units_.erase(existing);
      continue;
    }
    MockUnit u;
    u.unit_id = au.unit_id;
    u.class_id = au.class_id;
    u.port = au.port;
    u.fingerprint = au.fingerprint;
    u.vuln_key = au.vuln_key;
    u.process = std::make_shared<UnitService>(au.unit_id, au.fingerprint, au.vuln_key);
    if (options_.flag_dir) {
      std::filesystem::create_directories(*options_.flag_dir);
      u.flag_file = *options_.flag_dir / (au.unit_id + ".flag");
      std::ofstream(u.flag_file, std::ios::trunc) << au.fingerprint;
    }
    // Retired units free their port before the replacement binds it.
    for (const auto& [id, old] : units_)
      if (old.port == u.port) network_.retire(options_.host_address, old.port);
    u.port = network_.launch(options_.host_address, u.port, u.process);
    next.emplace(au.unit_id, std::move(u));
  }
  for (auto& [id, old] : units_) {
    old.process->stop();
    bool port_reused = false;
    for (const auto& [nid, nu] : next) port_reused |= nu.port == old.port;
    if (!port_reused) network_.retire(options_.host_address, old.port);
    if (!old.flag_file.empty()) std::filesystem::remove(old.flag_file);
  }
  units_ = std::move(next);
  unit_order_ = std::move(order);
  has_realm_ = true;
}

StatusCode PlayerDaemon::probe_unit(const MockUnit& unit) {
  return probe(network_, options_.host_address, unit.port);
}

protocol::StatusReport PlayerDaemon::build_status_report(Timestamp now) {
  std::vector<MockUnit> snapshot = units();
  protocol::StatusReport r;
  r.timestamp = now;
  r.ip = options_.host_address;
  r.player_name = options_.name;
  {
    std::lock_guard lk(mu_);
    r.cmds["count"] = std::to_string(commands_since_report_);
    commands_since_report_ = 0;
    for (auto it = commands_.rbegin(); it != commands_.rend(); ++it) {
      if (it->kind == EventKind::CommandSubmit) {
        r.cmds["last"] = it->text;
        break;
      }
    }
  }
  for (const auto& u : snapshot) {
    protocol::UnitReport ur;
    ur.code = probe_unit(u);
    ur.id = u.unit_id;
    ur.port = u.port;
    ur.health = u.health;
    r.units.push_back(ur);
  }
  return r;
}

std::size_t PlayerDaemon::publish_status(Timestamp now) {
  const auto report = build_status_report(now);
  std::deque<std::string> batch;
  {
    std::lock_guard lk(mu_);
    unsent_.push_back(protocol::encode_payload(report));
    batch.swap(unsent_);
  }
  const auto topic = topic_for(options_.game_id, options_.name, Channel::Status).path;
  std::size_t sent = 0;
  while (!batch.empty()) {
    try {
      transport_.publish(topic, batch.front());
    } catch (const std::exception&) {
      std::lock_guard lk(mu_);
      for (auto it = batch.rbegin(); it != batch.rend(); ++it) unsent_.push_front(*it);
      return sent;
    }
    batch.pop_front();
    ++sent;
  }
  return sent;
}

std::optional<std::string> PlayerDaemon::get_opponent_ip() {
  log_action(ActionKind::GetOpponentIP, "");
  std::lock_guard lk(mu_);
  if (!opponent_ || opponent_->ip.empty()) return std::nullopt;
  return opponent_->ip;
}

std::optional<std::string> PlayerDaemon::opponent() const {
  std::lock_guard lk(mu_);
  if (!opponent_) return std::nullopt;
  return opponent_->opponent;
}

std::vector<std::string> PlayerDaemon::get_flags() {
  log_action(ActionKind::GetFlags, "");
  std::lock_guard lk(mu_);
  std::vector<std::string> out;
  for (const auto& id : unit_order_) {
    const auto& u = units_.at(id);
    if (!u.flag_file.empty()) {
      std::ifstream in(u.flag_file);
      std::string fp;
      in >> fp;
      out.push_back(fp);
    } else {
      out.push_back(u.fingerprint);
    }
  }
  return out;
}

bool PlayerDaemon::scan_port(std::uint16_t port) {
  std::optional<std::string> host;
  {
    std::lock_guard lk(mu_);
    if (opponent_ && !opponent_->ip.empty()) host = opponent_->ip;
  }
  if (!host) return false;
  return probe(network_, *host, port) == StatusCode::Up;
}

std::string PlayerDaemon::enter_unit(const std::string& unit_id) {
  std::lock_guard lk(mu_);
  auto it = units_.find(unit_id);
  if (it == units_.end()) throw Rejected("unknown unit '" + unit_id + "'");
  if (!it->second.alive) throw Rejected("unit '" + unit_id + "' is destroyed");
  actions_.push_back({options_.name, ActionKind::EnterUnit, unit_id, clock_.now()});
  return "session-" + unit_id + "-" + std::to_string(++sessions_);
}

void PlayerDaemon::restart_unit(const std::string& unit_id) {
  std::lock_guard lk(mu_);
  auto it = units_.find(unit_id);
  if (it == units_.end()) throw Rejected("unknown unit '" + unit_id + "'");
  if (!it->second.alive) throw Rejected("unit '" + unit_id + "' is destroyed");
  it->second.process->restart();
}

void PlayerDaemon::require_running() const {
  std::lock_guard lk(mu_);
  if (!score_ || score_->phase != to_string(GamePhase::Running) || score_->paused)
    throw Rejected("game is not running");
}

bool PlayerDaemon::capture_unit(const std::string& claimed_fingerprint) {
  if (!is_lower_hex(claimed_fingerprint, 64)) throw Rejected("fingerprint must be 64 lowercase hex chars");
  require_running();
  const auto ts = clock_.now();
  log_action(ActionKind::CaptureUnit, claimed_fingerprint);
  const auto key = verdict_key(claimed_fingerprint, ts);
  publish(transport_, topic_for(options_.game_id, options_.name, Channel::Status),
          protocol::CaptureSubmission{options_.name, claimed_fingerprint, ts});
  std::unique_lock lk(mu_);
  if (!cv_.wait_for(lk, options_.reply_timeout, [&] { return verdicts_.count(key) > 0; })) return false;
  const bool accepted = verdicts_.at(key).accepted;
  verdicts_.erase(key);
  return accepted;
}

std::string PlayerDaemon::attack_unit(std::uint16_t target_port, const std::string& template_name,
                                      const std::string& argument) {
  std::string request;
  int repeats = 1;
  if (template_name == kTemplateFlood) {
    request = "PING";
    repeats = 32;
  } else if (template_name == kTemplateKill) {
    request = "KILL";
  } else if (template_name == kTemplateKeyGuess) {
    request = "KEY " + argument;
  } else {
    throw Rejected("unknown attack template '" + template_name + "'");
  }
  require_running();
  std::string host;
  {
    std::lock_guard lk(mu_);
    if (!opponent_ || opponent_->ip.empty()) throw Rejected("opponent address unknown");
    host = opponent_->ip;
  }
  log_action(ActionKind::AttackUnit, template_name + " " + std::to_string(target_port));
  if (repeats > 1) {
    int answered = 0;
    for (int i = 0; i < repeats; ++i) answered += network_.exchange(host, target_port, request).has_value();
    return "flood " + std::to_string(answered) + "/" + std::to_string(repeats);
  }
  auto reply = network_.exchange(host, target_port, request);
  return reply ? *reply : "UNREACHABLE";
}

void PlayerDaemon::publish_command(const CommandEvent& e) {
  publish(transport_, topic_for(options_.game_id, options_.name, Channel::Status), e);
}

CommandEvent PlayerDaemon::record_keystroke(char c, Timestamp at) {
  CommandEvent e{options_.name, at, EventKind::Keystroke, std::string(1, c), true};
  {
    std::lock_guard lk(mu_);
    commands_.push_back(e);
  }
  publish_command(e);
  return e;
}

CommandEvent PlayerDaemon::submit_command(const std::string& line, Timestamp at) {
  if (line.empty()) throw Rejected("empty command");
  CommandEvent e{options_.name, at, EventKind::CommandSubmit, line, grammar_.accepts(line)};
  {
    std::lock_guard lk(mu_);
    commands_.push_back(e);
    ++commands_since_report_;
  }
  publish_command(e);
  return e;
}

void PlayerDaemon::log_action(ActionKind kind, std::string payload) {
  std::lock_guard lk(mu_);
  actions_.push_back({options_.name, kind, std::move(payload), clock_.now()});
}

std::vector<MockUnit> PlayerDaemon::units() const {
  std::lock_guard lk(mu_);
  std::vector<MockUnit> out;
  for (const auto& id : unit_order_) out.push_back(units_.at(id));
  return out;
}

std::vector<ActionRecord> PlayerDaemon::actions() const {
  std::lock_guard lk(mu_);
  return actions_;
}

std::vector<CommandEvent> PlayerDaemon::command_log() const {
  std::lock_guard lk(mu_);
  return commands_;
}

GamePhase PlayerDaemon::phase() const {
  std::lock_guard lk(mu_);
  return score_ ? parse_game_phase(score_->phase) : GamePhase::Lobby;
}

std::optional<protocol::ScoreUpdate> PlayerDaemon::last_score() const {
  std::lock_guard lk(mu_);
  return score_;
}

std::optional<protocol::CaptureVerdict> PlayerDaemon::last_verdict() const {
  std::lock_guard lk(mu_);
  return last_verdict_;
}

}  // namespace cyberduel
