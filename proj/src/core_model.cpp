#include "cyberduel/core_model.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <unordered_set>

namespace cyberduel {

std::string to_string(GameMode m) {
  switch (m) {
    case GameMode::Objective: return "objective";
    case GameMode::Time: return "time";
    case GameMode::Speed: return "speed";
  }
  return "?";
}

std::string to_string(GamePhase p) {
  switch (p) {
    case GamePhase::Lobby: return "lobby";
    case GamePhase::Running: return "running";
    case GamePhase::Finished: return "finished";
  }
  return "?";
}

std::string to_string(ActionKind k) {
  switch (k) {
    case ActionKind::GetOpponentIP: return "GetOpponentIP";
    case ActionKind::GetFlags: return "GetFlags";
    case ActionKind::EnterUnit: return "EnterUnit";
    case ActionKind::CaptureUnit: return "CaptureUnit";
    case ActionKind::AttackUnit: return "AttackUnit";
  }
  return "?";
}

GameMode parse_game_mode(const std::string& s) {
  if (s == "objective") return GameMode::Objective;
  if (s == "time") return GameMode::Time;
  if (s == "speed") return GameMode::Speed;
  throw Rejected("unknown game mode '" + s + "'");
}

GamePhase parse_game_phase(const std::string& s) {
  if (s == "lobby") return GamePhase::Lobby;
  if (s == "running") return GamePhase::Running;
  if (s == "finished") return GamePhase::Finished;
  throw Rejected("unknown game phase '" + s + "'");
}

void validate(const GameConfig& config) {
  if (!(config.default_health >= 1.0)) throw Rejected("default_health must be >= 1");
  if (!(config.damage_constant > 0.0)) throw Rejected("damage_constant must be > 0");
  if (config.report_interval <= Millis{0}) throw Rejected("report_interval must be > 0");
  if (config.mode == GameMode::Time && config.time_limit <= Millis{0})
    throw Rejected("time_limit must be > 0 in time mode");
  if (config.mode == GameMode::Speed && config.clock_budget <= Millis{0})
    throw Rejected("clock_budget must be > 0 in speed mode");
  if (config.reshuffle_interval && *config.reshuffle_interval <= Millis{0})
    throw Rejected("reshuffle_interval must be > 0");
  if (!(config.defeat_fraction > 0.0 && config.defeat_fraction <= 1.0))
    throw Rejected("defeat_fraction must be in (0, 1]");
}

const Player& GameState::player(const std::string& name) const {
  for (const auto& p : players)
    if (p.name == name) return p;
  throw Rejected("unknown player '" + name + "'");
}

Player& GameState::player(const std::string& name) {
  for (auto& p : players)
    if (p.name == name) return p;
  throw Rejected("unknown player '" + name + "'");
}

bool GameState::has_player(const std::string& name) const {
  return std::any_of(players.begin(), players.end(),
                     [&](const Player& p) { return p.name == name; });
}

std::vector<UnitClass> default_class_pool() {
  return {
      {"node-rce", "Node application server", 3001, "query-string-exec",
       "system call from direct program parameters; RCE by query string"},
      {"webgoat-injection", "Web Goat form service", 3002, "unfiltered-form-post",
       "form POST is not filtered; command injection"},
      {"dvwa-ping", "DVWA ping service", 3003, "ping-field-injection",
       "IP ping field is not filtered; command injection"},
  };
}

std::string generate_fingerprint(Rng& rng) {
  std::array<std::uint8_t, 32> bytes{};
  for (std::size_t i = 0; i < bytes.size(); i += 8) {
    std::uint64_t word = rng.next();
    for (std::size_t j = 0; j < 8; ++j) bytes[i + j] = static_cast<std::uint8_t>(word >> (8 * j));
  }
  return hex_encode(bytes.data(), bytes.size());
}

namespace {

void check_pool(const std::vector<UnitClass>& pool) {
  if (pool.empty()) throw Rejected("class pool is empty");
  std::set<std::string> ids;
  for (const auto& c : pool) {
    if (!ids.insert(c.class_id).second) throw Rejected("duplicate class_id '" + c.class_id + "'");
    if (c.service_port < 1024) throw Rejected("class '" + c.class_id + "' port below 1024");
  }
}

std::unordered_set<std::string> fingerprints_of(const GameState& state) {
  std::unordered_set<std::string> out;
  for (const auto& p : state.players)
    for (const auto& u : p.realm.units) out.insert(u.fingerprint);
  return out;
}

// Units of one realm share a host, so a repeated class gets the next free port.
std::uint16_t free_port(std::uint16_t wanted, const std::vector<UnitState>& realm_units) {
  std::set<std::uint16_t> used;
  for (const auto& u : realm_units) used.insert(u.port);
  while (used.count(wanted)) {
    if (wanted == 65535) throw Rejected("no free port left for unit birth");
    ++wanted;
  }
  return wanted;
}

UnitState birth(GameState& state, const std::string& owner, const std::vector<UnitState>& siblings,
                Rng& rng, std::unordered_set<std::string>& taken) {
  const auto& cls = state.class_pool[rng.below(state.class_pool.size())];
  UnitState u;
  u.unit_id = owner + "-u" + std::to_string(state.next_unit_serial++);
  u.owner = owner;
  u.class_id = cls.class_id;
  u.port = free_port(cls.service_port, siblings);
  u.health = state.config.default_health;
  do {
    u.fingerprint = generate_fingerprint(rng);
  } while (!taken.insert(u.fingerprint).second);
  u.status = StatusCode::Up;
  u.alive = true;
  return u;
}

}  // namespace

GameState new_game(std::string game_id, const GameConfig& config,
                   const std::vector<std::string>& player_names,
                   std::vector<UnitClass> class_pool, std::size_t units_per_player) {
  validate(config);
  if (game_id.empty()) throw Rejected("game id is empty");
  if (player_names.size() < 2) throw Rejected("a game needs at least two players");
  if (units_per_player == 0) throw Rejected("units_per_player must be positive");
  std::set<std::string> seen;
  for (const auto& n : player_names) {
    if (n.empty()) throw Rejected("player name is empty");
    if (!seen.insert(n).second) throw Rejected("duplicate player name '" + n + "'");
  }
  check_pool(class_pool);

  GameState state;
  state.game_id = std::move(game_id);
  state.config = config;
  state.class_pool = std::move(class_pool);
  Rng rng(config.rng_seed);
  std::unordered_set<std::string> taken;
  const std::size_t n = player_names.size();
  for (std::size_t i = 0; i < n; ++i) {
    Player p;
    p.name = player_names[i];
    p.opponent = player_names[(i + 1) % n];
    p.realm.owner = p.name;
    for (std::size_t k = 0; k < units_per_player; ++k)
      p.realm.units.push_back(birth(state, p.name, p.realm.units, rng, taken));
    state.players.push_back(std::move(p));
  }
  return state;
}

std::vector<UnitState> game_units(const GameState& state) {
  std::vector<UnitState> out;
  for (const auto& p : state.players)
    out.insert(out.end(), p.realm.units.begin(), p.realm.units.end());
  return out;
}

GameState reshuffle_unit(const GameState& state, const std::string& owner,
                         const std::string& unit_id, Rng& rng) {
  GameState next = state;
  auto& realm = next.player(owner).realm;
  auto it = std::find_if(realm.units.begin(), realm.units.end(),
                         [&](const UnitState& u) { return u.unit_id == unit_id; });
  if (it == realm.units.end()) throw Rejected("unknown unit '" + unit_id + "' for " + owner);
  if (!it->alive) throw Rejected("unit '" + unit_id + "' is destroyed");
  auto taken = fingerprints_of(next);
  std::vector<UnitState> siblings;
  for (const auto& u : realm.units)
    if (u.unit_id != unit_id) siblings.push_back(u);
  *it = birth(next, owner, siblings, rng, taken);
  return next;
}

const UnitState* find_unit(const GameState& state, const std::string& unit_id) {
  for (const auto& p : state.players)
    for (const auto& u : p.realm.units)
      if (u.unit_id == unit_id) return &u;
  return nullptr;
}

UnitState* find_unit(GameState& state, const std::string& unit_id) {
  return const_cast<UnitState*>(find_unit(std::as_const(state), unit_id));
}

const UnitState* find_unit_by_fingerprint(const GameState& state, const std::string& fingerprint) {
  for (const auto& p : state.players)
    for (const auto& u : p.realm.units)
      if (u.fingerprint == fingerprint) return &u;
  return nullptr;
}

std::optional<std::string> check_invariants(const GameState& state) {
  if (state.players.size() < 2) return "fewer than two players";
  std::set<std::string> names;
  std::set<std::string> fps;
  for (const auto& p : state.players) {
    if (p.name.empty()) return "empty player name";
    if (!names.insert(p.name).second) return "duplicate player " + p.name;
    if (p.opponent == p.name) return "player " + p.name + " targets itself";
    if (p.realm.units.empty()) return "empty realm for " + p.name;
    for (const auto& u : p.realm.units) {
      if (u.owner != p.name) return "unit " + u.unit_id + " owner mismatch";
      if (u.alive != (u.health > 0.0)) return "unit " + u.unit_id + " alive flag inconsistent";
      if (u.health < 0.0) return "unit " + u.unit_id + " negative health";
      if (!is_lower_hex(u.fingerprint, 64)) return "unit " + u.unit_id + " malformed fingerprint";
      if (!fps.insert(u.fingerprint).second) return "duplicate fingerprint";
    }
  }
  for (const auto& p : state.players)
    if (!names.count(p.opponent)) return "player " + p.name + " targets unknown opponent";
  const bool finished = state.phase == GamePhase::Finished;
  if (finished != (state.winner.has_value() || state.draw)) return "winner/phase mismatch";
  if (state.winner && state.draw) return "winner and draw both set";
  return std::nullopt;
}

}  // namespace cyberduel
