#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cyberduel/common.hpp"

namespace cyberduel {

enum class StatusCode : int { Up = 200, Down = 400 };

enum class GameMode { Objective, Time, Speed };
enum class GamePhase { Lobby, Running, Finished };

enum class ActionKind { GetOpponentIP, GetFlags, EnterUnit, CaptureUnit, AttackUnit };

std::string to_string(GameMode m);
std::string to_string(GamePhase p);
std::string to_string(ActionKind k);
GameMode parse_game_mode(const std::string& s);
GamePhase parse_game_phase(const std::string& s);

struct UnitClass {
  std::string class_id;
  std::string name;
  std::uint16_t service_port = 0;
  std::string vuln_key;
  std::string description;

  bool operator==(const UnitClass&) const = default;
};

struct UnitState {
  std::string unit_id;
  std::string owner;
  std::string class_id;
  std::uint16_t port = 0;
  double health = 0.0;
  std::string fingerprint;  // 64 lowercase hex chars
  StatusCode status = StatusCode::Up;
  bool alive = true;

  bool operator==(const UnitState&) const = default;
};

struct Realm {
  std::string owner;
  std::vector<UnitState> units;

  bool operator==(const Realm&) const = default;
};

struct Player {
  std::string name;
  Realm realm;
  std::string opponent;
  std::string host_address;

  bool operator==(const Player&) const = default;
};

struct GameConfig {
  GameMode mode = GameMode::Objective;
  double default_health = 100.0;
  double damage_constant = 1.0;  // health per second down
  Millis report_interval{1000};
  Millis time_limit{std::chrono::minutes(15)};
  Millis clock_budget{std::chrono::minutes(5)};
  std::optional<Millis> reshuffle_interval;
  std::uint64_t rng_seed = 0;
  // Objective mode: fraction of a realm that must be destroyed for defeat.
  double defeat_fraction = 1.0;
  // Time mode: break equal health sums by alive-unit count before calling a draw.
  bool tiebreak_alive_units = true;

  bool operator==(const GameConfig&) const = default;
};

void validate(const GameConfig& config);

struct GameState {
  std::string game_id;
  GameConfig config;
  std::vector<UnitClass> class_pool;
  std::vector<Player> players;
  std::uint64_t tick = 0;
  GamePhase phase = GamePhase::Lobby;
  std::optional<std::string> winner;
  bool draw = false;
  Timestamp started_at{0};
  std::uint64_t next_unit_serial = 0;

  const Player& player(const std::string& name) const;
  Player& player(const std::string& name);
  bool has_player(const std::string& name) const;

  bool operator==(const GameState&) const = default;
};

struct ActionRecord {
  std::string actor;
  ActionKind kind = ActionKind::GetOpponentIP;
  std::string payload;
  Timestamp timestamp{0};

  bool operator==(const ActionRecord&) const = default;
};

// Trial classes on ports 3001..3003.
std::vector<UnitClass> default_class_pool();

// Creates a game in the Lobby phase with seeded unit births. Throws Rejected on
// duplicate or empty names, fewer than two players, or an empty class pool.
GameState new_game(std::string game_id, const GameConfig& config,
                   const std::vector<std::string>& player_names,
                   std::vector<UnitClass> class_pool, std::size_t units_per_player);

// Union of every realm, in player order.
std::vector<UnitState> game_units(const GameState& state);

// Replaces a living unit with a fresh birth from the class pool.
GameState reshuffle_unit(const GameState& state, const std::string& owner,
                         const std::string& unit_id, Rng& rng);

// 32 random bytes as 64 lowercase hex chars.
std::string generate_fingerprint(Rng& rng);

const UnitState* find_unit(const GameState& state, const std::string& unit_id);
UnitState* find_unit(GameState& state, const std::string& unit_id);
const UnitState* find_unit_by_fingerprint(const GameState& state, const std::string& fingerprint);

// Checks structural invariants; returns a description of the first violation.
std::optional<std::string> check_invariants(const GameState& state);

}  // namespace cyberduel
