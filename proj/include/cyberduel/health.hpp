#pragma once

#include <set>
#include <string>

#include "cyberduel/core_model.hpp"

namespace cyberduel {

// Units that failed their liveness probe for the interval ending at `tick`.
struct DownSet {
  std::uint64_t tick = 0;
  std::set<std::string> unit_ids;
};

// Health after `seconds_down` seconds at `damage_constant` health/second,
// clamped at zero.
double unit_health(double current_health, double seconds_down, double damage_constant);

// Damages every unit in `down` by dt_seconds * dc. Requires a running game and
// dt_seconds > 0; unknown unit ids reject the whole tick.
GameState apply_tick(const GameState& state, const DownSet& down, double dt_seconds);

// In-place variant used by the server's single-writer loop. Returns the ids of
// units whose health changed.
std::set<std::string> apply_tick_in_place(GameState& state, const DownSet& down, double dt_seconds);

// True iff every unit of `player` has health <= 0.
bool is_defeated(const GameState& state, const std::string& player);

// True iff at least `fraction` of the player's units are destroyed.
bool is_defeated(const GameState& state, const std::string& player, double fraction);

double total_health(const Player& player);
std::size_t alive_units(const Player& player);

}  // namespace cyberduel
