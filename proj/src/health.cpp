#include "cyberduel/health.hpp"

#include <algorithm>
#include <cmath>

namespace cyberduel {

double unit_health(double current_health, double seconds_down, double damage_constant) {
  return std::max(0.0, current_health - seconds_down * damage_constant);
}

std::set<std::string> apply_tick_in_place(GameState& state, const DownSet& down, double dt_seconds) {
  if (state.phase != GamePhase::Running) throw Rejected("apply_tick on a game that is not running");
  if (!(dt_seconds > 0.0) || !std::isfinite(dt_seconds)) throw Rejected("dt_seconds must be > 0");
  for (const auto& id : down.unit_ids)
    if (!find_unit(state, id)) throw Rejected("unknown unit '" + id + "' in down set");

  std::set<std::string> changed;
  for (const auto& id : down.unit_ids) {
    auto* u = find_unit(state, id);
    u->status = StatusCode::Down;
    const double next = unit_health(u->health, dt_seconds, state.config.damage_constant);
    if (next != u->health) changed.insert(id);
    u->health = next;
    u->alive = next > 0.0;
  }
  ++state.tick;
  return changed;
}

GameState apply_tick(const GameState& state, const DownSet& down, double dt_seconds) {
  GameState next = state;
  apply_tick_in_place(next, down, dt_seconds);
  return next;
}

bool is_defeated(const GameState& state, const std::string& player) {
  const auto& units = state.player(player).realm.units;
  return std::all_of(units.begin(), units.end(), [](const UnitState& u) { return u.health <= 0.0; });
}

bool is_defeated(const GameState& state, const std::string& player, double fraction) {
  const auto& units = state.player(player).realm.units;
  const auto dead = std::count_if(units.begin(), units.end(),
                                  [](const UnitState& u) { return u.health <= 0.0; });
  // Small slack so 2/3 of 3 units counts as 0.6667 reached.
  return static_cast<double>(dead) + 1e-9 >= fraction * static_cast<double>(units.size());
}

double total_health(const Player& player) {
  double sum = 0.0;
  for (const auto& u : player.realm.units) sum += u.health;
  return sum;
}

std::size_t alive_units(const Player& player) {
  return static_cast<std::size_t>(std::count_if(player.realm.units.begin(), player.realm.units.end(),
                                                [](const UnitState& u) { return u.alive; }));
}

}  // namespace cyberduel
