#include <doctest.h>

#include "cyberduel/health.hpp"
#include "oracles.hpp"

using namespace cyberduel;

namespace {

GameState running(double health = 100, double dc = 1) {
  GameConfig c;
  c.default_health = health;
  c.damage_constant = dc;
  auto s = new_game("g", c, {"alice", "bob"}, default_class_pool(), 3);
  s.phase = GamePhase::Running;
  return s;
}

std::string unit_of(const GameState& s, const std::string& p, std::size_t i) {
  return s.player(p).realm.units[i].unit_id;
}

}  // namespace

TEST_CASE("unit_health evaluates the linear law") {
  CHECK(unit_health(100, 30, 1) == 70);
  CHECK(unit_health(100, 0, 1) == 100);
  CHECK(unit_health(1, 1, 1) == 0);
  CHECK(unit_health(10, 100, 1) == 0);
  CHECK(unit_health(50, 2.5, 4) == 40);
}

TEST_CASE("apply_tick damages only the down set") {
  auto s = running();
  const auto u1 = unit_of(s, "alice", 0);
  const auto next = apply_tick(s, {0, {u1}}, 5);
  CHECK(find_unit(next, u1)->health == 95);
  CHECK(find_unit(next, unit_of(s, "alice", 1))->health == 100);

  const auto idle = apply_tick(s, {}, 5);
  for (const auto& u : game_units(idle)) CHECK(u.health == 100);
}

TEST_CASE("many small ticks equal one large tick") {
  auto s = running();
  const auto u1 = unit_of(s, "bob", 2);
  auto stepped = s;
  for (int i = 0; i < 100; ++i) stepped = apply_tick(stepped, {0, {u1}}, 1);
  const auto once = apply_tick(s, {0, {u1}}, 100);
  CHECK(find_unit(stepped, u1)->health == find_unit(once, u1)->health);
  CHECK(find_unit(once, u1)->health == 0);
  CHECK_FALSE(find_unit(once, u1)->alive);
}

TEST_CASE("health follows the per-second oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const double ch = 1 + static_cast<double>(rng.below(200));
    const double dc = 0.25 * static_cast<double>(1 + rng.below(12));
    const double t = static_cast<double>(rng.below(4000)) / 10.0;
    CHECK(unit_health(ch, t, dc) == doctest::Approx(oracle::health_loop(ch, t, dc)).epsilon(1e-12));
  }
}

TEST_CASE("apply_tick rejects unknown units and bad intervals without side effects") {
  auto s = running();
  const auto before = s;
  CHECK_THROWS_AS(apply_tick_in_place(s, {0, {"ghost"}}, 1), Rejected);
  CHECK(s == before);
  CHECK_THROWS_AS(apply_tick(s, {}, 0), Rejected);
  CHECK_THROWS_AS(apply_tick(s, {}, -1), Rejected);
  s.phase = GamePhase::Lobby;
  CHECK_THROWS_AS(apply_tick(s, {}, 1), Rejected);
}

TEST_CASE("health is monotone and clamped under random ticks") {
  Rng rng(5);
  auto s = running(30, 2);
  const auto units = game_units(s);
  for (int step = 0; step < 300; ++step) {
    DownSet d;
    for (const auto& u : units)
      if (rng.below(3) == 0) d.unit_ids.insert(u.unit_id);
    const auto next = apply_tick(s, d, 0.1 + rng.unit());
    for (const auto& u : units) {
      const auto* a = find_unit(s, u.unit_id);
      const auto* b = find_unit(next, u.unit_id);
      CHECK(b->health <= a->health);
      CHECK(b->health >= 0);
    }
    for (const auto& p : s.players)
      if (is_defeated(s, p.name)) CHECK(is_defeated(next, p.name));
    s = next;
  }
}

TEST_CASE("sudden death destroys on the first down interval") {
  auto s = running(1);
  const auto u = unit_of(s, "alice", 0);
  const auto next = apply_tick(s, {0, {u}}, 1);
  CHECK(find_unit(next, u)->health == 0);
  CHECK_FALSE(find_unit(next, u)->alive);
}

TEST_CASE("defeat needs every unit at zero") {
  auto s = running();
  CHECK_FALSE(is_defeated(s, "alice"));
  auto& units = s.player("alice").realm.units;
  for (auto& u : units) u.health = 0;
  CHECK(is_defeated(s, "alice"));
  units[1].health = 0.5;
  CHECK_FALSE(is_defeated(s, "alice"));
  CHECK(is_defeated(s, "alice", 2.0 / 3.0));
  CHECK_FALSE(is_defeated(s, "alice", 1.0));
}

TEST_CASE("score helpers") {
  auto s = running();
  auto& p = s.player("bob");
  p.realm.units[0].health = 0;
  p.realm.units[0].alive = false;
  p.realm.units[1].health = 40;
  CHECK(total_health(p) == 140);
  CHECK(alive_units(p) == 2);
}
