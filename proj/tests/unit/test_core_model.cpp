#include <doctest.h>

#include <set>

#include "cyberduel/class_pool.hpp"
#include "cyberduel/core_model.hpp"

using namespace cyberduel;

namespace {

GameState two_player(GameConfig c = {}) { return new_game("g", c, {"alice", "bob"}, default_class_pool(), 3); }

}  // namespace

TEST_CASE("new game gives every unit the default health") {
  const auto s = two_player();
  CHECK(game_units(s).size() == 6);
  for (const auto& u : game_units(s)) CHECK(u.health == 100.0);
  CHECK_FALSE(check_invariants(s).has_value());

  GameConfig sudden;
  sudden.default_health = 1;
  for (const auto& u : game_units(two_player(sudden))) CHECK(u.health == 1.0);
}

TEST_CASE("new game rejects bad input") {
  CHECK_THROWS_AS(new_game("g", {}, {"alice", "alice"}, default_class_pool(), 3), Rejected);
  CHECK_THROWS_AS(new_game("g", {}, {"alice"}, default_class_pool(), 3), Rejected);
  CHECK_THROWS_AS(new_game("g", {}, {"alice", "bob"}, default_class_pool(), 0), Rejected);
  CHECK_THROWS_AS(new_game("g", {}, {"alice", "bob"}, {}, 3), Rejected);
  GameConfig c;
  c.damage_constant = 0;
  CHECK_THROWS_AS(new_game("g", c, {"alice", "bob"}, default_class_pool(), 3), Rejected);
}

TEST_CASE("game_units is the disjoint union of realms") {
  const auto s = new_game("g", {}, {"a", "b", "c"}, default_class_pool(), 2);
  CHECK(game_units(s).size() == 6);
  std::set<std::string> ids;
  for (const auto& u : game_units(s)) ids.insert(u.unit_id);
  CHECK(ids.size() == 6);
}

TEST_CASE("opponents form a permutation without fixed points") {
  for (std::size_t n = 2; n <= 6; ++n) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back("p" + std::to_string(i));
    const auto s = new_game("g", {}, names, default_class_pool(), 1);
    std::set<std::string> targets;
    for (const auto& p : s.players) {
      CHECK(p.opponent != p.name);
      targets.insert(p.opponent);
    }
    CHECK(targets.size() == n);
  }
}

TEST_CASE("fingerprints stay distinct across ten thousand births") {
  const auto s = new_game("g", {}, {"alice", "bob"}, default_class_pool(), 5000);
  std::set<std::string> fps;
  for (const auto& u : game_units(s)) {
    CHECK(u.fingerprint.size() == 64);
    fps.insert(u.fingerprint);
  }
  CHECK(fps.size() == 10000);
}

TEST_CASE("same seed gives the same births") {
  GameConfig c;
  c.rng_seed = 42;
  CHECK(two_player(c) == two_player(c));
  c.rng_seed = 43;
  const auto other = two_player(c);
  c.rng_seed = 42;
  CHECK_FALSE(two_player(c) == other);
}

TEST_CASE("repeated classes in one realm get distinct ports") {
  const std::vector<UnitClass> one = {{"solo", "Solo", 3001, "k", ""}};
  const auto s = new_game("g", {}, {"alice", "bob"}, one, 3);
  std::set<std::uint16_t> ports;
  for (const auto& u : s.player("alice").realm.units) ports.insert(u.port);
  CHECK(ports == std::set<std::uint16_t>{3001, 3002, 3003});
}

TEST_CASE("reshuffle replaces a live unit") {
  const auto s = two_player();
  const auto& old = s.player("alice").realm.units[0];
  Rng rng(7);
  const auto next = reshuffle_unit(s, "alice", old.unit_id, rng);
  const auto& fresh = next.player("alice").realm.units[0];
  CHECK(fresh.unit_id != old.unit_id);
  CHECK(fresh.fingerprint != old.fingerprint);
  CHECK(fresh.health == s.config.default_health);
  CHECK_FALSE(check_invariants(next).has_value());

  Rng a(9), b(9);
  CHECK(reshuffle_unit(s, "alice", old.unit_id, a) == reshuffle_unit(s, "alice", old.unit_id, b));
}

TEST_CASE("reshuffle rejects dead and unknown units") {
  auto s = two_player();
  auto& u = s.player("alice").realm.units[1];
  u.health = 0;
  u.alive = false;
  Rng rng(1);
  CHECK_THROWS_AS(reshuffle_unit(s, "alice", u.unit_id, rng), Rejected);
  CHECK_THROWS_AS(reshuffle_unit(s, "alice", "nope", rng), Rejected);
  CHECK_THROWS_AS(reshuffle_unit(s, "carol", u.unit_id, rng), Rejected);
}

TEST_CASE("class pool file round-trips") {
  const auto pool = default_class_pool();
  CHECK(parse_class_pool(format_class_pool(pool)) == pool);
  const auto shipped = load_class_pool(CYBERDUEL_SOURCE_DIR "/data/classes.csv");
  CHECK(shipped.size() == 3);
  CHECK(shipped[0].service_port == 3001);
  CHECK_THROWS_AS(parse_class_pool("class_id,name,port,vuln_key\nx,X,notaport,k\n"), Error);
}
