#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cyberduel/web_bridge.hpp"
#include "cyberduel/websocket.hpp"
#include "harness.hpp"

using namespace cyberduel;
using namespace std::chrono_literals;

namespace {

std::string http_get(std::uint16_t port, const std::string& target) {
  auto s = net::connect_tcp({"127.0.0.1", port}, 2000ms);
  net::send_all(s, "GET " + target + " HTTP/1.1\r\nHost: x\r\n\r\n");
  std::string out;
  while (auto chunk = net::recv_some(s, 2000ms)) {
    if (chunk->empty()) break;
    out += *chunk;
  }
  return out;
}

int status_of(const std::string& response) { return std::stoi(response.substr(9, 3)); }

// Reads messages until `pred` holds; the matching message, or nullopt on timeout.
template <typename T, typename Pred>
std::optional<T> await(ws::Client& c, Pred pred, std::chrono::milliseconds budget = 2000ms) {
  const auto deadline = std::chrono::steady_clock::now() + budget;
  while (std::chrono::steady_clock::now() < deadline) {
    const auto text = c.receive(200ms);
    if (!text) continue;
    const auto m = protocol::decode_payload(*text);
    if (const auto* x = std::get_if<T>(&m); x && pred(*x)) return *x;
  }
  return std::nullopt;
}

std::vector<protocol::Message> drain(ws::Client& c, std::chrono::milliseconds quiet = 300ms) {
  std::vector<protocol::Message> out;
  while (auto text = c.receive(quiet)) out.push_back(protocol::decode_payload(*text));
  return out;
}

}  // namespace

TEST_CASE("accept key matches the RFC example") {
  CHECK(ws::accept_key("dGhlIHNhbXBsZSBub25jZQ==") == "s3pPLMBiTxaQ9kYGzzhZRbK+xOo=");
}

TEST_CASE("frame parser handles masks, lengths and splits") {
  for (std::size_t n : {0u, 5u, 125u, 126u, 300u, 70000u}) {
    const std::string payload(n, 'x');
    const auto masked = ws::encode_frame(ws::Opcode::Text, payload, 0xa1b2c3d4u);
    ws::FrameParser p;
    p.feed(masked.substr(0, masked.size() / 2));
    if (n > 1) CHECK_FALSE(p.next().has_value());
    p.feed(masked.substr(masked.size() / 2));
    const auto f = p.next();
    REQUIRE(f);
    CHECK(f->payload == payload);
    CHECK(f->opcode == ws::Opcode::Text);
  }
  ws::FrameParser big;
  big.feed(ws::encode_frame(ws::Opcode::Binary, std::string(2048, 'y')));
  CHECK_THROWS_AS(big.next(1024), Error);
}

TEST_CASE("ui sees a capture within two report intervals") {
  harness::Server h;
  const auto st = h.start("g", {});
  WebBridge bridge(h.server, h.bus, {"127.0.0.1", 0});
  auto c = ws::Client::connect({"127.0.0.1", bridge.port()}, "/ws/game/g", 2000ms);
  REQUIRE(c);
  const auto snapshot = drain(*c);
  std::size_t units = 0;
  for (const auto& m : snapshot) units += std::holds_alternative<protocol::HealthEvent>(m);
  CHECK(units == 6);
  CHECK(std::holds_alternative<protocol::ScoreUpdate>(snapshot.back()));

  const auto target = st.player("bob").realm.units[0];
  const auto t0 = std::chrono::steady_clock::now();
  REQUIRE(h.server.handle_capture("g", {"alice", target.fingerprint, h.clock.now()}).accepted);
  const auto seen = await<protocol::HealthEvent>(
      *c, [&](const protocol::HealthEvent& e) { return e.unit_id == target.unit_id && e.cause == "capture"; });
  REQUIRE(seen);
  CHECK(seen->health == 0.0);
  CHECK_FALSE(seen->alive);
  CHECK(std::chrono::steady_clock::now() - t0 < 2 * st.config.report_interval);
}

TEST_CASE("pause over the socket freezes the game and a reconnect resyncs") {
  harness::Server h;
  const auto st = h.start("g", {});
  const auto u = harness::unit_ids(st, "alice")[0];
  h.run("g", 5, {u});
  WebBridge bridge(h.server, h.bus, {"127.0.0.1", 0});
  auto c = ws::Client::connect({"127.0.0.1", bridge.port()}, "/ws/game/g", 2000ms);
  REQUIRE(c);
  drain(*c);

  c->send_text(protocol::encode_payload(protocol::ControlRequest{"pause", "", "ui-1"}));
  const auto ack = await<protocol::ControlAck>(*c, [](const auto& a) { return a.request_id == "ui-1"; });
  REQUIRE(ack);
  CHECK(ack->accepted);
  CHECK(h.server.paused("g"));

  const auto frozen = h.server.snapshot("g");
  const auto clock = h.server.clock_snapshot("g");
  h.clock.advance(Millis{30000});
  h.server.advance("g");
  CHECK_THROWS_AS(h.send("g", "alice", {u}), Rejected);
  CHECK(h.server.snapshot("g") == frozen);
  CHECK(h.server.clock_snapshot("g").elapsed == clock.elapsed);

  c->send_text("{\"type\":\"nonsense\"}");
  const auto bad = await<protocol::ControlAck>(*c, [](const auto& a) { return !a.accepted; });
  REQUIRE(bad);
  c->close();

  auto again = ws::Client::connect({"127.0.0.1", bridge.port()}, "/ws/game/g", 2000ms);
  REQUIRE(again);
  std::map<std::string, double> health;
  std::optional<protocol::ScoreUpdate> score;
  for (const auto& m : drain(*again)) {
    if (const auto* e = std::get_if<protocol::HealthEvent>(&m)) {
      CHECK(e->cause == "snapshot");
      health[e->unit_id] = e->health;
    }
    if (const auto* s = std::get_if<protocol::ScoreUpdate>(&m)) score = *s;
  }
  REQUIRE(health.size() == 6);
  for (const auto& unit : game_units(frozen)) CHECK(health.at(unit.unit_id) == unit.health);
  CHECK(health.at(u) == 95);
  REQUIRE(score);
  CHECK(score->paused);
}

TEST_CASE("private messages never reach spectators") {
  CHECK_FALSE(forwarded_to_ui(protocol::RealmAssignment{"alice", {}}));
  CHECK_FALSE(forwarded_to_ui(protocol::OpponentInfo{"alice", "bob", "10.0.0.2"}));
  CHECK_FALSE(forwarded_to_ui(protocol::StatusReport{}));
  CHECK(forwarded_to_ui(protocol::HealthEvent{}));
  CHECK(forwarded_to_ui(protocol::ScoreUpdate{}));

  harness::Server h;
  h.server.create_game("g", {}, {"alice", "bob"}, default_class_pool(), 3);
  WebBridge bridge(h.server, h.bus, {"127.0.0.1", 0});
  auto c = ws::Client::connect({"127.0.0.1", bridge.port()}, "/ws/game/g", 2000ms);
  REQUIRE(c);
  drain(*c);
  h.server.register_player("g", {"alice", "10.0.0.1", 3});
  h.server.register_player("g", {"bob", "10.0.0.2", 3});
  h.server.start_game("g");
  REQUIRE_FALSE(h.messages<protocol::RealmAssignment>().empty());
  for (const auto& m : drain(*c)) {
    CHECK_FALSE(std::holds_alternative<protocol::RealmAssignment>(m));
    CHECK_FALSE(std::holds_alternative<protocol::OpponentInfo>(m));
  }
}

TEST_CASE("http routes") {
  const auto dir = std::filesystem::temp_directory_path() / "cyberduel_ui_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "index.html") << "<p>board</p>";
  std::ofstream(dir / "app.js") << "let x = 1;";
  std::ofstream(dir.parent_path() / "cyberduel_secret.txt") << "secret";

  harness::Server h;
  h.start("g", {});
  WebBridge bridge(h.server, h.bus, {"127.0.0.1", 0}, dir);

  const auto index = http_get(bridge.port(), "/");
  CHECK(status_of(index) == 200);
  CHECK(index.find("text/html") != std::string::npos);
  CHECK(index.find("<p>board</p>") != std::string::npos);
  const auto js = http_get(bridge.port(), "/app.js?v=2");
  CHECK(status_of(js) == 200);
  CHECK(js.find("text/javascript") != std::string::npos);
  CHECK(status_of(http_get(bridge.port(), "/missing.css")) == 404);
  const auto escape = http_get(bridge.port(), "/../cyberduel_secret.txt");
  CHECK(status_of(escape) == 403);
  CHECK(escape.find("secret\n") == std::string::npos);
  CHECK(status_of(http_get(bridge.port(), "/ws/game/nope")) == 404);
  CHECK(status_of(http_get(bridge.port(), "/ws/game/g")) == 426);
  CHECK(ws::Client::connect({"127.0.0.1", bridge.port()}, "/ws/game/nope", 1000ms) == nullptr);

  const auto shipped = std::filesystem::path(CYBERDUEL_SOURCE_DIR) / "data" / "ui";
  WebBridge real(h.server, h.bus, {"127.0.0.1", 0}, shipped);
  const auto page = http_get(real.port(), "/index.html");
  CHECK(status_of(page) == 200);
  CHECK(page.find("/ws/game/") != std::string::npos);
  std::filesystem::remove_all(dir);
  std::filesystem::remove(dir.parent_path() / "cyberduel_secret.txt");
}
