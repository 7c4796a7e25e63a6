#include <doctest.h>

#include <atomic>
#include <thread>

#include "cyberduel/net.hpp"
#include "cyberduel/transport.hpp"
#include "fuzz.hpp"

using namespace cyberduel;
using namespace std::chrono_literals;

namespace {

protocol::StatusReport three_up() {
  protocol::StatusReport r;
  r.timestamp = Timestamp{1700000000000};
  r.ip = "10.0.0.2";
  r.player_name = "alice";
  r.cmds = {{"count", "4"}, {"last", "nmap -Pn 10.0.0.3"}};
  for (int i = 0; i < 3; ++i) r.units.push_back({StatusCode::Up, "alice-u" + std::to_string(i), 100.0, 3001});
  return r;
}

template <typename Pred>
bool eventually(Pred p, std::chrono::milliseconds limit = 2000ms) {
  const auto end = std::chrono::steady_clock::now() + limit;
  while (std::chrono::steady_clock::now() < end) {
    if (p()) return true;
    std::this_thread::sleep_for(5ms);
  }
  return p();
}

}  // namespace

TEST_CASE("status report round-trips byte-identically") {
  const auto r = three_up();
  const auto bytes = protocol::encode(r);
  const auto back = protocol::decode(bytes);
  CHECK(std::get<protocol::StatusReport>(back) == r);
  CHECK(protocol::encode(back) == bytes);

  auto empty = r;
  empty.cmds.clear();
  CHECK(std::get<protocol::StatusReport>(protocol::decode(protocol::encode(empty))) == empty);
}

TEST_CASE("wire format is length-prefixed canonical json") {
  const auto bytes = protocol::encode(protocol::RegisterAck{"bob", true, ""});
  const auto payload = protocol::encode_payload(protocol::RegisterAck{"bob", true, ""});
  REQUIRE(bytes.size() == payload.size() + 4);
  const auto len = (std::uint32_t(std::uint8_t(bytes[0])) << 24) | (std::uint32_t(std::uint8_t(bytes[1])) << 16) |
                   (std::uint32_t(std::uint8_t(bytes[2])) << 8) | std::uint32_t(std::uint8_t(bytes[3]));
  CHECK(len == payload.size());
  CHECK(bytes.substr(4) == payload);
  CHECK(payload.find(' ') == std::string::npos);
  // Keys come out sorted.
  CHECK(payload.find("\"accepted\"") < payload.find("\"player\""));
}

TEST_CASE("truncated frames are incomplete") {
  const auto bytes = protocol::encode(three_up());
  CHECK_THROWS_AS(protocol::decode(std::string_view(bytes).substr(0, bytes.size() - 1)), protocol::IncompleteFrame);
  CHECK_THROWS_AS(protocol::decode(std::string_view(bytes).substr(0, 2)), protocol::IncompleteFrame);
  CHECK(protocol::try_unframe(std::string_view(bytes).substr(0, 3)).status == protocol::FrameStatus::Incomplete);
}

TEST_CASE("oversized or malformed frames are decode errors") {
  std::string huge = "\x7f\xff\xff\xff";
  CHECK_THROWS_AS(protocol::try_unframe(huge), protocol::DecodeError);
  CHECK_THROWS_AS(protocol::decode_payload("{\"type\":\"Nope\"}"), protocol::DecodeError);
  CHECK_THROWS_AS(protocol::decode_payload("not json"), protocol::DecodeError);
  CHECK_THROWS_AS(protocol::decode_payload("{\"type\":\"RegisterAck\",\"player\":3}"), protocol::DecodeError);
}

TEST_CASE("fuzzed messages round-trip") {
  Rng rng(99);
  for (int i = 0; i < 2000; ++i) {
    const auto m = fuzz::message(rng);
    const auto bytes = protocol::encode(m);
    const auto back = protocol::decode(bytes);
    CHECK(back == m);
    CHECK(protocol::encode(back) == bytes);
  }
}

TEST_CASE("frame reader reassembles arbitrary splits") {
  Rng rng(4);
  std::vector<protocol::Message> sent;
  std::string stream;
  for (int i = 0; i < 50; ++i) {
    sent.push_back(fuzz::message(rng));
    stream += protocol::encode(sent.back());
  }
  protocol::FrameReader reader;
  std::vector<protocol::Message> got;
  std::size_t pos = 0;
  while (pos < stream.size()) {
    const auto n = std::min<std::size_t>(1 + rng.below(17), stream.size() - pos);
    reader.feed(std::span<const char>(stream.data() + pos, n));
    pos += n;
    while (auto p = reader.next()) got.push_back(protocol::decode_payload(*p));
  }
  CHECK(got == sent);
  CHECK(reader.buffered() == 0);
}

TEST_CASE("topic grammar") {
  CHECK(topic_for("g1", "alice", Channel::Status).path == "game/g1/player/alice/status");
  CHECK(topic_for("g1", "alice", Channel::Score) == topic_for("g1", "alice", Channel::Score));
  CHECK_FALSE(topic_for("g1", "alice", Channel::Score) == topic_for("g1", "bob", Channel::Score));
  CHECK(control_topic("g1").path == "game/g1/control");
  CHECK(topic_matches("game/+/player/+/status", "game/g1/player/alice/status"));
  CHECK_FALSE(topic_matches("game/+/player/+/status", "game/g1/player/alice/score"));
  CHECK(topic_matches("game/g1/#", "game/g1/player/alice/events"));
  CHECK_FALSE(topic_matches("game/g1/#", "game/g2/control"));
  CHECK(topic_matches(game_filter("g1"), "game/g1/control"));
  CHECK_FALSE(topic_matches("game/g1", "game/g1/control"));
}

TEST_CASE("in-process bus delivers in publish order") {
  InProcessBus bus;
  std::vector<std::string> got;
  bus.subscribe("t/#", [&](const std::string& topic, const std::string& payload) {
    got.push_back(topic + "=" + payload);
    if (payload == "1") bus.publish("t/b", "nested");
  });
  bus.publish("t/a", "1");
  bus.publish("t/a", "2");
  bus.publish("u/a", "ignored");
  CHECK(got == std::vector<std::string>{"t/a=1", "t/b=nested", "t/a=2"});

  bus.enqueue("t/c", "3");
  CHECK(bus.pending() == 1);
  bus.flush();
  CHECK(got.back() == "t/c=3");
}

TEST_CASE("a throwing handler does not stop delivery") {
  InProcessBus bus;
  int seen = 0;
  bus.subscribe("x", [](const std::string&, const std::string&) { throw std::runtime_error("boom"); });
  bus.subscribe("x", [&](const std::string&, const std::string&) { ++seen; });
  bus.publish("x", "p");
  CHECK(seen == 1);
  CHECK(bus.handler_errors() == 1);
}

TEST_CASE("tcp broker bridges clients and the local bus") {
  InProcessBus bus;
  net::TcpBroker broker(bus, net::parse_endpoint("127.0.0.1:0"));
  auto a = net::TcpClientTransport::connect({"127.0.0.1", broker.port()}, 1000ms);
  auto b = net::TcpClientTransport::connect({"127.0.0.1", broker.port()}, 1000ms);
  REQUIRE(a);
  REQUIRE(b);

  std::mutex mu;
  std::vector<std::string> at_b;
  std::atomic<int> at_bus{0};
  bool probed = false;
  bus.subscribe("game/g/#", [&](const std::string&, const std::string&) { ++at_bus; });
  b->subscribe("game/g/player/+/score", [&](const std::string& topic, const std::string& payload) {
    std::lock_guard lk(mu);
    if (payload == "probe") {
      probed = true;
      return;
    }
    at_b.push_back(topic + " " + payload);
  });
  // Subscriptions are asynchronous; wait until one round-trip lands.
  REQUIRE(eventually([&] {
    a->publish("game/g/player/x/score", "probe");
    std::lock_guard lk(mu);
    return probed;
  }));
  for (int i = 0; i < 20; ++i) a->publish("game/g/player/x/score", std::to_string(i));
  a->publish("game/g/player/x/status", "not for b");
  bus.publish("game/g/player/y/score", "from bus");
  REQUIRE(eventually([&] {
    std::lock_guard lk(mu);
    return at_b.size() == 21;
  }));
  std::lock_guard lk(mu);
  // Order holds per publisher; the two sources interleave freely.
  std::vector<std::string> from_a;
  for (const auto& m : at_b)
    if (m.rfind("game/g/player/x/", 0) == 0) from_a.push_back(m);
  REQUIRE(from_a.size() == 20);
  for (int i = 0; i < 20; ++i) CHECK(from_a[i] == "game/g/player/x/score " + std::to_string(i));
  CHECK(std::count(at_b.begin(), at_b.end(), "game/g/player/y/score from bus") == 1);
  CHECK(at_bus >= 22);
}

TEST_CASE("client notices a closed broker") {
  InProcessBus bus;
  auto broker = std::make_unique<net::TcpBroker>(bus, net::parse_endpoint("127.0.0.1:0"));
  auto c = net::TcpClientTransport::connect({"127.0.0.1", broker->port()}, 1000ms);
  REQUIRE(c);
  std::atomic<bool> dropped{false};
  c->on_disconnect([&] { dropped = true; });
  broker.reset();
  CHECK(eventually([&] { return dropped.load(); }));
  CHECK_FALSE(c->connected());
}

TEST_CASE("endpoints parse") {
  CHECK(net::parse_endpoint("10.1.2.3:99").host == "10.1.2.3");
  CHECK(net::parse_endpoint(":7700").port == 7700);
  CHECK(net::parse_endpoint("7700").host == "127.0.0.1");
  CHECK_THROWS(net::parse_endpoint("host:notaport"));
}
