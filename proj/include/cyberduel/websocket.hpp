#pragma once

// Minimal RFC 6455 framing: enough for a browser scoreboard and for tests.
// No extensions, no fragmentation on send; fragmented client messages are
// reassembled.

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "cyberduel/net.hpp"

namespace cyberduel::ws {

enum class Opcode : std::uint8_t { Continuation = 0, Text = 1, Binary = 2, Close = 8, Ping = 9, Pong = 10 };

// Sec-WebSocket-Accept for a client's Sec-WebSocket-Key.
std::string accept_key(const std::string& client_key);

std::string encode_frame(Opcode op, const std::string& payload, std::optional<std::uint32_t> mask = std::nullopt);

struct Frame {
  bool fin = true;
  Opcode opcode = Opcode::Text;
  std::string payload;  // unmasked
};

// Incremental decoder for one direction of a connection.
class FrameParser {
 public:
  void feed(const std::string& bytes) { buffer_ += bytes; }
  // Throws Error on frames larger than max_payload or with reserved bits set.
  std::optional<Frame> next(std::size_t max_payload = 1u << 20);

 private:
  std::string buffer_;
};

struct HttpRequest {
  std::string method;
  std::string target;
  std::map<std::string, std::string> headers;  // lower-cased names
};

// Parses the request head up to and including the blank line.
std::optional<HttpRequest> parse_http_request(const std::string& head);

// Blocking client used by tests and the CLI's watch mode.
class Client {
 public:
  static std::unique_ptr<Client> connect(const net::Endpoint& to, const std::string& path,
                                         std::chrono::milliseconds timeout);
  bool send_text(const std::string& text);
  // Next text message, answering pings on the way. nullopt on timeout or close.
  std::optional<std::string> receive(std::chrono::milliseconds timeout);
  void close();

 private:
  explicit Client(net::Socket s) : sock_(std::move(s)) {}
  net::Socket sock_;
  FrameParser parser_;
  std::string partial_;
  std::uint32_t next_mask_ = 0x1f2e3d4c;
};

}  // namespace cyberduel::ws
