#include "cyberduel/websocket.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <sstream>

#include "cyberduel/common.hpp"

namespace cyberduel::ws {

namespace {

constexpr const char* kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::string accept_key(const std::string& client_key) {
  const std::string in = client_key + kGuid;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(in.data(), in.size(), digest, &len, EVP_sha1(), nullptr) != 1) throw Error("sha1 failed");
  unsigned char out[64];
  const int n = EVP_EncodeBlock(out, digest, static_cast<int>(len));
  return std::string(reinterpret_cast<char*>(out), static_cast<std::size_t>(n));
}

std::string encode_frame(Opcode op, const std::string& payload, std::optional<std::uint32_t> mask) {
  std::string out;
  out.push_back(static_cast<char>(0x80 | static_cast<std::uint8_t>(op)));
  const std::uint8_t mask_bit = mask ? 0x80 : 0;
  const auto n = payload.size();
  if (n < 126) {
    out.push_back(static_cast<char>(mask_bit | n));
  } else if (n <= 0xffff) {
    out.push_back(static_cast<char>(mask_bit | 126));
    out.push_back(static_cast<char>(n >> 8));
    out.push_back(static_cast<char>(n & 0xff));
  } else {
    out.push_back(static_cast<char>(mask_bit | 127));
    for (int i = 7; i >= 0; --i) out.push_back(static_cast<char>((static_cast<std::uint64_t>(n) >> (8 * i)) & 0xff));
  }
  if (!mask) return out + payload;
  char key[4];
  for (int i = 0; i < 4; ++i) key[i] = static_cast<char>((*mask >> (24 - 8 * i)) & 0xff);
  out.append(key, 4);
  for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<char>(payload[i] ^ key[i % 4]));
  return out;
}

std::optional<Frame> FrameParser::next(std::size_t max_payload) {
  if (buffer_.size() < 2) return std::nullopt;
  const auto b0 = static_cast<std::uint8_t>(buffer_[0]);
  const auto b1 = static_cast<std::uint8_t>(buffer_[1]);
  if (b0 & 0x70) throw Error("websocket frame uses reserved bits");
  std::size_t pos = 2;
  std::uint64_t len = b1 & 0x7f;
  if (len == 126) {
    if (buffer_.size() < 4) return std::nullopt;
    len = static_cast<std::uint8_t>(buffer_[2]) << 8 | static_cast<std::uint8_t>(buffer_[3]);
    pos = 4;
  } else if (len == 127) {
    if (buffer_.size() < 10) return std::nullopt;
    len = 0;
    for (int i = 0; i < 8; ++i) len = len << 8 | static_cast<std::uint8_t>(buffer_[2 + i]);
    pos = 10;
  }
  if (len > max_payload) throw Error("websocket frame too large");
  const bool masked = b1 & 0x80;
  const std::size_t need = pos + (masked ? 4 : 0) + static_cast<std::size_t>(len);
  if (buffer_.size() < need) return std::nullopt;
  Frame f;
  f.fin = b0 & 0x80;
  f.opcode = static_cast<Opcode>(b0 & 0x0f);
  const std::size_t body = pos + (masked ? 4 : 0);
  f.payload = buffer_.substr(body, static_cast<std::size_t>(len));
  if (masked)
    for (std::size_t i = 0; i < f.payload.size(); ++i) f.payload[i] ^= buffer_[pos + i % 4];
  buffer_.erase(0, need);
  return f;
}

std::optional<HttpRequest> parse_http_request(const std::string& head) {
  std::istringstream in(head);
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  HttpRequest r;
  std::istringstream first(trim(line));
  std::string version;
  if (!(first >> r.method >> r.target >> version) || version.rfind("HTTP/1.", 0) != 0) return std::nullopt;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) break;
    const auto colon = line.find(':');
    if (colon == std::string::npos) return std::nullopt;
    r.headers[lower(trim(line.substr(0, colon)))] = trim(line.substr(colon + 1));
  }
  return r;
}

std::unique_ptr<Client> Client::connect(const net::Endpoint& to, const std::string& path,
                                        std::chrono::milliseconds timeout) {
  auto s = net::connect_tcp(to, timeout);
  if (!s.valid()) return nullptr;
  const std::string key = "dGhlIHNhbXBsZSBub25jZQ==";
  const std::string req = "GET " + path + " HTTP/1.1\r\nHost: " + net::to_string(to) +
                          "\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Key: " + key +
                          "\r\nSec-WebSocket-Version: 13\r\n\r\n";
  if (!net::send_all(s, req)) return nullptr;
  std::string got;
  while (got.find("\r\n\r\n") == std::string::npos) {
    auto chunk = net::recv_some(s, timeout);
    if (!chunk || chunk->empty()) return nullptr;
    got += *chunk;
  }
  const auto end = got.find("\r\n\r\n") + 4;
  if (got.rfind("HTTP/1.1 101", 0) != 0) return nullptr;
  if (lower(got.substr(0, end)).find(lower(accept_key(key))) == std::string::npos) return nullptr;
  std::unique_ptr<Client> c(new Client(std::move(s)));
  c->parser_.feed(got.substr(end));
  return c;
}

bool Client::send_text(const std::string& text) {
  return net::send_all(sock_, encode_frame(Opcode::Text, text, next_mask_++));
}

std::optional<std::string> Client::receive(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    while (auto f = parser_.next()) {
      switch (f->opcode) {
        case Opcode::Ping:
          net::send_all(sock_, encode_frame(Opcode::Pong, f->payload, next_mask_++));
          break;
        case Opcode::Close:
          return std::nullopt;
        case Opcode::Text:
        case Opcode::Continuation:
          partial_ += f->payload;
          if (f->fin) return std::exchange(partial_, {});
          break;
        default:
          break;
      }
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return std::nullopt;
    auto chunk = net::recv_some(sock_, left);
    if (!chunk || chunk->empty()) return std::nullopt;
    parser_.feed(*chunk);
  }
}

void Client::close() {
  if (!sock_.valid()) return;
  net::send_all(sock_, encode_frame(Opcode::Close, "", next_mask_++));
  sock_.close();
}

}  // namespace cyberduel::ws
