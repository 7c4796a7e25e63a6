#include "cyberduel/web_bridge.hpp"

#include <poll.h>
#include <sys/socket.h>

#include <fstream>
#include <iostream>
#include <iterator>

#include "cyberduel/websocket.hpp"

namespace cyberduel {

bool forwarded_to_ui(const protocol::Message& m) {
  return std::holds_alternative<protocol::HealthEvent>(m) || std::holds_alternative<protocol::ScoreUpdate>(m) ||
         std::holds_alternative<protocol::CaptureVerdict>(m) || std::holds_alternative<protocol::ControlAck>(m) ||
         std::holds_alternative<CommandEvent>(m);
}

struct WebBridge::Conn {
  net::Socket sock;
  std::mutex write_mu;
  std::atomic<bool> open{true};

  bool write(const std::string& bytes) {
    std::lock_guard lk(write_mu);
    if (open && !net::send_all(sock, bytes)) open = false;
    return open;
  }
  void text(const std::string& payload) { write(ws::encode_frame(ws::Opcode::Text, payload)); }
};

namespace {

constexpr std::size_t kMaxRequestHead = 16 * 1024;

std::string http_response(int code, const char* status, const std::string& type, const std::string& body) {
  return "HTTP/1.1 " + std::to_string(code) + " " + status + "\r\nContent-Type: " + type +
         "\r\nContent-Length: " + std::to_string(body.size()) + "\r\nConnection: close\r\n\r\n" + body;
}

std::string content_type(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

}  // namespace

WebBridge::WebBridge(GameServer& server, InProcessBus& bus, const net::Endpoint& bind,
                     std::optional<std::filesystem::path> ui_dir)
    : server_(server), bus_(bus), ui_dir_(std::move(ui_dir)) {
  listener_ = net::listen_tcp(bind);
  port_ = net::local_port(listener_);
  acceptor_ = std::thread([this] { accept_loop(); });
}

WebBridge::~WebBridge() { stop(); }

std::size_t WebBridge::clients() const {
  std::lock_guard lk(mu_);
  std::size_t n = 0;
  for (const auto& c : conns_) n += c->open ? 1 : 0;
  return n;
}

void WebBridge::stop() {
  if (stopping_.exchange(true)) return;
  if (acceptor_.joinable()) acceptor_.join();
  std::list<std::thread> workers;
  {
    std::lock_guard lk(mu_);
    for (auto& c : conns_) c->sock.shutdown();
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
  listener_.close();
}

void WebBridge::accept_loop() {
  while (!stopping_) {
    pollfd pfd{listener_.fd(), POLLIN, 0};
    if (::poll(&pfd, 1, 100) <= 0) continue;
    net::Socket client(::accept4(listener_.fd(), nullptr, nullptr, SOCK_CLOEXEC));
    if (!client.valid()) continue;
    auto conn = std::make_shared<Conn>();
    conn->sock = std::move(client);
    std::lock_guard lk(mu_);
    conns_.push_back(conn);
    workers_.emplace_back([this, conn] { serve(conn); });
  }
}

void WebBridge::serve(std::shared_ptr<Conn> c) {
  std::string got;
  while (got.find("\r\n\r\n") == std::string::npos && got.size() < kMaxRequestHead && !stopping_) {
    auto chunk = net::recv_some(c->sock, std::chrono::milliseconds(5000));
    if (!chunk || chunk->empty()) break;
    got += *chunk;
  }
  const auto end = got.find("\r\n\r\n");
  const auto req = end == std::string::npos ? std::nullopt : ws::parse_http_request(got.substr(0, end + 4));
  if (!req) {
    c->write(http_response(400, "Bad Request", "text/plain", "bad request\n"));
  } else if (req->method != "GET") {
    c->write(http_response(405, "Method Not Allowed", "text/plain", "GET only\n"));
  } else if (req->target.rfind("/ws/game/", 0) == 0) {
    const auto game_id = req->target.substr(9);
    auto key = req->headers.find("sec-websocket-key");
    if (!server_.has_game(game_id)) {
      c->write(http_response(404, "Not Found", "text/plain", "no such game\n"));
    } else if (key == req->headers.end()) {
      c->write(http_response(426, "Upgrade Required", "text/plain", "websocket upgrade required\n"));
    } else {
      c->write("HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
               "Sec-WebSocket-Accept: " + ws::accept_key(key->second) + "\r\n\r\n");
      serve_socket(c, game_id, got.substr(end + 4));
    }
  } else {
    serve_file(*c, req->target);
  }
  c->open = false;
  c->sock.shutdown();
  std::lock_guard lk(mu_);
  conns_.remove(c);
}

void WebBridge::serve_socket(std::shared_ptr<Conn> c, const std::string& game_id, std::string leftover) {
  std::weak_ptr<Conn> weak = c;
  // Subscribe before taking the snapshot so nothing falls between them; the
  // snapshot is written under the connection lock, so live messages queue
  // behind it.
  std::unique_lock hold(c->write_mu);
  const auto sub = bus_.subscribe(game_filter(game_id), [weak](const std::string&, const std::string& payload) {
    auto conn = weak.lock();
    if (!conn) return;
    if (forwarded_to_ui(protocol::decode_payload(payload))) conn->text(payload);
  });
  const auto state = server_.snapshot(game_id);
  const auto score = server_.score(game_id);
  for (const auto& u : game_units(state))
    net::send_all(c->sock, ws::encode_frame(ws::Opcode::Text,
                                            protocol::encode_payload(protocol::HealthEvent{
                                                state.tick, score.at, u.owner, u.unit_id, u.health, u.alive,
                                                "snapshot"})));
  net::send_all(c->sock, ws::encode_frame(ws::Opcode::Text, protocol::encode_payload(score)));
  hold.unlock();

  ws::FrameParser parser;
  parser.feed(leftover);
  std::string partial;
  while (!stopping_ && c->open) {
    try {
      while (auto f = parser.next()) {
        if (f->opcode == ws::Opcode::Close) {
          c->write(ws::encode_frame(ws::Opcode::Close, ""));
          c->open = false;
          break;
        }
        if (f->opcode == ws::Opcode::Ping) {
          c->write(ws::encode_frame(ws::Opcode::Pong, f->payload));
          continue;
        }
        if (f->opcode != ws::Opcode::Text && f->opcode != ws::Opcode::Continuation) continue;
        partial += f->payload;
        if (!f->fin) continue;
        const auto text = std::exchange(partial, {});
        protocol::ControlAck ack;
        try {
          const auto msg = protocol::decode_payload(text);
          const auto* req = std::get_if<protocol::ControlRequest>(&msg);
          if (!req) throw Rejected("expected control_request");
          // The ack also reaches every client through the control topic.
          server_.handle_control(game_id, *req);
          continue;
        } catch (const Error& e) {
          ack.accepted = false;
          ack.reason = e.what();
        }
        c->text(protocol::encode_payload(ack));
      }
    } catch (const Error&) {
      break;
    }
    if (!c->open) break;
    auto chunk = net::recv_some(c->sock, std::chrono::milliseconds(200));
    if (!chunk) continue;
    if (chunk->empty()) break;
    parser.feed(*chunk);
  }
  bus_.unsubscribe(sub);
}

void WebBridge::serve_file(Conn& c, const std::string& target) {
  if (!ui_dir_) {
    c.write(http_response(404, "Not Found", "text/plain", "no UI configured\n"));
    return;
  }
  std::string path = target.substr(0, target.find_first_of("?#"));
  if (path.empty() || path == "/") path = "/index.html";
  if (path.find("..") != std::string::npos) {
    c.write(http_response(403, "Forbidden", "text/plain", "forbidden\n"));
    return;
  }
  const auto file = *ui_dir_ / path.substr(1);
  std::ifstream in(file, std::ios::binary);
  if (!in || std::filesystem::is_directory(file)) {
    c.write(http_response(404, "Not Found", "text/plain", "not found\n"));
    return;
  }
  const std::string body{std::istreambuf_iterator<char>(in), {}};
  c.write(http_response(200, "OK", content_type(file), body));
}

}  // namespace cyberduel
