#include "cyberduel/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <iostream>

namespace cyberduel::net {

Socket& Socket::operator=(Socket&& o) noexcept {
  if (this != &o) {
    close();
    fd_ = std::exchange(o.fd_, -1);
  }
  return *this;
}

void Socket::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void Socket::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

Endpoint parse_endpoint(const std::string& text) {
  Endpoint e;
  std::string port_text = text;
  const auto colon = text.rfind(':');
  if (colon != std::string::npos) {
    if (colon > 0) e.host = text.substr(0, colon);
    port_text = text.substr(colon + 1);
  }
  unsigned port = 0;
  auto [p, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc{} || p != port_text.data() + port_text.size() || port > 65535)
    throw Error("bad endpoint '" + text + "': expected host:port");
  e.port = static_cast<std::uint16_t>(port);
  return e;
}

std::string to_string(const Endpoint& e) { return e.host + ":" + std::to_string(e.port); }

namespace {

sockaddr_in resolve(const Endpoint& e) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(e.port);
  const std::string host = e.host == "localhost" ? "127.0.0.1" : e.host;
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res)
      throw Error("cannot resolve host '" + e.host + "'");
    addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    ::freeaddrinfo(res);
  }
  return addr;
}

std::string sys_error(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

}  // namespace

Socket listen_tcp(const Endpoint& at, int backlog) {
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!s.valid()) throw Error(sys_error("socket"));
  int one = 1;
  ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  auto addr = resolve(at);
  if (::bind(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
    throw Error(sys_error(("bind " + to_string(at)).c_str()));
  if (::listen(s.fd(), backlog) != 0) throw Error(sys_error("listen"));
  return s;
}

std::uint16_t local_port(const Socket& s) {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  if (::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len) != 0) throw Error(sys_error("getsockname"));
  return ntohs(addr.sin_port);
}

Socket connect_tcp(const Endpoint& to, std::chrono::milliseconds timeout) {
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC | SOCK_NONBLOCK, 0));
  if (!s.valid()) return {};
  auto addr = resolve(to);
  int rc = ::connect(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  if (rc != 0 && errno != EINPROGRESS) return {};
  if (rc != 0) {
    pollfd pfd{s.fd(), POLLOUT, 0};
    if (::poll(&pfd, 1, static_cast<int>(timeout.count())) <= 0) return {};
    int err = 0;
    socklen_t len = sizeof err;
    ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) return {};
  }
  const int flags = ::fcntl(s.fd(), F_GETFL);
  ::fcntl(s.fd(), F_SETFL, flags & ~O_NONBLOCK);
  int one = 1;
  ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return s;
}

bool send_all(const Socket& s, const std::string& bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = ::send(s.fd(), bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

std::optional<std::string> recv_some(const Socket& s, std::chrono::milliseconds timeout) {
  pollfd pfd{s.fd(), POLLIN, 0};
  const int rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
  if (rc <= 0) return std::nullopt;
  char buf[4096];
  const auto n = ::recv(s.fd(), buf, sizeof buf, 0);
  if (n <= 0) return std::string{};
  return std::string(buf, static_cast<std::size_t>(n));
}

std::optional<std::string> request_line(const Endpoint& to, const std::string& line,
                                        std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  auto s = connect_tcp(to, timeout);
  if (!s.valid()) return std::nullopt;
  if (!send_all(s, line + "\n")) return std::nullopt;
  std::string got;
  while (got.find('\n') == std::string::npos) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return std::nullopt;
    auto chunk = recv_some(s, left);
    if (!chunk || chunk->empty()) return std::nullopt;
    got += *chunk;
  }
  return got.substr(0, got.find('\n'));
}

// ---------------------------------------------------------------------------

struct TcpBroker::Connection {
  Socket sock;
  std::mutex write_mu;
  std::map<std::string, SubscriptionId> subs;
  std::atomic<bool> open{true};

  void write(const protocol::Message& m) {
    std::lock_guard lk(write_mu);
    if (open && !send_all(sock, protocol::encode(m))) open = false;
  }
};

TcpBroker::TcpBroker(InProcessBus& bus, Endpoint bind) : bus_(bus) {
  listener_ = listen_tcp(bind);
  port_ = local_port(listener_);
  acceptor_ = std::thread([this] { accept_loop(); });
}

TcpBroker::~TcpBroker() { stop(); }

std::size_t TcpBroker::connections() const {
  std::lock_guard lk(mu_);
  std::size_t n = 0;
  for (const auto& c : conns_) n += c->open ? 1 : 0;
  return n;
}

void TcpBroker::stop() {
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

void TcpBroker::accept_loop() {
  while (!stopping_) {
    pollfd pfd{listener_.fd(), POLLIN, 0};
    if (::poll(&pfd, 1, 100) <= 0) continue;
    Socket client(::accept4(listener_.fd(), nullptr, nullptr, SOCK_CLOEXEC));
    if (!client.valid()) continue;
    int one = 1;
    ::setsockopt(client.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    auto conn = std::make_shared<Connection>();
    conn->sock = std::move(client);
    std::lock_guard lk(mu_);
    conns_.push_back(conn);
    workers_.emplace_back([this, conn] { serve(conn); });
  }
}

void TcpBroker::serve(std::shared_ptr<Connection> conn) {
  protocol::FrameReader reader;
  char buf[8192];
  while (!stopping_ && conn->open) {
    const auto n = ::recv(conn->sock.fd(), buf, sizeof buf, 0);
    if (n <= 0) break;
    reader.feed({buf, static_cast<std::size_t>(n)});
    try {
      while (auto payload = reader.next()) {
        auto msg = protocol::decode_payload(*payload);
        if (auto* pub = std::get_if<protocol::LinkPublish>(&msg)) {
          bus_.publish(pub->topic, std::move(pub->payload));
        } else if (auto* sub = std::get_if<protocol::LinkSubscribe>(&msg)) {
          if (conn->subs.count(sub->filter)) continue;
          std::weak_ptr<Connection> weak = conn;
          const std::string filter = sub->filter;
          conn->subs[filter] = bus_.subscribe(filter, [weak, filter](const std::string& topic, const std::string& payload) {
            if (auto c = weak.lock()) c->write(protocol::LinkDeliver{filter, topic, payload});
          });
        }
      }
    } catch (const std::exception& e) {
      std::cerr << "broker: dropping connection: " << e.what() << '\n';
      break;
    }
  }
  conn->open = false;
  for (const auto& [filter, id] : conn->subs) bus_.unsubscribe(id);
  std::lock_guard lk(mu_);
  conns_.remove(conn);
}

// ---------------------------------------------------------------------------

std::unique_ptr<TcpClientTransport> TcpClientTransport::connect(const Endpoint& broker,
                                                                std::chrono::milliseconds timeout) {
  auto s = connect_tcp(broker, timeout);
  if (!s.valid()) throw Error("cannot connect to broker at " + to_string(broker));
  return std::unique_ptr<TcpClientTransport>(new TcpClientTransport(std::move(s)));
}

TcpClientTransport::TcpClientTransport(Socket s) : sock_(std::move(s)) {
  reader_ = std::thread([this] { read_loop(); });
}

TcpClientTransport::~TcpClientTransport() { close(); }

void TcpClientTransport::close() {
  sock_.shutdown();
  if (reader_.joinable() && reader_.get_id() != std::this_thread::get_id()) reader_.join();
}

void TcpClientTransport::on_disconnect(std::function<void()> cb) {
  std::lock_guard lk(mu_);
  on_disconnect_ = std::move(cb);
}

void TcpClientTransport::send(const protocol::Message& m) {
  std::lock_guard lk(write_mu_);
  if (!connected_) throw Error("broker connection lost");
  if (!send_all(sock_, protocol::encode(m))) {
    connected_ = false;
    throw Error("broker connection lost");
  }
}

void TcpClientTransport::publish(const std::string& topic, std::string payload) {
  send(protocol::LinkPublish{topic, std::move(payload)});
}

SubscriptionId TcpClientTransport::subscribe(const std::string& filter, MessageHandler handler) {
  bool first = false;
  SubscriptionId id;
  {
    std::lock_guard lk(mu_);
    id = next_id_++;
    subs_[id] = {filter, std::make_shared<MessageHandler>(std::move(handler))};
    first = filter_refs_[filter]++ == 0;
  }
  if (first) send(protocol::LinkSubscribe{filter});
  return id;
}

void TcpClientTransport::unsubscribe(SubscriptionId id) {
  // The broker keeps forwarding the filter; unmatched deliveries are dropped here.
  std::lock_guard lk(mu_);
  auto it = subs_.find(id);
  if (it == subs_.end()) return;
  --filter_refs_[it->second.first];
  subs_.erase(it);
}

void TcpClientTransport::read_loop() {
  protocol::FrameReader reader;
  char buf[8192];
  while (true) {
    const auto n = ::recv(sock_.fd(), buf, sizeof buf, 0);
    if (n <= 0) break;
    reader.feed({buf, static_cast<std::size_t>(n)});
    try {
      while (auto payload = reader.next()) {
        auto msg = protocol::decode_payload(*payload);
        auto* d = std::get_if<protocol::LinkDeliver>(&msg);
        if (!d) continue;
        std::vector<std::shared_ptr<MessageHandler>> targets;
        {
          std::lock_guard lk(mu_);
          for (const auto& [id, sub] : subs_)
            if (sub.first == d->filter) targets.push_back(sub.second);
        }
        for (const auto& h : targets) {
          try {
            (*h)(d->topic, d->payload);
          } catch (const std::exception& e) {
            std::cerr << "client: handler for " << d->topic << " failed: " << e.what() << '\n';
          }
        }
      }
    } catch (const std::exception& e) {
      std::cerr << "client: bad frame from broker: " << e.what() << '\n';
      break;
    }
  }
  connected_ = false;
  std::function<void()> cb;
  {
    std::lock_guard lk(mu_);
    cb = on_disconnect_;
  }
  if (cb) cb();
}

}  // namespace cyberduel::net
