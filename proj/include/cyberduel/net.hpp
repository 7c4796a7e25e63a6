#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "cyberduel/transport.hpp"

namespace cyberduel::net {

// Owning file descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void close();
  // Wakes threads blocked in recv/accept on this socket.
  void shutdown();

 private:
  int fd_ = -1;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

// "host:port" or ":port" or "port".
Endpoint parse_endpoint(const std::string& text);
std::string to_string(const Endpoint& e);

Socket listen_tcp(const Endpoint& at, int backlog = 16);
std::uint16_t local_port(const Socket& s);
// Returns an invalid socket when the connection does not complete in time.
Socket connect_tcp(const Endpoint& to, std::chrono::milliseconds timeout);

bool send_all(const Socket& s, const std::string& bytes);
// Waits up to `timeout` for readable data; nullopt on timeout, "" on EOF.
std::optional<std::string> recv_some(const Socket& s, std::chrono::milliseconds timeout);

// One request line out, one response line back. nullopt on any failure.
std::optional<std::string> request_line(const Endpoint& to, const std::string& line,
                                        std::chrono::milliseconds timeout);

// Serves an InProcessBus to remote TcpClientTransports over length-prefixed
// frames. Each connection gets its own reader thread; deliveries are written
// from the bus drainer thread under a per-connection lock.
class TcpBroker {
 public:
  TcpBroker(InProcessBus& bus, Endpoint bind);
  ~TcpBroker();
  TcpBroker(const TcpBroker&) = delete;
  TcpBroker& operator=(const TcpBroker&) = delete;

  std::uint16_t port() const { return port_; }
  void stop();
  std::size_t connections() const;

 private:
  struct Connection;
  void accept_loop();
  void serve(std::shared_ptr<Connection> conn);

  InProcessBus& bus_;
  Socket listener_;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  mutable std::mutex mu_;
  std::list<std::shared_ptr<Connection>> conns_;
  std::list<std::thread> workers_;
};

// Transport over one TCP connection to a TcpBroker.
class TcpClientTransport final : public Transport {
 public:
  static std::unique_ptr<TcpClientTransport> connect(const Endpoint& broker,
                                                     std::chrono::milliseconds timeout);
  ~TcpClientTransport() override;

  void publish(const std::string& topic, std::string payload) override;
  SubscriptionId subscribe(const std::string& filter, MessageHandler handler) override;
  void unsubscribe(SubscriptionId id) override;

  bool connected() const { return connected_; }
  void on_disconnect(std::function<void()> cb);
  void close();

 private:
  explicit TcpClientTransport(Socket s);
  void read_loop();
  void send(const protocol::Message& m);

  Socket sock_;
  std::atomic<bool> connected_{true};
  std::mutex write_mu_;
  std::mutex mu_;
  std::map<SubscriptionId, std::pair<std::string, std::shared_ptr<MessageHandler>>> subs_;
  std::map<std::string, int> filter_refs_;
  SubscriptionId next_id_ = 1;
  std::function<void()> on_disconnect_;
  std::thread reader_;
};

}  // namespace cyberduel::net
