#include "cyberduel/mock_unit.hpp"

#include <poll.h>
#include <sys/socket.h>

namespace cyberduel {

std::string UnitService::handle(const std::string& request) {
  if (!running_) return {};
  if (request == "PING") return "PONG";
  if (request == "KILL") {
    running_ = false;
    return "BYE";
  }
  if (request.rfind("KEY ", 0) == 0)
    return request.substr(4) == vuln_key_ ? "FLAG " + fingerprint_ : "DENIED";
  return "ERR";
}

std::optional<std::string> LocalUnitNetwork::exchange(const std::string& host, std::uint16_t port,
                                                      const std::string& request) {
  std::shared_ptr<UnitService> svc;
  {
    std::lock_guard lk(mu_);
    const auto key = std::make_pair(host, port);
    if (hung_.count(key)) return std::nullopt;
    auto it = services_.find(key);
    if (it == services_.end()) return std::nullopt;
    svc = it->second;
  }
  if (!svc->running()) return std::nullopt;
  return svc->handle(request);
}

std::uint16_t LocalUnitNetwork::launch(const std::string& host, std::uint16_t port,
                                       std::shared_ptr<UnitService> service) {
  std::lock_guard lk(mu_);
  services_[{host, port}] = std::move(service);
  hung_.erase({host, port});
  return port;
}

void LocalUnitNetwork::retire(const std::string& host, std::uint16_t port) {
  std::lock_guard lk(mu_);
  services_.erase({host, port});
}

void LocalUnitNetwork::hang(const std::string& host, std::uint16_t port) {
  std::lock_guard lk(mu_);
  hung_[{host, port}] = true;
}

TcpMockUnit::TcpMockUnit(std::shared_ptr<UnitService> service, const net::Endpoint& bind)
    : service_(std::move(service)), host_(bind.host) {
  listener_ = net::listen_tcp(bind);
  port_ = net::local_port(listener_);
  thread_ = std::thread([this] { serve(); });
}

TcpMockUnit::~TcpMockUnit() { stop(); }

void TcpMockUnit::stop() {
  stopping_ = true;
  if (thread_.joinable() && thread_.get_id() != std::this_thread::get_id()) thread_.join();
  listener_.close();
}

void TcpMockUnit::serve() {
  while (!stopping_) {
    if (!service_->running()) {
      // A killed service stops listening so connects are refused.
      listener_.close();
      while (!stopping_ && !service_->running())
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
      if (stopping_) break;
      listener_ = net::listen_tcp({host_, port_});
    }
    pollfd pfd{listener_.fd(), POLLIN, 0};
    if (::poll(&pfd, 1, 50) <= 0) continue;
    net::Socket client(::accept(listener_.fd(), nullptr, nullptr));
    if (!client.valid()) continue;
    std::string buf;
    while (buf.find('\n') == std::string::npos) {
      auto chunk = net::recv_some(client, std::chrono::milliseconds(500));
      if (!chunk || chunk->empty()) break;
      buf += *chunk;
    }
    const auto nl = buf.find('\n');
    if (nl == std::string::npos) continue;
    std::string line = buf.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    net::send_all(client, service_->handle(line) + "\n");
  }
}

std::optional<std::string> TcpUnitNetwork::exchange(const std::string& host, std::uint16_t port,
                                                    const std::string& request) {
  return net::request_line({host, port}, request, timeout_);
}

std::uint16_t TcpUnitNetwork::launch(const std::string& host, std::uint16_t port,
                                     std::shared_ptr<UnitService> service) {
  auto unit = std::make_unique<TcpMockUnit>(std::move(service), net::Endpoint{host, port});
  const auto bound = unit->port();
  std::lock_guard lk(mu_);
  units_[port] = std::move(unit);
  return bound;
}

void TcpUnitNetwork::retire(const std::string&, std::uint16_t port) {
  std::unique_ptr<TcpMockUnit> unit;
  {
    std::lock_guard lk(mu_);
    auto it = units_.find(port);
    if (it == units_.end()) return;
    unit = std::move(it->second);
    units_.erase(it);
  }
}

StatusCode probe(UnitNetwork& network, const std::string& host, std::uint16_t port) {
  const auto reply = network.exchange(host, port, "PING");
  return reply && *reply == "PONG" ? StatusCode::Up : StatusCode::Down;
}

}  // namespace cyberduel
