#pragma once

#include <atomic>
#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "cyberduel/common.hpp"
#include "cyberduel/net.hpp"

namespace cyberduel {

// Request/response contract of a mock vulnerable service. One request line in,
// one response line out:
//
//   PING        -> PONG
//   KEY <key>   -> FLAG <fingerprint>   (correct key)
//               -> DENIED               (anything else)
//   KILL        -> BYE, and the service stops
//   otherwise   -> ERR
class UnitService {
 public:
  UnitService(std::string unit_id, std::string fingerprint, std::string vuln_key)
      : unit_id_(std::move(unit_id)), fingerprint_(std::move(fingerprint)), vuln_key_(std::move(vuln_key)) {}

  std::string handle(const std::string& request);
  bool running() const { return running_; }
  void stop() { running_ = false; }
  void restart() { running_ = true; }
  const std::string& unit_id() const { return unit_id_; }

 private:
  std::string unit_id_;
  std::string fingerprint_;
  std::string vuln_key_;
  std::atomic<bool> running_{true};
};

// How daemons reach unit services and launch their own.
class UnitNetwork {
 public:
  virtual ~UnitNetwork() = default;
  // nullopt when nothing answers within the probe timeout.
  virtual std::optional<std::string> exchange(const std::string& host, std::uint16_t port,
                                              const std::string& request) = 0;
  // Starts `service` reachable at host:port; returns the port actually bound.
  virtual std::uint16_t launch(const std::string& host, std::uint16_t port,
                               std::shared_ptr<UnitService> service) = 0;
  virtual void retire(const std::string& host, std::uint16_t port) = 0;
};

// Deterministic in-process network used by simulations and tests.
class LocalUnitNetwork final : public UnitNetwork {
 public:
  std::optional<std::string> exchange(const std::string& host, std::uint16_t port,
                                      const std::string& request) override;
  std::uint16_t launch(const std::string& host, std::uint16_t port,
                       std::shared_ptr<UnitService> service) override;
  void retire(const std::string& host, std::uint16_t port) override;
  // Simulates a service that accepts connections but never answers.
  void hang(const std::string& host, std::uint16_t port);

 private:
  std::mutex mu_;
  std::map<std::pair<std::string, std::uint16_t>, std::shared_ptr<UnitService>> services_;
  std::map<std::pair<std::string, std::uint16_t>, bool> hung_;
};

// A UnitService listening on a real TCP port.
class TcpMockUnit {
 public:
  TcpMockUnit(std::shared_ptr<UnitService> service, const net::Endpoint& bind);
  ~TcpMockUnit();
  TcpMockUnit(const TcpMockUnit&) = delete;
  TcpMockUnit& operator=(const TcpMockUnit&) = delete;

  std::uint16_t port() const { return port_; }
  void stop();

 private:
  void serve();

  std::shared_ptr<UnitService> service_;
  std::string host_;
  net::Socket listener_;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread thread_;
};

inline constexpr std::chrono::milliseconds kProbeTimeout{250};

// Real sockets. Services bind on the owning daemon's host address, so two
// players on one machine use distinct loopback addresses (127.0.0.1,
// 127.0.0.2, ...) with the same class ports.
class TcpUnitNetwork final : public UnitNetwork {
 public:
  explicit TcpUnitNetwork(std::chrono::milliseconds timeout = kProbeTimeout) : timeout_(timeout) {}
  std::optional<std::string> exchange(const std::string& host, std::uint16_t port,
                                      const std::string& request) override;
  std::uint16_t launch(const std::string& host, std::uint16_t port,
                       std::shared_ptr<UnitService> service) override;
  void retire(const std::string& host, std::uint16_t port) override;

 private:
  std::chrono::milliseconds timeout_;
  std::mutex mu_;
  std::map<std::uint16_t, std::unique_ptr<TcpMockUnit>> units_;
};

StatusCode probe(UnitNetwork& network, const std::string& host, std::uint16_t port);

}  // namespace cyberduel
