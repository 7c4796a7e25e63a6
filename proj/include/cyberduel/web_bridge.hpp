#pragma once

#include <atomic>
#include <filesystem>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include "cyberduel/game_server.hpp"
#include "cyberduel/net.hpp"

namespace cyberduel {

// HTTP + websocket front of the game server.
//
//   GET /ws/game/{id}   websocket; on connect the client gets one HealthEvent
//                       per unit (cause "snapshot") and the current
//                       ScoreUpdate, then every HealthEvent, ScoreUpdate,
//                       CaptureVerdict, ControlAck and CommandEvent of the
//                       game as it happens. One protocol payload per text
//                       frame. Text frames from the client are ControlRequests.
//   GET /...            static files from the UI directory, when configured.
//
// Realm assignments and opponent addresses are never forwarded.
class WebBridge {
 public:
  WebBridge(GameServer& server, InProcessBus& bus, const net::Endpoint& bind,
            std::optional<std::filesystem::path> ui_dir = std::nullopt);
  ~WebBridge();
  WebBridge(const WebBridge&) = delete;
  WebBridge& operator=(const WebBridge&) = delete;

  std::uint16_t port() const { return port_; }
  std::size_t clients() const;
  void stop();

 private:
  struct Conn;
  void accept_loop();
  void serve(std::shared_ptr<Conn> c);
  void serve_socket(std::shared_ptr<Conn> c, const std::string& game_id, std::string leftover);
  void serve_file(Conn& c, const std::string& target);

  GameServer& server_;
  InProcessBus& bus_;
  std::optional<std::filesystem::path> ui_dir_;
  net::Socket listener_;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  mutable std::mutex mu_;
  std::list<std::shared_ptr<Conn>> conns_;
  std::list<std::thread> workers_;
};

// Whether a game-topic message may be shown to spectators.
bool forwarded_to_ui(const protocol::Message& m);

}  // namespace cyberduel
