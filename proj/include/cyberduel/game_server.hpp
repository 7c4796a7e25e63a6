#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cyberduel/clock.hpp"
#include "cyberduel/core_model.hpp"
#include "cyberduel/ledger.hpp"
#include "cyberduel/protocol.hpp"
#include "cyberduel/transport.hpp"

namespace cyberduel {

struct MatchClock {
  GameMode mode = GameMode::Objective;
  Millis elapsed{0};     // running time, pauses excluded
  Millis time_limit{0};  // Time mode
  std::map<std::string, Millis> remaining;  // Speed mode
  std::optional<std::string> active_player;  // Speed mode

  bool operator==(const MatchClock&) const = default;
};

MatchClock initial_clock(const GameState& state);

struct MatchResult {
  std::optional<std::string> winner;
  bool draw = false;
  std::string reason;

  bool operator==(const MatchResult&) const = default;
};

// Victory rules, as a pure function of state and clock:
//   Objective  sole player not defeated wins; nobody left is a draw.
//   Time       at expiry, highest health sum wins; ties go to more alive
//              units (when enabled), then draw.
//   Speed      a player whose clock reaches zero or whose realm is destroyed
//              is eliminated; the sole survivor wins.
std::optional<MatchResult> evaluate_win(const GameState& state, const MatchClock& clock);

struct LedgerOptions {
  bool enabled = false;
  unsigned difficulty_bits = 0;
  std::optional<std::filesystem::path> file;
};

// Source of truth for any number of independent games. Every mutation of a
// game happens under that game's lock; messages produced by a mutation are
// queued on the bus in mutation order before the lock is released.
class GameServer {
 public:
  GameServer(InProcessBus& bus, const Clock& clock);
  ~GameServer();
  GameServer(const GameServer&) = delete;
  GameServer& operator=(const GameServer&) = delete;

  // Subscribes to every game's status and control topics.
  void attach();
  void detach();

  void create_game(const std::string& game_id, const GameConfig& config,
                   const std::vector<std::string>& players, std::vector<UnitClass> pool,
                   std::size_t units_per_player, LedgerOptions ledger = {});
  std::vector<std::string> games() const;
  bool has_game(const std::string& game_id) const;

  GameState snapshot(const std::string& game_id) const;
  MatchClock clock_snapshot(const std::string& game_id) const;
  protocol::ScoreUpdate score(const std::string& game_id) const;
  std::vector<protocol::HealthEvent> recent_events(const std::string& game_id) const;
  std::vector<ledger::LedgerBlock> ledger_blocks(const std::string& game_id) const;
  bool paused(const std::string& game_id) const;
  bool all_registered(const std::string& game_id) const;

  protocol::RegisterAck register_player(const std::string& game_id, const protocol::RegisterRequest& req);
  void start_game(const std::string& game_id);
  void pause_game(const std::string& game_id);
  void resume_game(const std::string& game_id);
  void clock_press(const std::string& game_id, const std::string& player);

  // Rejected (state unchanged) for unknown players or units, a game that is
  // not running, or a paused game. A repeated (player, timestamp) is ignored.
  void handle_status_report(const std::string& game_id, const protocol::StatusReport& report);
  protocol::CaptureVerdict handle_capture(const std::string& game_id, const protocol::CaptureSubmission& sub);
  void handle_command(const std::string& game_id, const CommandEvent& event);
  protocol::ControlAck handle_control(const std::string& game_id, const protocol::ControlRequest& req);

  // Charges silent players, runs clocks and reshuffles, checks victory and
  // publishes a score update for every running game.
  void advance();
  void advance(const std::string& game_id);

  std::uint64_t rejected_messages() const;
  void set_logger(std::function<void(const std::string&)> log);

 private:
  struct Session;
  std::shared_ptr<Session> session(const std::string& game_id) const;
  void on_status(const std::string& topic, const std::string& payload);
  void on_control(const std::string& topic, const std::string& payload);
  void log(const std::string& line);

  // Helpers below expect the session lock to be held.
  void queue(const Topic& topic, const protocol::Message& m);
  void sync_clock(Session& s, Timestamp now);
  void publish_score(Session& s, Timestamp now);
  void send_opponent_info(Session& s, const std::string& player);
  void finish_if_won(Session& s, Timestamp now);
  void charge(Session& s, const std::string& player, const std::set<std::string>& down, Timestamp now,
              const char* cause);
  void emit_health(Session& s, const std::string& unit_id, const char* cause, Timestamp now);
  void record(Session& s, const protocol::Message& m);
  void reshuffle(Session& s, Timestamp now);
  void press(Session& s, const std::string& player, Timestamp now);

  InProcessBus& bus_;
  const Clock& clock_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::vector<SubscriptionId> subs_;
  std::uint64_t rejected_ = 0;
  std::function<void(const std::string&)> log_;
};

}  // namespace cyberduel
