#pragma once

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "cyberduel/clock.hpp"
#include "cyberduel/command_grammar.hpp"
#include "cyberduel/core_model.hpp"
#include "cyberduel/metrics.hpp"
#include "cyberduel/mock_unit.hpp"
#include "cyberduel/protocol.hpp"
#include "cyberduel/transport.hpp"

namespace cyberduel {

struct MockUnit {
  std::string unit_id;
  std::string class_id;
  std::uint16_t port = 0;
  std::string fingerprint;
  std::string vuln_key;
  std::filesystem::path flag_file;  // empty when the daemon keeps flags in memory only
  std::shared_ptr<UnitService> process;
  double health = 0.0;  // last value announced by the server; 0 until then
  bool alive = true;
};

struct DaemonOptions {
  std::string game_id;
  std::string name;
  std::string host_address = "127.0.0.1";
  std::uint32_t units = 3;
  std::optional<std::filesystem::path> flag_dir;
  std::chrono::milliseconds reply_timeout{2000};
};

// Attack templates understood by attack_unit.
inline constexpr const char* kTemplateFlood = "liveness-flood";
inline constexpr const char* kTemplateKill = "kill-request";
inline constexpr const char* kTemplateKeyGuess = "key-guess";

// Hosts one player's mock units, reports their liveness to the game server and
// exposes the player's Recon / Defensive / Offensive functions.
class PlayerDaemon {
 public:
  PlayerDaemon(Transport& transport, UnitNetwork& network, const Clock& clock, DaemonOptions options,
               CommandGrammar grammar = CommandGrammar::standard());
  ~PlayerDaemon();
  PlayerDaemon(const PlayerDaemon&) = delete;
  PlayerDaemon& operator=(const PlayerDaemon&) = delete;

  const DaemonOptions& options() const { return options_; }
  const std::string& name() const { return options_.name; }

  void register_with_server();
  bool has_realm() const;
  bool wait_for_realm(std::chrono::milliseconds timeout);

  StatusCode probe_unit(const MockUnit& unit);
  protocol::StatusReport build_status_report(Timestamp now);
  // Probes, builds and publishes; a failed publish is retried on the next
  // call. Returns the number of reports sent.
  std::size_t publish_status(Timestamp now);

  // Recon
  std::optional<std::string> get_opponent_ip();
  std::optional<std::string> opponent() const;
  std::vector<std::string> get_flags();
  bool scan_port(std::uint16_t port);

  // Defensive
  std::string enter_unit(const std::string& unit_id);
  void restart_unit(const std::string& unit_id);

  // Offensive
  bool capture_unit(const std::string& claimed_fingerprint);
  std::string attack_unit(std::uint16_t target_port, const std::string& template_name,
                          const std::string& argument = {});

  // Command capture.
  CommandEvent record_keystroke(char c, Timestamp at);
  CommandEvent submit_command(const std::string& line, Timestamp at);

  std::vector<MockUnit> units() const;
  std::vector<ActionRecord> actions() const;
  std::vector<CommandEvent> command_log() const;
  GamePhase phase() const;
  std::optional<protocol::ScoreUpdate> last_score() const;
  std::optional<protocol::CaptureVerdict> last_verdict() const;
  bool registration_rejected() const;

 private:
  void on_message(const std::string& topic, const std::string& payload);
  void apply_assignment(const protocol::RealmAssignment& a);
  void log_action(ActionKind kind, std::string payload);
  void require_running() const;
  void publish_command(const CommandEvent& e);

  Transport& transport_;
  UnitNetwork& network_;
  const Clock& clock_;
  DaemonOptions options_;
  CommandGrammar grammar_;
  std::vector<SubscriptionId> subs_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, MockUnit> units_;
  std::vector<std::string> unit_order_;
  bool has_realm_ = false;
  bool rejected_ = false;
  std::optional<protocol::OpponentInfo> opponent_;
  std::optional<protocol::ScoreUpdate> score_;
  std::optional<protocol::CaptureVerdict> last_verdict_;
  std::map<std::string, protocol::CaptureVerdict> verdicts_;
  std::deque<std::string> unsent_;
  std::vector<ActionRecord> actions_;
  std::vector<CommandEvent> commands_;
  std::uint64_t sessions_ = 0;
  std::uint64_t commands_since_report_ = 0;
};

}  // namespace cyberduel
