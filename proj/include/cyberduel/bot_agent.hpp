#pragma once

#include <set>
#include <string>
#include <vector>

#include "cyberduel/bot_model.hpp"
#include "cyberduel/command_grammar.hpp"
#include "cyberduel/player_daemon.hpp"

namespace cyberduel::bot {

struct BotConfig {
  std::uint64_t seed = 0;
  PlanOptions plan;
  DecodeMode decode = DecodeMode::Sample;
  Millis keystroke_interval{40};
  Millis think_time{600};
  double typo_rate = 0.03;
  std::uint16_t scan_from = 3001;
  std::uint16_t scan_to = 3010;
  // GainingAccess stalls in a row before firing every known key at every
  // open port.
  int hail_mary_after = 8;
  int validity_retries = 3;
  // Keys tried by the hail mary; see exploit_keys().
  std::vector<std::string> key_candidates;
};

// Distinct key arguments of "exploit <ip> <port> <key>" lines, in corpus order.
std::vector<std::string> exploit_keys(const Corpus& corpus);

struct StepResult {
  Phase phase = Phase::Recon;
  std::string command;
  bool valid = false;
  AgentAction outcome = AgentAction::Stall;
  Timestamp next_at{0};
};

// Sequential decision loop driving one PlayerDaemon:
// plan a phase, generate a command in that phase, type it, execute it.
class Bot {
 public:
  Bot(PlayerDaemon& daemon, Policy policy, BotConfig config = {},
      CommandGrammar grammar = CommandGrammar::standard());

  // One decision. Returns when the bot wants to act again. Does nothing once
  // the bot has forfeited or the game is over.
  StepResult step(Timestamp now);

  // Penalizes this game's choices on a loss.
  void finish(bool won, double alpha = kDefaultAlpha);

  bool forfeited() const { return forfeited_; }
  const KnowledgeBase& knowledge() const { return kb_; }
  const Policy& policy() const { return policy_; }
  const Trace& trace() const { return trace_; }
  const std::set<std::string>& captured() const { return captured_; }
  Phase phase() const { return phase_; }

 private:
  std::string generate(Phase phase);
  Timestamp type_out(const std::string& command, Timestamp at);
  AgentAction execute(const std::string& command, Timestamp at);
  AgentAction recon();
  AgentAction scan(const std::vector<std::string>& words, Timestamp at);
  AgentAction exploit(std::uint16_t port, const std::string& key);
  AgentAction hail_mary();
  std::string target() const;

  PlayerDaemon& daemon_;
  Policy policy_;
  BotConfig config_;
  CommandGrammar grammar_;
  Rng rng_;
  KnowledgeBase kb_;
  Phase phase_ = Phase::Recon;
  AgentAction last_ = AgentAction::Progress;
  bool started_ = false;
  bool forfeited_ = false;
  int access_stalls_ = 0;
  std::set<std::uint16_t> open_ports_;
  std::vector<std::string> known_keys_;
  std::set<std::string> captured_;
  Trace trace_;
};

}  // namespace cyberduel::bot
