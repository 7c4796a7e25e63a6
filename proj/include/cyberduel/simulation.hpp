#pragma once

#include <string>
#include <vector>

#include "cyberduel/bot_agent.hpp"
#include "cyberduel/game_server.hpp"
#include "cyberduel/transcript.hpp"

namespace cyberduel {

enum class ParticipantKind {
  Bot,       // MDP bot
  Scripted,  // reports honestly and types a fixed rotation of harmless commands
  Silent,    // registers, then never reports or types
};

std::string to_string(ParticipantKind k);
ParticipantKind parse_participant_kind(const std::string& s);

// Takes one of the participant's own services offline for [from, to).
struct Outage {
  std::size_t unit_index = 0;
  Millis from{0};
  Millis to{0};
};

struct Participant {
  std::string name;
  ParticipantKind kind = ParticipantKind::Scripted;
  std::vector<Outage> outages;
};

struct SimConfig {
  std::string game_id = "sim";
  GameConfig game;
  std::vector<Participant> participants;
  std::size_t units_per_player = 3;
  std::vector<UnitClass> pool = default_class_pool();
  Millis max_duration{std::chrono::minutes(30)};
  bot::BotConfig bot;
  bot::Corpus corpus = bot::default_corpus();
  std::size_t order = bot::kDefaultOrder;
  LedgerOptions ledger;
  std::vector<std::string> script = {"ls", "whoami", "pwd", "ls -la", "id"};
  Millis script_period{std::chrono::seconds(5)};
};

struct SimResult {
  Transcript transcript;
  GameState final_state;
  MatchClock clock;
  std::vector<ledger::LedgerBlock> ledger;
  std::map<std::string, std::size_t> captures;  // per bot
  std::map<std::string, bot::Policy> policies;  // per bot, after the outcome penalty
  std::uint64_t rejected_messages = 0;
};

// Runs a whole match on a simulated clock over the in-process bus and a local
// unit network. Deterministic: the transcript is a function of the config.
SimResult simulate(const SimConfig& config);

}  // namespace cyberduel
