#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cyberduel/common.hpp"

namespace cyberduel::bot {

enum class Phase { Recon, Scanning, GainingAccess, MaintainingAccess, CoveringTracks };

inline constexpr std::array<Phase, 5> kAllPhases = {Phase::Recon, Phase::Scanning, Phase::GainingAccess,
                                                    Phase::MaintainingAccess, Phase::CoveringTracks};

// Scanning is spelled "enumeration" on the wire and in corpus directories.
std::string to_string(Phase p);
Phase parse_phase(const std::string& s);

// Ordered, duplicate-free, nonempty, at most five phases.
class PhaseSet {
 public:
  PhaseSet(std::vector<Phase> phases);
  static PhaseSet standard();  // Recon, Scanning, GainingAccess

  const std::vector<Phase>& phases() const { return phases_; }
  bool contains(Phase p) const;
  std::size_t size() const { return phases_.size(); }

 private:
  std::vector<Phase> phases_;
};

// a_t: whether the last step gained something.
enum class AgentAction { Progress, Stall };

std::string to_string(AgentAction a);

using Distribution = std::map<Phase, double>;

inline constexpr double kStochasticTolerance = 1e-9;

// p(s' | s, a) over one PhaseSet.
class TransitionModel {
 public:
  TransitionModel(PhaseSet phases, std::map<std::pair<Phase, AgentAction>, Distribution> rows);

  static TransitionModel standard();
  static TransitionModel uniform(const PhaseSet& phases);

  const PhaseSet& phases() const { return phases_; }
  const Distribution& row(Phase s, AgentAction a) const;
  Distribution& mutable_row(Phase s, AgentAction a);
  const std::map<std::pair<Phase, AgentAction>, Distribution>& rows() const { return rows_; }

  // Throws Rejected unless every row covers the phase set and sums to 1.
  void validate() const;

 private:
  PhaseSet phases_;
  std::map<std::pair<Phase, AgentAction>, Distribution> rows_;
};

// The five W's the bot has learned about its target.
struct KnowledgeBase {
  std::optional<std::string> who;    // opponent identity
  std::optional<std::string> what;   // service map, "port,port,..."
  std::optional<Timestamp> when;     // last scan
  std::optional<std::string> where;  // opponent address
  std::optional<std::string> why;    // current objective

  bool operator==(const KnowledgeBase&) const = default;
};

// Phase the knowledge base prefers: unknown target -> Recon, known target with
// unknown services -> Scanning, otherwise none.
std::optional<Phase> preferred_phase(const KnowledgeBase& kb);

inline constexpr double kDefaultBoost = 3.0;

// Multiplies the preferred phase's weight by `boost` and renormalizes.
Distribution gated_distribution(const Distribution& row, const KnowledgeBase& kb, double boost = kDefaultBoost);

enum class DecodeMode { Argmax, Sample };

struct PlanOptions {
  double boost = kDefaultBoost;
  DecodeMode mode = DecodeMode::Argmax;
};

// Argmax ties go to the earlier phase in kAllPhases order.
Phase plan_next_state(const KnowledgeBase& kb, Phase current, AgentAction action,
                      const TransitionModel& transitions, Rng& rng, PlanOptions options = {});

// Character alphabet: bytes 0..255 plus three markers.
using Symbol = int;
inline constexpr Symbol kEnd = 256;
inline constexpr Symbol kTargetIp = 257;
inline constexpr Symbol kStart = 258;

inline constexpr const char* kTargetIpToken = "<TARGET_IP>";

using Context = std::vector<Symbol>;
using SymbolDistribution = std::map<Symbol, double>;

// Order-k character model. tables[j] holds contexts of length j, so lookups
// can back off to shorter contexts for prefixes never seen in training.
struct CharModel {
  Phase phase = Phase::Recon;
  std::size_t order = 4;
  std::vector<std::map<Context, SymbolDistribution>> tables;

  bool trained() const { return !tables.empty() && !tables[0].empty(); }
};

// Replaces dotted-quad IPv4 literals with the target marker.
std::string abstract_addresses(const std::string& command);
std::vector<Symbol> to_symbols(const std::string& command);

inline constexpr std::size_t kDefaultOrder = 4;

CharModel train_char_model(Phase phase, const std::vector<std::string>& corpus, std::size_t order = kDefaultOrder);

// One (context -> symbol) choice made while generating.
struct CharUse {
  Phase phase = Phase::Recon;
  std::size_t table = 0;
  Context context;
  Symbol symbol = 0;

  auto operator<=>(const CharUse&) const = default;
};

struct TransitionUse {
  Phase from = Phase::Recon;
  AgentAction action = AgentAction::Progress;
  Phase to = Phase::Recon;

  auto operator<=>(const TransitionUse&) const = default;
};

struct Trace {
  std::vector<CharUse> chars;
  std::vector<TransitionUse> transitions;
};

inline constexpr std::size_t kMaxCommandLength = 256;

// Generates from `prefix` until END. The target marker expands to
// `target_ip`. Throws Rejected for an untrained model.
std::string policy_predict(const CharModel& model, const std::string& prefix, const std::string& target_ip,
                           Rng& rng, DecodeMode mode = DecodeMode::Sample,
                           std::size_t max_len = kMaxCommandLength, Trace* trace = nullptr);

struct Policy {
  std::map<Phase, CharModel> models;
  TransitionModel transitions = TransitionModel::standard();
};

using Corpus = std::map<Phase, std::vector<std::string>>;

Corpus default_corpus();
// Reads <dir>/<phase>/* (one command per line, '#' comments), phases named as
// in to_string(Phase). Files are read in name order.
Corpus load_corpus(const std::filesystem::path& dir);

Policy train_policy(const Corpus& corpus, std::size_t order = kDefaultOrder,
                    TransitionModel transitions = TransitionModel::standard());

inline constexpr double kDefaultAlpha = 0.1;

// On a loss, scales every distinct used entry by (1 - alpha) and renormalizes
// its row. Wins leave the policy unchanged. alpha must lie in (0, 1).
void apply_outcome_penalty(Policy& policy, const Trace& trace, bool won, double alpha = kDefaultAlpha);

// Largest |sum - 1| over every transition row and every model context.
double max_row_error(const Policy& policy);

}  // namespace cyberduel::bot
