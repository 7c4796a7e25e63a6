#include "cyberduel/bot_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>

namespace cyberduel::bot {

std::string to_string(Phase p) {
  switch (p) {
    case Phase::Recon: return "recon";
    case Phase::Scanning: return "enumeration";
    case Phase::GainingAccess: return "gaining_access";
    case Phase::MaintainingAccess: return "maintaining_access";
    case Phase::CoveringTracks: return "covering_tracks";
  }
  return "?";
}

Phase parse_phase(const std::string& s) {
  for (auto p : kAllPhases)
    if (to_string(p) == s) return p;
  if (s == "scanning") return Phase::Scanning;
  throw Rejected("unknown phase '" + s + "'");
}

std::string to_string(AgentAction a) { return a == AgentAction::Progress ? "progress" : "stall"; }

PhaseSet::PhaseSet(std::vector<Phase> phases) : phases_(std::move(phases)) {
  if (phases_.empty()) throw Rejected("phase set is empty");
  if (phases_.size() > kAllPhases.size()) throw Rejected("phase set holds at most 5 phases");
  std::set<Phase> seen(phases_.begin(), phases_.end());
  if (seen.size() != phases_.size()) throw Rejected("phase set has duplicates");
}

PhaseSet PhaseSet::standard() { return PhaseSet({Phase::Recon, Phase::Scanning, Phase::GainingAccess}); }

bool PhaseSet::contains(Phase p) const { return std::find(phases_.begin(), phases_.end(), p) != phases_.end(); }

TransitionModel::TransitionModel(PhaseSet phases, std::map<std::pair<Phase, AgentAction>, Distribution> rows)
    : phases_(std::move(phases)), rows_(std::move(rows)) {
  validate();
}

void TransitionModel::validate() const {
  for (auto s : phases_.phases()) {
    for (auto a : {AgentAction::Progress, AgentAction::Stall}) {
      auto it = rows_.find({s, a});
      if (it == rows_.end()) throw Rejected("missing transition row " + to_string(s) + "/" + to_string(a));
      double sum = 0.0;
      for (const auto& [to, p] : it->second) {
        if (!phases_.contains(to)) throw Rejected("transition to phase outside the set: " + to_string(to));
        if (!(p >= 0.0) || !std::isfinite(p)) throw Rejected("transition probability must be finite and >= 0");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kStochasticTolerance)
        throw Rejected("transition row " + to_string(s) + "/" + to_string(a) + " does not sum to 1");
    }
  }
  for (const auto& [key, row] : rows_)
    if (!phases_.contains(key.first)) throw Rejected("transition row from phase outside the set");
}

TransitionModel TransitionModel::standard() {
  using P = Phase;
  using A = AgentAction;
  return TransitionModel(PhaseSet::standard(),
                         {
                             {{P::Recon, A::Progress}, {{P::Recon, 0.2}, {P::Scanning, 0.6}, {P::GainingAccess, 0.2}}},
                             {{P::Recon, A::Stall}, {{P::Recon, 0.6}, {P::Scanning, 0.3}, {P::GainingAccess, 0.1}}},
                             {{P::Scanning, A::Progress}, {{P::Recon, 0.1}, {P::Scanning, 0.3}, {P::GainingAccess, 0.6}}},
                             {{P::Scanning, A::Stall}, {{P::Recon, 0.2}, {P::Scanning, 0.6}, {P::GainingAccess, 0.2}}},
                             {{P::GainingAccess, A::Progress},
                              {{P::Recon, 0.1}, {P::Scanning, 0.2}, {P::GainingAccess, 0.7}}},
                             {{P::GainingAccess, A::Stall}, {{P::Recon, 0.1}, {P::Scanning, 0.3}, {P::GainingAccess, 0.6}}},
                         });
}

TransitionModel TransitionModel::uniform(const PhaseSet& phases) {
  std::map<std::pair<Phase, AgentAction>, Distribution> rows;
  const double p = 1.0 / static_cast<double>(phases.size());
  for (auto s : phases.phases())
    for (auto a : {AgentAction::Progress, AgentAction::Stall})
      for (auto t : phases.phases()) rows[{s, a}][t] = p;
  return TransitionModel(phases, std::move(rows));
}

const Distribution& TransitionModel::row(Phase s, AgentAction a) const {
  auto it = rows_.find({s, a});
  if (it == rows_.end()) throw Rejected("no transition row for " + to_string(s));
  return it->second;
}

Distribution& TransitionModel::mutable_row(Phase s, AgentAction a) {
  auto it = rows_.find({s, a});
  if (it == rows_.end()) throw Rejected("no transition row for " + to_string(s));
  return it->second;
}

std::optional<Phase> preferred_phase(const KnowledgeBase& kb) {
  if (!kb.who) return Phase::Recon;
  if (!kb.what) return Phase::Scanning;
  return std::nullopt;
}

namespace {

template <class Map>
void normalize(Map& row) {
  double sum = 0.0;
  for (const auto& [k, p] : row) sum += p;
  if (!(sum > 0.0)) throw Rejected("distribution has no mass");
  for (auto& [k, p] : row) p /= sum;
}

template <class Map>
typename Map::key_type pick(const Map& row, Rng& rng, DecodeMode mode) {
  if (row.empty()) throw Rejected("empty distribution");
  if (mode == DecodeMode::Argmax) {
    auto best = row.begin();
    for (auto it = row.begin(); it != row.end(); ++it)
      if (it->second > best->second) best = it;
    return best->first;
  }
  const double u = rng.unit();
  double acc = 0.0;
  typename Map::key_type last = row.begin()->first;
  for (const auto& [k, p] : row) {
    if (p <= 0.0) continue;
    acc += p;
    last = k;
    if (u < acc) return k;
  }
  return last;
}

}  // namespace

Distribution gated_distribution(const Distribution& row, const KnowledgeBase& kb, double boost) {
  if (!(boost >= 1.0)) throw Rejected("boost must be >= 1");
  Distribution out = row;
  if (const auto pref = preferred_phase(kb)) {
    auto it = out.find(*pref);
    if (it != out.end()) it->second *= boost;
  }
  normalize(out);
  return out;
}

Phase plan_next_state(const KnowledgeBase& kb, Phase current, AgentAction action,
                      const TransitionModel& transitions, Rng& rng, PlanOptions options) {
  transitions.validate();
  return pick(gated_distribution(transitions.row(current, action), kb, options.boost), rng, options.mode);
}

std::string abstract_addresses(const std::string& command) {
  static const std::regex ipv4(R"(\b(?:\d{1,3}\.){3}\d{1,3}\b)");
  return std::regex_replace(command, ipv4, kTargetIpToken);
}

std::vector<Symbol> to_symbols(const std::string& command) {
  const std::string text = abstract_addresses(command);
  const std::string token = kTargetIpToken;
  std::vector<Symbol> out;
  for (std::size_t i = 0; i < text.size();) {
    if (text.compare(i, token.size(), token) == 0) {
      out.push_back(kTargetIp);
      i += token.size();
    } else {
      out.push_back(static_cast<unsigned char>(text[i]));
      ++i;
    }
  }
  return out;
}

CharModel train_char_model(Phase phase, const std::vector<std::string>& corpus, std::size_t order) {
  if (corpus.empty()) throw Rejected("corpus for " + to_string(phase) + " is empty");
  if (order == 0) throw Rejected("model order must be >= 1");
  CharModel m;
  m.phase = phase;
  m.order = order;
  m.tables.resize(order + 1);
  for (const auto& line : corpus) {
    std::vector<Symbol> seq(order, kStart);
    const auto body = to_symbols(line);
    seq.insert(seq.end(), body.begin(), body.end());
    seq.push_back(kEnd);
    for (std::size_t i = order; i < seq.size(); ++i)
      for (std::size_t j = 0; j <= order; ++j)
        m.tables[j][Context(seq.begin() + static_cast<std::ptrdiff_t>(i - j), seq.begin() + static_cast<std::ptrdiff_t>(i))]
                 [seq[i]] += 1.0;
  }
  for (auto& table : m.tables)
    for (auto& [ctx, row] : table) normalize(row);
  return m;
}

std::string policy_predict(const CharModel& model, const std::string& prefix, const std::string& target_ip,
                           Rng& rng, DecodeMode mode, std::size_t max_len, Trace* trace) {
  if (!model.trained()) throw Rejected("character model is untrained");
  std::vector<Symbol> history(model.order, kStart);
  const auto pre = to_symbols(prefix);
  history.insert(history.end(), pre.begin(), pre.end());
  std::string out;
  for (auto s : pre) out += s == kTargetIp ? target_ip : std::string(1, static_cast<char>(s));

  while (out.size() < max_len) {
    const SymbolDistribution* row = nullptr;
    std::size_t table = model.order + 1;
    Context ctx;
    while (!row && table-- > 0) {
      ctx.assign(history.end() - static_cast<std::ptrdiff_t>(table), history.end());
      auto it = model.tables[table].find(ctx);
      if (it != model.tables[table].end()) row = &it->second;
    }
    const Symbol s = pick(*row, rng, mode);
    if (trace) trace->chars.push_back({model.phase, table, ctx, s});
    if (s == kEnd) break;
    history.push_back(s);
    out += s == kTargetIp ? target_ip : std::string(1, static_cast<char>(s));
  }
  if (out.size() > max_len) out.resize(max_len);
  return out;
}

Corpus default_corpus() {
  return {
      {Phase::Recon,
       {"getip", "whois <TARGET_IP>", "host <TARGET_IP>", "dig <TARGET_IP>", "ping -c 1 <TARGET_IP>",
        "ping -c 3 <TARGET_IP>", "whoami", "id", "ls -la", "pwd"}},
      {Phase::Scanning,
       {"nmap -Pn <TARGET_IP>", "nmap -sV -p 3001-3010 <TARGET_IP>", "nmap -Pn -p 3001-3003 <TARGET_IP>",
        "nc -zv <TARGET_IP> 3001", "nc -zv <TARGET_IP> 3002", "nc -zv <TARGET_IP> 3003",
        "hping3 -S -p 3001 <TARGET_IP>", "curl http://<TARGET_IP>:3001/"}},
      {Phase::GainingAccess,
       {"exploit <TARGET_IP> 3001 query-string-exec", "exploit <TARGET_IP> 3002 unfiltered-form-post",
        "exploit <TARGET_IP> 3003 ping-field-injection", "exploit <TARGET_IP> 3001 default-credentials",
        "exploit <TARGET_IP> 3002 path-traversal", "exploit <TARGET_IP> 3003 query-string-exec",
        "dos <TARGET_IP> 3001", "dos <TARGET_IP> 3002", "flood <TARGET_IP> 3003", "msfconsole"}},
  };
}

Corpus load_corpus(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error("corpus directory " + dir.string() + " does not exist");
  Corpus out;
  for (auto phase : kAllPhases) {
    const auto sub = dir / to_string(phase);
    if (!fs::is_directory(sub)) continue;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(sub))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::ifstream in(f);
      std::string line;
      while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        out[phase].push_back(line.substr(first));
      }
    }
  }
  if (out.empty()) throw Error("corpus directory " + dir.string() + " holds no commands");
  return out;
}

Policy train_policy(const Corpus& corpus, std::size_t order, TransitionModel transitions) {
  Policy p;
  p.transitions = std::move(transitions);
  for (auto phase : p.transitions.phases().phases()) {
    auto it = corpus.find(phase);
    if (it == corpus.end() || it->second.empty())
      throw Rejected("corpus has no commands for phase " + to_string(phase));
    p.models.emplace(phase, train_char_model(phase, it->second, order));
  }
  return p;
}

void apply_outcome_penalty(Policy& policy, const Trace& trace, bool won, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Rejected("alpha must lie in (0, 1)");
  if (won) return;
  const double keep = 1.0 - alpha;

  std::set<TransitionUse> transitions(trace.transitions.begin(), trace.transitions.end());
  std::set<std::pair<Phase, AgentAction>> touched_rows;
  for (const auto& t : transitions) {
    auto& row = policy.transitions.mutable_row(t.from, t.action);
    auto it = row.find(t.to);
    if (it == row.end()) continue;
    it->second *= keep;
    touched_rows.insert({t.from, t.action});
  }
  for (const auto& key : touched_rows) normalize(policy.transitions.mutable_row(key.first, key.second));

  std::set<CharUse> chars(trace.chars.begin(), trace.chars.end());
  std::set<std::tuple<Phase, std::size_t, Context>> touched_ctx;
  for (const auto& c : chars) {
    auto mit = policy.models.find(c.phase);
    if (mit == policy.models.end() || c.table >= mit->second.tables.size()) continue;
    auto& table = mit->second.tables[c.table];
    auto rit = table.find(c.context);
    if (rit == table.end()) continue;
    auto sit = rit->second.find(c.symbol);
    if (sit == rit->second.end()) continue;
    sit->second *= keep;
    touched_ctx.insert({c.phase, c.table, c.context});
  }
  for (const auto& [phase, table, ctx] : touched_ctx) normalize(policy.models.at(phase).tables[table].at(ctx));
}

double max_row_error(const Policy& policy) {
  double worst = 0.0;
  for (const auto& [key, row] : policy.transitions.rows()) {
    double sum = 0.0;
    for (const auto& [to, p] : row) sum += p;
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  for (const auto& [phase, model] : policy.models)
    for (const auto& table : model.tables)
      for (const auto& [ctx, row] : table) {
        double sum = 0.0;
        for (const auto& [s, p] : row) sum += p;
        worst = std::max(worst, std::abs(sum - 1.0));
      }
  return worst;
}

}  // namespace cyberduel::bot
