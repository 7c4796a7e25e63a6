#include "cyberduel/bot_agent.hpp"

#include <algorithm>
#include <charconv>

namespace cyberduel::bot {

std::vector<std::string> exploit_keys(const Corpus& corpus) {
  std::vector<std::string> keys;
  for (const auto& [phase, lines] : corpus) {
    for (const auto& line : lines) {
      const auto words = split_words(line);
      if (words.size() == 4 && words[0] == "exploit" &&
          std::find(keys.begin(), keys.end(), words[3]) == keys.end())
        keys.push_back(words[3]);
    }
  }
  return keys;
}

namespace {

std::optional<std::uint16_t> parse_port(const std::string& s) {
  unsigned v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || v == 0 || v > 65535) return std::nullopt;
  return static_cast<std::uint16_t>(v);
}

// Ports named by a scan command: bare numbers, "a-b" ranges and
// comma lists, including the tail of "host:port/..." URLs.
std::vector<std::uint16_t> ports_in(const std::vector<std::string>& words) {
  std::vector<std::uint16_t> out;
  for (std::size_t i = 1; i < words.size(); ++i) {
    std::string w = words[i];
    if (auto colon = w.rfind(':'); colon != std::string::npos) {
      w = w.substr(colon + 1);
      if (auto slash = w.find('/'); slash != std::string::npos) w.resize(slash);
    }
    std::size_t start = 0;
    while (start <= w.size()) {
      auto comma = w.find(',', start);
      const auto item = w.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (auto dash = item.find('-'); dash != std::string::npos && dash > 0) {
        const auto a = parse_port(item.substr(0, dash)), b = parse_port(item.substr(dash + 1));
        if (a && b && *a <= *b && *b - *a < 1024)
          for (unsigned p = *a; p <= *b; ++p) out.push_back(static_cast<std::uint16_t>(p));
      } else if (auto p = parse_port(item); p && *p >= 1024) {
        out.push_back(*p);
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return out;
}

bool is_one_of(const std::string& head, std::initializer_list<const char*> heads) {
  return std::any_of(heads.begin(), heads.end(), [&](const char* h) { return head == h; });
}

}  // namespace

Bot::Bot(PlayerDaemon& daemon, Policy policy, BotConfig config, CommandGrammar grammar)
    : daemon_(daemon),
      policy_(std::move(policy)),
      config_(std::move(config)),
      grammar_(std::move(grammar)),
      rng_(config_.seed) {
  policy_.transitions.validate();
  for (auto p : policy_.transitions.phases().phases())
    if (!policy_.models.count(p)) throw Rejected("no character model for phase " + to_string(p));
  known_keys_ = config_.key_candidates;
}

std::string Bot::target() const { return kb_.where.value_or("0.0.0.0"); }

std::string Bot::generate(Phase phase) {
  const auto& model = policy_.models.at(phase);
  std::string cmd;
  for (int attempt = 0; attempt <= config_.validity_retries; ++attempt) {
    cmd = policy_predict(model, "", target(), rng_, config_.decode, kMaxCommandLength, &trace_);
    if (!cmd.empty() && grammar_.accepts(cmd)) break;
  }
  if (cmd.empty()) cmd = "?";
  return cmd;
}

Timestamp Bot::type_out(const std::string& command, Timestamp at) {
  for (char c : command) {
    if (rng_.unit() < config_.typo_rate) {
      daemon_.record_keystroke(static_cast<char>('a' + rng_.below(26)), at);
      at += config_.keystroke_interval;
      daemon_.record_keystroke(kBackspace, at);
      at += config_.keystroke_interval;
    }
    daemon_.record_keystroke(c, at);
    at += config_.keystroke_interval;
  }
  return at;
}

AgentAction Bot::recon() {
  const auto ip = daemon_.get_opponent_ip();
  if (!ip) return AgentAction::Stall;
  const bool fresh = kb_.where != ip;
  kb_.where = *ip;
  kb_.who = daemon_.opponent().value_or(*ip);
  return fresh ? AgentAction::Progress : AgentAction::Stall;
}

AgentAction Bot::scan(const std::vector<std::string>& words, Timestamp at) {
  if (!kb_.where) return AgentAction::Stall;
  auto ports = ports_in(words);
  if (ports.empty())
    for (unsigned p = config_.scan_from; p <= config_.scan_to; ++p) ports.push_back(static_cast<std::uint16_t>(p));
  bool found = false;
  for (auto p : ports) {
    if (daemon_.scan_port(p)) {
      found |= open_ports_.insert(p).second;
    } else {
      open_ports_.erase(p);
    }
  }
  kb_.when = at;
  if (!open_ports_.empty()) {
    std::string map;
    for (auto p : open_ports_) map += (map.empty() ? "" : ",") + std::to_string(p);
    kb_.what = map;
  }
  return found ? AgentAction::Progress : AgentAction::Stall;
}

AgentAction Bot::exploit(std::uint16_t port, const std::string& key) {
  const auto reply = daemon_.attack_unit(port, kTemplateKeyGuess, key);
  if (reply.rfind("FLAG ", 0) != 0) return AgentAction::Stall;
  if (std::find(known_keys_.begin(), known_keys_.end(), key) == known_keys_.end()) known_keys_.push_back(key);
  const auto fp = reply.substr(5);
  if (captured_.count(fp)) return AgentAction::Stall;
  kb_.why = "capture";
  if (!daemon_.capture_unit(fp)) return AgentAction::Stall;
  captured_.insert(fp);
  return AgentAction::Progress;
}

AgentAction Bot::hail_mary() {
  if (!kb_.where) return AgentAction::Stall;
  // A port that was down during the last scan may be back, so sweep the
  // whole scan range too.
  std::set<std::uint16_t> ports = open_ports_;
  for (unsigned p = config_.scan_from; p <= config_.scan_to; ++p) ports.insert(static_cast<std::uint16_t>(p));
  AgentAction out = AgentAction::Stall;
  for (auto p : ports)
    for (const auto& key : std::vector<std::string>(known_keys_))
      if (exploit(p, key) == AgentAction::Progress) out = AgentAction::Progress;
  return out;
}

AgentAction Bot::execute(const std::string& command, Timestamp at) {
  const auto words = split_words(command);
  if (words.empty()) return AgentAction::Stall;
  const auto& head = words[0];
  if (is_one_of(head, {"getip", "whois", "host", "dig", "ping"})) return recon();
  if (is_one_of(head, {"nmap", "nc", "hping3", "curl"})) return scan(words, at);
  if (!kb_.where || words.size() < 3) return AgentAction::Stall;
  const auto port = parse_port(words[2]);
  if (!port) return AgentAction::Stall;
  if (head == "exploit" && words.size() == 4) return exploit(*port, words[3]);
  if (head == "dos") return daemon_.attack_unit(*port, kTemplateKill) == "BYE" ? AgentAction::Progress : AgentAction::Stall;
  if (head == "flood") daemon_.attack_unit(*port, kTemplateFlood);
  return AgentAction::Stall;
}

StepResult Bot::step(Timestamp now) {
  StepResult r;
  r.phase = phase_;
  r.next_at = now + config_.think_time;
  if (forfeited_ || daemon_.phase() == GamePhase::Finished) return r;

  try {
    const Phase next = started_ ? plan_next_state(kb_, phase_, last_, policy_.transitions, rng_, config_.plan)
                                : policy_.transitions.phases().phases().front();
    if (started_) trace_.transitions.push_back({phase_, last_, next});
    started_ = true;
    phase_ = next;
    r.phase = phase_;
    r.command = generate(phase_);
    const Timestamp typed = type_out(r.command, now);
    r.valid = daemon_.submit_command(r.command, typed).valid;
    try {
      r.outcome = r.valid ? execute(r.command, typed) : AgentAction::Stall;
    } catch (const Rejected&) {
      r.outcome = AgentAction::Stall;
    }
    if (phase_ == Phase::GainingAccess) {
      access_stalls_ = r.outcome == AgentAction::Stall ? access_stalls_ + 1 : 0;
      if (access_stalls_ >= config_.hail_mary_after) {
        access_stalls_ = 0;
        try {
          if (hail_mary() == AgentAction::Progress) r.outcome = AgentAction::Progress;
        } catch (const Rejected&) {
        }
      }
    }
    last_ = r.outcome;
    r.next_at = typed + config_.think_time + Millis(static_cast<std::int64_t>(rng_.below(400)));
  } catch (const Rejected&) {
    last_ = AgentAction::Stall;
  } catch (const Error&) {
    forfeited_ = true;
  }
  return r;
}

void Bot::finish(bool won, double alpha) { apply_outcome_penalty(policy_, trace_, won, alpha); }

}  // namespace cyberduel::bot
