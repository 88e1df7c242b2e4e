#include "qtree/config.hpp"

#include <istream>
#include <sstream>
#include <stdexcept>

namespace qtree::sim {

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::Paxos: return "paxos";
    case Protocol::MultiPaxos: return "multipaxos";
    case Protocol::Raft: return "raft";
    case Protocol::Pbft: return "pbft";
    case Protocol::HotStuff: return "hotstuff";
  }
  return "?";
}

std::string_view to_string(ByzStrategy s) {
  switch (s) {
    case ByzStrategy::None: return "none";
    case ByzStrategy::Equivocate: return "equivocate";
    case ByzStrategy::Withhold: return "withhold";
    case ByzStrategy::ReplayStale: return "replay-stale";
    case ByzStrategy::VoteNoJoin: return "vote-no-join";
    case ByzStrategy::PerSeed: return "per-seed";
    case ByzStrategy::ForgeCert: return "forge-cert";
  }
  return "?";
}

std::string_view to_string(Mutation m) {
  switch (m) {
    case Mutation::None: return "none";
    case Mutation::PaxosVoteIgnoreJoined: return "paxos-vote-ignore-joined";
    case Mutation::PaxosJoinForgetVotes: return "paxos-join-forget-votes";
    case Mutation::HotStuffCertThreshold: return "hotstuff-cert-threshold";
    case Mutation::RaftGrantAnyVote: return "raft-grant-any-vote";
    case Mutation::PbftJoinSkipValidation: return "pbft-join-skip-validation";
  }
  return "?";
}

std::optional<Protocol> protocol_from_string(std::string_view s) {
  for (Protocol p : {Protocol::Paxos, Protocol::MultiPaxos, Protocol::Raft, Protocol::Pbft,
                     Protocol::HotStuff})
    if (s == to_string(p)) return p;
  return std::nullopt;
}

std::optional<ByzStrategy> strategy_from_string(std::string_view s) {
  for (ByzStrategy b :
       {ByzStrategy::None, ByzStrategy::Equivocate, ByzStrategy::Withhold,
        ByzStrategy::ReplayStale, ByzStrategy::VoteNoJoin, ByzStrategy::PerSeed,
        ByzStrategy::ForgeCert})
    if (s == to_string(b)) return b;
  return std::nullopt;
}

std::optional<Mutation> mutation_from_string(std::string_view s) {
  for (Mutation m : {Mutation::None, Mutation::PaxosVoteIgnoreJoined,
                     Mutation::PaxosJoinForgetVotes, Mutation::HotStuffCertThreshold,
                     Mutation::RaftGrantAnyVote, Mutation::PbftJoinSkipValidation})
    if (s == to_string(m)) return m;
  return std::nullopt;
}

Mode SimConfig::mode() const {
  return protocol == Protocol::Raft || protocol == Protocol::HotStuff ? Mode::Smr
                                                                      : Mode::SingleDecree;
}

Round::Form SimConfig::round_form() const {
  return protocol == Protocol::Raft ? Round::Form::Pair : Round::Form::Nat;
}

bool SimConfig::multi_instance() const {
  return protocol == Protocol::MultiPaxos || protocol == Protocol::Pbft;
}

std::uint64_t SimConfig::first_instance() const {
  return protocol == Protocol::Pbft ? 1 : 0;
}

ByzStrategy SimConfig::effective_strategy() const {
  if (strategy != ByzStrategy::PerSeed) return strategy;
  constexpr ByzStrategy kPool[] = {ByzStrategy::Equivocate, ByzStrategy::Withhold,
                                   ByzStrategy::ReplayStale, ByzStrategy::VoteNoJoin};
  return kPool[seed % 4];
}

void SimConfig::finalize() {
  bool bft = protocol == Protocol::Pbft || protocol == Protocol::HotStuff;
  if (n == 0 && f < 0) f = 1;
  if (n == 0) n = bft ? 3 * f + 1 : 2 * f + 1;
  if (f < 0) f = bft ? (n - 1) / 3 : (n - 1) / 2;
  if (n < 1 || f < 0 || f >= n) throw std::invalid_argument("bad process/fault counts");

  bool q_overridden = (q1 > 0 && q1 != n - f) || (q2 > 0 && q2 != n - f);
  if (q_overridden && protocol != Protocol::MultiPaxos)
    throw std::invalid_argument("quorum overrides are only allowed for multipaxos");
  if (q1 <= 0) q1 = n - f;
  if (q2 <= 0) q2 = n - f;
  if (q1 > n || q2 > n) throw std::invalid_argument("quorum larger than process count");

  if (!faults.byzantine.empty()) {
    if (!bft) throw std::invalid_argument("byzantine processes require pbft or hotstuff");
    if ((int)faults.byzantine.size() > f)
      throw std::invalid_argument("more byzantine processes than the fault budget");
    for (int p : faults.byzantine)
      if (p < 0 || p >= n) throw std::invalid_argument("byzantine id out of range");
  }
  if (strategy != ByzStrategy::None && faults.byzantine.empty())
    throw std::invalid_argument("a strategy requires byzantine processes");
  if (!faults.byzantine.empty() && strategy == ByzStrategy::None)
    strategy = ByzStrategy::PerSeed;

  if (instances <= 0) {
    switch (protocol) {
      case Protocol::Paxos: instances = 1; break;
      case Protocol::MultiPaxos: instances = 3; break;
      case Protocol::Raft: instances = 3; break;
      case Protocol::Pbft: instances = 2; break;
      case Protocol::HotStuff: instances = 3; break;
    }
  }
  if (protocol == Protocol::Paxos && instances != 1)
    throw std::invalid_argument("paxos is single-decree");
  if (instances > 16) throw std::invalid_argument("instances capped at 16");
  if (batch < 1 || batch > 4) throw std::invalid_argument("batch must be 1..4");

  if (faults.drop_prob < 0 || faults.drop_prob > 1 || faults.dup_prob < 0 ||
      faults.dup_prob > 1)
    throw std::invalid_argument("probabilities must lie in [0,1]");
  if (faults.delay_min < 0 || faults.delay_max < faults.delay_min ||
      faults.delay_max > 64)
    throw std::invalid_argument("bad delay range");
  if (client_values.empty()) throw std::invalid_argument("client values must be non-empty");
  for (const auto& v : client_values) {
    if (v.empty() || v == "-") throw std::invalid_argument("bad client value token");
    for (char c : v)
      if (!isalnum((unsigned char)c) && c != '_' && c != '.')
        throw std::invalid_argument("client values are alphanumeric tokens");
  }
  if (max_steps < 1 || max_steps > 2'000'000)
    throw std::invalid_argument("bad step bound");
}

std::string client_value(const SimConfig& cfg, const Round& r, std::uint64_t sn) {
  std::uint64_t main = r.value() == 0 ? 1 : r.value();
  return cfg.client_values[(main - 1 + sn) % cfg.client_values.size()];
}

namespace {

std::string join_ints(const std::set<int>& xs) {
  std::string out;
  for (int x : xs) {
    if (!out.empty()) out += ',';
    out += std::to_string(x);
  }
  return out;
}

}  // namespace

std::string SimConfig::render_header() const {
  std::string out;
  out += "protocol=" + std::string(to_string(protocol));
  out += " n=" + std::to_string(n) + " f=" + std::to_string(f);
  out += " q1=" + std::to_string(q1) + " q2=" + std::to_string(q2);
  out += " steps=" + std::to_string(max_steps);
  out += " seed=" + std::to_string(seed);
  out += " drop=" + std::to_string(faults.drop_prob);
  out += " dup=" + std::to_string(faults.dup_prob);
  out += " delay=" + std::to_string(faults.delay_min) + ".." + std::to_string(faults.delay_max);
  out += " byz=" + join_ints(faults.byzantine);
  out += " strategy=" + std::string(to_string(strategy));
  out += " mutation=" + std::string(to_string(mutation));
  out += " instances=" + std::to_string(instances);
  out += " values=";
  for (size_t i = 0; i < client_values.size(); ++i) {
    if (i) out += ',';
    out += client_values[i];
  }
  if (!faults.crash_at.empty()) {
    out += " crash=";
    bool first = true;
    for (auto [p, s] : faults.crash_at) {
      if (!first) out += ',';
      first = false;
      out += std::to_string(p) + ":" + std::to_string(s);
    }
  }
  return out;
}

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  while (true) {
    auto p = s.find(sep);
    out.emplace_back(s.substr(0, p));
    if (p == std::string_view::npos) break;
    s.remove_prefix(p + 1);
  }
  return out;
}

void apply_kv(SimConfig& cfg, std::string_view key, std::string_view val) {
  auto bad = [&](const char* what) {
    throw std::invalid_argument(std::string("bad ") + what + ": " + std::string(val));
  };
  if (key == "protocol") {
    auto p = protocol_from_string(val);
    if (!p) bad("protocol");
    cfg.protocol = *p;
  } else if (key == "n") {
    cfg.n = std::stoi(std::string(val));
  } else if (key == "f") {
    cfg.f = std::stoi(std::string(val));
  } else if (key == "q1") {
    cfg.q1 = std::stoi(std::string(val));
  } else if (key == "q2") {
    cfg.q2 = std::stoi(std::string(val));
  } else if (key == "steps") {
    cfg.max_steps = std::stoi(std::string(val));
  } else if (key == "seed") {
    cfg.seed = std::stoull(std::string(val));
  } else if (key == "drop" || key == "drop_prob") {
    cfg.faults.drop_prob = std::stod(std::string(val));
  } else if (key == "dup" || key == "dup_prob") {
    cfg.faults.dup_prob = std::stod(std::string(val));
  } else if (key == "delay") {
    auto dots = std::string(val).find("..");
    if (dots == std::string::npos) bad("delay");
    cfg.faults.delay_min = std::stoi(std::string(val.substr(0, dots)));
    cfg.faults.delay_max = std::stoi(std::string(val.substr(dots + 2)));
  } else if (key == "delay_min") {
    cfg.faults.delay_min = std::stoi(std::string(val));
  } else if (key == "delay_max") {
    cfg.faults.delay_max = std::stoi(std::string(val));
  } else if (key == "byz" || key == "byzantine") {
    if (!val.empty())
      for (const auto& tok : split(val, ','))
        if (!tok.empty()) cfg.faults.byzantine.insert(std::stoi(tok));
  } else if (key == "strategy") {
    auto s = strategy_from_string(val);
    if (!s) bad("strategy");
    cfg.strategy = *s;
  } else if (key == "mutation") {
    auto m = mutation_from_string(val);
    if (!m) bad("mutation");
    cfg.mutation = *m;
  } else if (key == "instances") {
    cfg.instances = std::stoi(std::string(val));
  } else if (key == "batch") {
    cfg.batch = std::stoi(std::string(val));
  } else if (key == "values" || key == "client_values") {
    cfg.client_values.clear();
    for (const auto& tok : split(val, ','))
      if (!tok.empty()) cfg.client_values.push_back(tok);
  } else if (key == "crash" || key == "crash_at") {
    for (const auto& tok : split(val, ',')) {
      auto c = tok.find(':');
      if (c == std::string::npos) bad("crash entry");
      cfg.faults.crash_at[std::stoi(tok.substr(0, c))] = std::stoi(tok.substr(c + 1));
    }
  } else if (key == "partition") {
    // from..to:idA idB|idC idD  (ids comma separated)
    PartitionSpec ps;
    std::string s(val);
    auto dots = s.find("..");
    auto colon = s.find(':');
    if (dots == std::string::npos || colon == std::string::npos || colon < dots)
      bad("partition");
    ps.from_step = std::stoi(s.substr(0, dots));
    ps.to_step = std::stoi(s.substr(dots + 2, colon - dots - 2));
    auto bar = s.find('|', colon);
    std::string a = s.substr(colon + 1, bar == std::string::npos ? std::string::npos
                                                                 : bar - colon - 1);
    for (const auto& tok : split(a, ','))
      if (!tok.empty()) ps.group_a.push_back(std::stoi(tok));
    cfg.faults.partitions.push_back(std::move(ps));
  } else {
    throw std::invalid_argument("unknown config key: " + std::string(key));
  }
}

}  // namespace

SimConfig SimConfig::parse_header(std::string_view line) {
  SimConfig cfg;
  std::string_view rest = line;
  while (!rest.empty()) {
    while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
    auto sp = rest.find(' ');
    std::string_view tok = rest.substr(0, sp);
    rest = sp == std::string_view::npos ? std::string_view{} : rest.substr(sp + 1);
    if (tok.empty()) continue;
    auto eq = tok.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("bad header token: " + std::string(tok));
    apply_kv(cfg, tok.substr(0, eq), tok.substr(eq + 1));
  }
  cfg.finalize();
  return cfg;
}

SimConfig SimConfig::parse_file(std::istream& in) {
  SimConfig cfg;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    // trim
    auto b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    auto e = line.find_last_not_of(" \t");
    std::string body = line.substr(b, e - b + 1);
    auto eq = body.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("missing '=' at line " + std::to_string(lineno));
    auto strip = [](std::string s) {
      auto b2 = s.find_first_not_of(" \t");
      if (b2 == std::string::npos) return std::string();
      auto e2 = s.find_last_not_of(" \t");
      return s.substr(b2, e2 - b2 + 1);
    };
    try {
      apply_kv(cfg, strip(body.substr(0, eq)), strip(body.substr(eq + 1)));
    } catch (const std::exception& ex) {
      throw std::invalid_argument(std::string(ex.what()) + " at line " +
                                  std::to_string(lineno));
    }
  }
  cfg.finalize();
  return cfg;
}

Schedule Schedule::parse(std::istream& in) {
  Schedule sched;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    ScheduleEntry e;
    if (word == "timeout") {
      e.what = ScheduleEntry::What::Timeout;
    } else if (word == "deliver") {
      e.what = ScheduleEntry::What::Deliver;
    } else {
      throw std::runtime_error("bad schedule entry at line " + std::to_string(lineno));
    }
    while (ls >> word) {
      auto eq = word.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("bad schedule field at line " + std::to_string(lineno));
      std::string key = word.substr(0, eq), val = word.substr(eq + 1);
      if (key == "proc") e.proc = std::stoi(val);
      else if (key == "to") e.to = std::stoi(val);
      else if (key == "from") e.from = std::stoi(val);
      else if (key == "m") e.msg_type = val;
      else if (key == "r") {
        auto r = Round::parse(val);
        if (!r) throw std::runtime_error("bad round at line " + std::to_string(lineno));
        e.round = *r;
      } else if (key == "sn") {
        e.sn = std::stoull(val);
      } else {
        throw std::runtime_error("unknown schedule key at line " + std::to_string(lineno));
      }
    }
    if (e.what == ScheduleEntry::What::Timeout && e.proc < 0)
      throw std::runtime_error("timeout needs proc= at line " + std::to_string(lineno));
    if (e.what == ScheduleEntry::What::Deliver && (e.to < 0 || e.from < 0 || e.msg_type.empty()))
      throw std::runtime_error("deliver needs to=, from=, m= at line " + std::to_string(lineno));
    sched.entries.push_back(std::move(e));
  }
  return sched;
}

}  // namespace qtree::sim
