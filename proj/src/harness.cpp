#include "qtree/harness.hpp"

#include <algorithm>
#include <stdexcept>

#include "qtree/runner.hpp"

namespace qtree::refine {

using sim::EventKind;
using sim::SimConfig;
using sim::Trace;

std::map<std::uint64_t, std::vector<InvocationLabel>> extract(const Trace& trace) {
  std::map<std::uint64_t, std::vector<InvocationLabel>> out;
  for (const auto& e : trace.events) {
    if (e.kind != EventKind::Linpoint) continue;
    if (!e.label) throw std::runtime_error("linpoint event without a label");
    if (!e.label->ok) throw std::runtime_error("linpoint label with FAIL result");
    out[e.label->instance].push_back(*e.label);
  }
  return out;
}

std::string InstanceReport::line() const {
  std::string out = "instance=" + std::to_string(instance);
  out += " declarative=" + declarative.str();
  out += " replay=" + replay.str();
  out += concordant ? " concordant=true" : " concordant=false";
  return out;
}

std::string RefinementReport::render() const {
  std::string out;
  for (const auto& ir : instances) {
    out += ir.line();
    out += '\n';
  }
  out += pass ? "refinement=pass" : "refinement=fail";
  if (!concordant) out += " checker-disagreement";
  out += '\n';
  return out;
}

RefinementReport check_refinement(const Trace& trace, const SimConfig& cfg) {
  RefinementReport rep;
  for (const auto& [sn, seq] : extract(trace)) {
    InstanceReport ir;
    ir.instance = sn;
    ir.declarative = seqcheck::check_declarative(seq, cfg.mode());
    ir.replay = seqcheck::replay(seq, cfg.mode());
    ir.concordant = ir.declarative.accepted == ir.replay.accepted;
    if (!ir.declarative.accepted || !ir.replay.accepted) rep.pass = false;
    if (!ir.concordant) rep.concordant = false;
    rep.instances.push_back(std::move(ir));
  }
  if (!rep.concordant) rep.pass = false;
  return rep;
}

std::string SafetyReport::render() const {
  std::string out;
  for (const auto& v : violations) {
    out += v;
    out += '\n';
  }
  for (const auto& [sn, v] : client_accepted)
    out += "client_accepted sn=" + std::to_string(sn) + " v=" + v + '\n';
  out += safe ? "endtoend=safe" : "endtoend=violation";
  out += '\n';
  return out;
}

SafetyReport check_endtoend(const Trace& trace, const SimConfig& cfg) {
  SafetyReport rep;
  auto flag = [&](std::string s) {
    rep.safe = false;
    rep.violations.push_back(std::move(s));
  };
  bool known_value_ok = true;

  // decide events of correct processes only
  struct Decision {
    int proc;
    sim::DecideInfo d;
  };
  std::vector<Decision> decisions;
  for (const auto& e : trace.events) {
    if (e.kind != EventKind::Decide || !e.decide) continue;
    if (cfg.byzantine(e.proc)) continue;
    decisions.push_back({e.proc, *e.decide});
    if (std::find(cfg.client_values.begin(), cfg.client_values.end(), e.decide->value) ==
        cfg.client_values.end()) {
      known_value_ok = false;
      flag("validity: decided value " + e.decide->value + " is not a client value");
    }
  }

  // per-decree agreement; log and chain replication agree per position
  // instead, checked below
  if (cfg.mode() == Mode::SingleDecree) {
    std::map<std::uint64_t, std::string> agreed;
    std::map<std::uint64_t, std::set<int>> deciders;
    for (const auto& dec : decisions) {
      auto [it, fresh] = agreed.try_emplace(dec.d.sn, dec.d.value);
      if (!fresh && it->second != dec.d.value)
        flag("agreement: decree " + std::to_string(dec.d.sn) + " decided both " +
             it->second + " and " + dec.d.value);
      deciders[dec.d.sn].insert(dec.proc);
    }
    for (const auto& [sn, procs] : deciders)
      if ((int)procs.size() >= cfg.f + 1 && known_value_ok) {
        auto it = agreed.find(sn);
        if (it != agreed.end()) rep.client_accepted.emplace(sn, it->second);
      }
  }

  if (cfg.protocol == sim::Protocol::Raft) {
    // decided log positions must agree across processes
    std::map<long, std::string> by_index;
    for (const auto& dec : decisions) {
      if (dec.d.index < 0) continue;
      auto [it, fresh] = by_index.try_emplace(dec.d.index, dec.d.value);
      if (!fresh && it->second != dec.d.value)
        flag("prefix: log index " + std::to_string(dec.d.index) + " decided both " +
             it->second + " and " + dec.d.value);
    }
  }
  if (cfg.protocol == sim::Protocol::HotStuff) {
    // decided branches must be prefixes of one another
    for (size_t i = 0; i < decisions.size(); ++i)
      for (size_t j = i + 1; j < decisions.size(); ++j) {
        const auto& a = decisions[i].d.branch;
        const auto& b = decisions[j].d.branch;
        const auto& shorter = a.size() <= b.size() ? a : b;
        const auto& longer = a.size() <= b.size() ? b : a;
        if (!std::equal(shorter.begin(), shorter.end(), longer.begin()))
          flag("prefix: decided branches diverge");
      }
  }
  return rep;
}

RunCheck check_run(const Trace& trace, const SimConfig& cfg) {
  RunCheck rc;
  rc.refinement = check_refinement(trace, cfg);
  rc.safety = check_endtoend(trace, cfg);
  rc.pass = rc.refinement.pass && rc.safety.safe;
  return rc;
}

SimConfig sweep_config(const SweepSpec& spec, std::uint64_t seed) {
  SimConfig cfg = spec.base;
  cfg.seed = seed;
  if (spec.derive_byzantine) cfg.faults.byzantine = {int(seed % cfg.n)};
  if (spec.derive_crashes && seed % 4 == 0) {
    int victim = int((seed / 4) % cfg.n);
    int when = 20 + int(seed % 60);
    cfg.faults.crash_at[victim] = when;
  }
  return cfg;
}

SweepResult run_sweep(const SweepSpec& spec) {
  SweepResult res;
  for (std::uint64_t k = 0; k < spec.num_seeds; ++k) {
    std::uint64_t seed = spec.first_seed + k;
    SimConfig cfg = sweep_config(spec, seed);
    Trace trace = sim::run_protocol(cfg);
    RunCheck rc = check_run(trace, cfg);

    ++res.runs;
    if (rc.pass) ++res.passed;
    if (!rc.refinement.pass) ++res.refinement_failures;
    if (!rc.refinement.concordant) ++res.discordances;
    if (!rc.safety.safe) ++res.safety_violations;
    bool committed = false;
    for (const auto& e : trace.events)
      if (e.kind == EventKind::Linpoint && e.label &&
          e.label->kind == InvocationLabel::Kind::Commit)
        committed = true;
    if (committed) ++res.runs_with_commits;

    // status-oracle cross-check on every prefix of every accepted sequence
    for (const auto& [sn, seq] : extract(trace)) {
      (void)sn;
      if (!seqcheck::replay(seq, cfg.mode()).accepted) continue;
      for (std::size_t len = 0; len <= seq.size(); ++len) {
        std::span<const InvocationLabel> prefix(seq.data(), len);
        QTree tree(cfg.mode(), cfg.round_form());
        for (const auto& l : prefix)
          l.kind == InvocationLabel::Kind::Add ? tree.add(l.round, l.value, l.parent)
                                               : tree.commit(l.round);
        ++res.prefixes_checked;
        if (seqcheck::statuses_from_labels(prefix) != tree.status_map()) {
          ++res.oracle_mismatches;
          if (res.failures.size() < 20)
            res.failures.push_back("seed " + std::to_string(seed) +
                                   ": status oracle mismatch");
        }
      }
    }
    if (!rc.pass && res.failures.size() < 20) {
      std::string why = !rc.refinement.pass ? "refinement" : "safety";
      res.failures.push_back("seed " + std::to_string(seed) + ": " + why + " failure");
    }
  }
  return res;
}

std::string SweepResult::summary() const {
  std::string out = "runs=" + std::to_string(runs);
  out += " passed=" + std::to_string(passed);
  out += " refinement_failures=" + std::to_string(refinement_failures);
  out += " discordances=" + std::to_string(discordances);
  out += " safety_violations=" + std::to_string(safety_violations);
  out += " runs_with_commits=" + std::to_string(runs_with_commits);
  out += " prefixes_checked=" + std::to_string(prefixes_checked);
  out += " oracle_mismatches=" + std::to_string(oracle_mismatches);
  return out;
}

}  // namespace qtree::refine
