#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qtree/checker.hpp"
#include "qtree/config.hpp"
#include "qtree/trace.hpp"

namespace qtree::refine {

// Linearization-point labels per instance, in trace order. Throws
// std::runtime_error if a linpoint event carries a FAIL result.
std::map<std::uint64_t, std::vector<InvocationLabel>> extract(const sim::Trace& trace);

struct InstanceReport {
  std::uint64_t instance = 0;
  seqcheck::Verdict declarative;
  seqcheck::Verdict replay;
  bool concordant = true;

  std::string line() const;
};

struct RefinementReport {
  std::vector<InstanceReport> instances;
  bool pass = true;        // every instance accepted by both checkers
  bool concordant = true;  // the two checkers agreed everywhere

  std::string render() const;
};

// Runs both checkers over every instance's extracted sequence. mode/round
// form follow the protocol in cfg.
RefinementReport check_refinement(const sim::Trace& trace, const sim::SimConfig& cfg);

struct SafetyReport {
  bool safe = true;
  std::vector<std::string> violations;  // agreement / validity / prefix findings
  // decisions confirmed by f+1 distinct correct processes (the client rule
  // for byzantine protocols)
  std::map<std::uint64_t, std::string> client_accepted;

  std::string render() const;
};

// QTree-independent end-to-end oracle over decide events: per-decree
// agreement among correct processes, prefix compatibility of decided
// logs/branches for log and chain replication, and every decided value
// originating from the configured client values.
SafetyReport check_endtoend(const sim::Trace& trace, const sim::SimConfig& cfg);

struct RunCheck {
  RefinementReport refinement;
  SafetyReport safety;
  bool pass = true;
};

RunCheck check_run(const sim::Trace& trace, const sim::SimConfig& cfg);

// Seed sweep: runs cfg once per seed (optionally deriving crash plans and
// byzantine membership from the seed) and aggregates the checks, including
// the status-oracle cross-check over prefixes of every accepted sequence.
struct SweepSpec {
  sim::SimConfig base;
  std::uint64_t first_seed = 1;
  std::uint64_t num_seeds = 100;
  bool derive_crashes = false;    // crash protocols: crash one process on some seeds
  bool derive_byzantine = false;  // bft protocols: byzantine member varies by seed
};

struct SweepResult {
  std::uint64_t runs = 0;
  std::uint64_t passed = 0;
  std::uint64_t refinement_failures = 0;
  std::uint64_t discordances = 0;
  std::uint64_t safety_violations = 0;
  std::uint64_t runs_with_commits = 0;
  std::uint64_t prefixes_checked = 0;   // status-oracle comparisons
  std::uint64_t oracle_mismatches = 0;
  std::vector<std::string> failures;    // capped, for reporting

  std::string summary() const;
};

sim::SimConfig sweep_config(const SweepSpec& spec, std::uint64_t seed);
SweepResult run_sweep(const SweepSpec& spec);

}  // namespace qtree::refine
