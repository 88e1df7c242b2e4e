// Acceptance suite: one test case and one printed PASS/FAIL line per
// criterion. Run via ctest or directly; the binary exits nonzero on any
// failure.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <chrono>
#include <fstream>
#include <iostream>

#include "doctest.h"
#include "qtree/checker.hpp"
#include "qtree/figures.hpp"
#include "qtree/harness.hpp"
#include "qtree/runner.hpp"

using namespace qtree;
using namespace qtree::sim;
using namespace qtree::refine;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(int criterion, bool pass, const std::string& detail) {
  std::cout << "[criterion " << criterion << "] " << (pass ? "PASS" : "FAIL") << " — "
            << detail << "\n"
            << std::flush;
}

struct SweepCase {
  std::string name;
  SweepSpec spec;
};

// the sweep grid shared by criteria 3 and 4
std::vector<SweepCase> sweep_grid() {
  std::vector<SweepCase> cases;
  auto add_drop_variants = [&](const std::string& name, SimConfig base, bool crashes,
                               bool byz) {
    for (double drop : {0.0, 0.1, 0.3}) {
      SimConfig cfg = base;
      cfg.faults.drop_prob = drop;
      cfg.faults.dup_prob = 0.1;
      cfg.finalize();
      SweepSpec spec;
      spec.base = cfg;
      spec.first_seed = 1;
      spec.num_seeds = 1000;
      spec.derive_crashes = crashes;
      spec.derive_byzantine = byz;
      cases.push_back({name + " drop=" + std::to_string(drop).substr(0, 3), spec});
    }
  };

  {
    SimConfig cfg;
    cfg.protocol = Protocol::Paxos;
    cfg.n = 3;
    cfg.f = 1;
    cfg.max_steps = 250;
    add_drop_variants("paxos n=3", cfg, true, false);
  }
  for (int n : {3, 4, 5}) {
    SimConfig cfg;
    cfg.protocol = Protocol::MultiPaxos;
    cfg.n = n;
    cfg.instances = 3;
    cfg.max_steps = 350;
    add_drop_variants("multipaxos n=" + std::to_string(n), cfg, true, false);
  }
  for (int n : {3, 5}) {
    SimConfig cfg;
    cfg.protocol = Protocol::Raft;
    cfg.n = n;
    cfg.instances = 3;
    cfg.max_steps = 450;
    add_drop_variants("raft n=" + std::to_string(n), cfg, true, false);
  }
  for (ByzStrategy strat : {ByzStrategy::Equivocate, ByzStrategy::Withhold,
                            ByzStrategy::ReplayStale, ByzStrategy::VoteNoJoin}) {
    SimConfig cfg;
    cfg.protocol = Protocol::Pbft;
    cfg.n = 4;
    cfg.f = 1;
    cfg.instances = 2;
    cfg.strategy = strat;
    cfg.faults.byzantine = {0};  // replaced per seed by the sweep
    cfg.max_steps = 500;
    add_drop_variants("pbft " + std::string(to_string(strat)), cfg, false, true);
  }
  for (ByzStrategy strat : {ByzStrategy::Equivocate, ByzStrategy::Withhold,
                            ByzStrategy::ReplayStale, ByzStrategy::VoteNoJoin}) {
    SimConfig cfg;
    cfg.protocol = Protocol::HotStuff;
    cfg.n = 4;
    cfg.f = 1;
    cfg.strategy = strat;
    cfg.faults.byzantine = {0};
    cfg.max_steps = 500;
    add_drop_variants("hotstuff " + std::string(to_string(strat)), cfg, false, true);
  }
  return cases;
}

// cached across criteria 3 and 4 so the grid runs once
struct GridOutcome {
  std::uint64_t runs = 0, passed = 0, discordances = 0, safety_violations = 0;
  std::uint64_t prefixes = 0, oracle_mismatches = 0, with_commits = 0;
  double elapsed = 0;
  std::vector<std::string> failures;
  bool done = false;
};
GridOutcome grid;

void run_grid_once() {
  if (grid.done) return;
  auto t0 = std::chrono::steady_clock::now();
  for (const SweepCase& sc : sweep_grid()) {
    SweepResult res = run_sweep(sc.spec);
    grid.runs += res.runs;
    grid.passed += res.passed;
    grid.discordances += res.discordances;
    grid.safety_violations += res.safety_violations;
    grid.prefixes += res.prefixes_checked;
    grid.oracle_mismatches += res.oracle_mismatches;
    grid.with_commits += res.runs_with_commits;
    for (const auto& f : res.failures)
      if (grid.failures.size() < 30) grid.failures.push_back(sc.name + ": " + f);
  }
  grid.elapsed = seconds_since(t0);
  grid.done = true;
}

}  // namespace

TEST_CASE("criterion 1: exhaustive checker equivalence within bounds") {
  auto t0 = std::chrono::steady_clock::now();
  seqcheck::EnumBounds bounds{4, 3, 2};  // rounds {1,2,3}, parents {0,1,2}
  bool pass = true;
  std::uint64_t total = 0;
  for (Mode mode : {Mode::SingleDecree, Mode::Smr}) {
    seqcheck::EquivalenceStats st = seqcheck::check_equivalence(bounds, mode);
    total = st.total;
    if (st.discordant != 0) {
      pass = false;
      for (const auto& ex : st.examples) std::cout << "  discordant: " << ex << "\n";
    }
  }
  double secs = seconds_since(t0);
  pass = pass && secs < 60.0;
  report(1, pass,
         std::to_string(total) + " sequences per mode, both modes, zero discordances, " +
             std::to_string(secs).substr(0, 5) + "s");
  CHECK(pass);
}

TEST_CASE("criterion 2: golden figures reproduce byte-exactly") {
  std::string dir = std::string(QTSIM_SOURCE_DIR) + "/goldens";
  bool pass = true;
  std::string detail;
  for (const std::string& name : figures::figure_names()) {
    figures::FigureOutput out = figures::run_figure(name);
    figures::GoldenDiff gd = figures::compare_with_goldens(out, dir);
    if (!gd.ok) {
      pass = false;
      std::cout << gd.diff;
    }
    detail += name + " ";
  }
  report(2, pass, detail + "against " + dir);
  CHECK(pass);
}

TEST_CASE("criterion 3: refinement sweeps pass both checkers with concordance") {
  run_grid_once();
  bool pass = grid.passed == grid.runs && grid.discordances == 0 &&
              grid.elapsed < 600.0;
  for (const auto& f : grid.failures) std::cout << "  " << f << "\n";
  report(3, pass,
         std::to_string(grid.runs) + " runs, " + std::to_string(grid.passed) +
             " passed, " + std::to_string(grid.discordances) + " discordances, " +
             std::to_string(grid.with_commits) + " runs reached a commit, " +
             std::to_string(grid.elapsed).substr(0, 6) + "s");
  CHECK(pass);
}

TEST_CASE("criterion 4: end-to-end safety and the status oracle across the sweeps") {
  run_grid_once();
  bool pass = grid.safety_violations == 0 && grid.oracle_mismatches == 0 &&
              grid.prefixes >= 10'000;
  report(4, pass,
         std::to_string(grid.safety_violations) + " safety violations, " +
             std::to_string(grid.prefixes) + " prefixes oracle-checked, " +
             std::to_string(grid.oracle_mismatches) + " mismatches");
  CHECK(pass);
}

TEST_CASE("criterion 5a: non-intersecting flexible quorums are flagged as a branch conflict") {
  SimConfig cfg;
  cfg.protocol = Protocol::MultiPaxos;
  cfg.n = 4;
  cfg.f = 1;
  cfg.q1 = 1;
  cfg.q2 = 2;
  cfg.instances = 1;
  cfg.client_values = {"v1", "vx", "v2"};
  std::ifstream sched(std::string(QTSIM_SOURCE_DIR) + "/schedules/flexible_bad.sched");
  REQUIRE(sched.good());
  cfg.schedule = Schedule::parse(sched);
  cfg.finalize();
  Trace t = run_protocol(cfg);
  RunCheck rc = check_run(t, cfg);
  bool pass = !rc.refinement.pass && !rc.safety.safe &&
              rc.refinement.instances.size() == 1 &&
              !rc.refinement.instances[0].declarative.accepted &&
              rc.refinement.instances[0].declarative.rule == seqcheck::Rule::P3Conflict;
  report(5, pass, "5a: q1+q2 <= n schedule rejected with P3-conflict");
  CHECK(pass);
}

TEST_CASE("criterion 5b: seeded protocol mutations are caught by the refinement check") {
  struct Case {
    Protocol proto;
    Mutation mutation;
    ByzStrategy strategy;
  };
  const Case cases[] = {
      {Protocol::Paxos, Mutation::PaxosVoteIgnoreJoined, ByzStrategy::None},
      {Protocol::Paxos, Mutation::PaxosJoinForgetVotes, ByzStrategy::None},
      {Protocol::Raft, Mutation::RaftGrantAnyVote, ByzStrategy::None},
      {Protocol::HotStuff, Mutation::HotStuffCertThreshold, ByzStrategy::Equivocate},
      {Protocol::Pbft, Mutation::PbftJoinSkipValidation, ByzStrategy::Equivocate},
  };
  bool pass = true;
  std::string detail = "5b:";
  for (const Case& c : cases) {
    std::uint64_t caught_at = 0;
    bool coupling_ok = true;
    for (std::uint64_t seed = 1; seed <= 200 && !caught_at; ++seed) {
      SimConfig cfg;
      cfg.protocol = c.proto;
      cfg.f = 1;
      cfg.seed = seed;
      cfg.mutation = c.mutation;
      cfg.max_steps = 500;
      cfg.faults.drop_prob = 0.15;
      cfg.faults.delay_max = 6;
      if (c.strategy != ByzStrategy::None) {
        cfg.strategy = c.strategy;
        cfg.faults.byzantine = {int(seed % 4)};
      }
      cfg.finalize();
      Trace t = run_protocol(cfg);
      RunCheck rc = check_run(t, cfg);
      if (!rc.safety.safe && rc.refinement.pass) coupling_ok = false;
      if (!rc.refinement.pass) caught_at = seed;
    }
    if (!caught_at || !coupling_ok) pass = false;
    detail += " " + std::string(to_string(c.mutation)) + "@" +
              (caught_at ? std::to_string(caught_at) : std::string("miss"));
  }
  report(5, pass, detail);
  CHECK(pass);
}

TEST_CASE("criterion 6: repeated runs are bit-identical") {
  bool pass = true;
  std::string detail;
  auto check_one = [&](Protocol proto, bool byz) {
    SimConfig cfg;
    cfg.protocol = proto;
    cfg.f = 1;
    cfg.seed = 7;
    cfg.max_steps = 400;
    cfg.faults.drop_prob = 0.1;
    cfg.faults.dup_prob = 0.1;
    if (byz) {
      cfg.faults.byzantine = {1};
      cfg.strategy = ByzStrategy::PerSeed;
    }
    cfg.finalize();
    std::uint64_t d1 = run_protocol(cfg).digest();
    std::uint64_t d2 = run_protocol(cfg).digest();
    if (d1 != d2) pass = false;
    detail += std::string(to_string(proto)) + "=" + (d1 == d2 ? "ok " : "DIFF ");
  };
  check_one(Protocol::Paxos, false);
  check_one(Protocol::MultiPaxos, false);
  check_one(Protocol::Raft, false);
  check_one(Protocol::Pbft, true);
  check_one(Protocol::HotStuff, true);
  report(6, pass, detail);
  CHECK(pass);
}
