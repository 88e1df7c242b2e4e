#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sstream>

#include "doctest.h"
#include "qtree/harness.hpp"
#include "qtree/runner.hpp"

using namespace qtree;
using namespace qtree::sim;
using namespace qtree::refine;

namespace {

TraceEvent linpoint(int step, InvocationLabel l, bool with_sn = true) {
  TraceEvent e;
  e.step = step;
  e.kind = EventKind::Linpoint;
  e.proc = 0;
  e.text = l.str(with_sn);
  e.label = std::move(l);
  return e;
}

TraceEvent decide_event(int step, int proc, std::uint64_t sn, Round r, std::string v) {
  TraceEvent e;
  e.step = step;
  e.kind = EventKind::Decide;
  e.proc = proc;
  DecideInfo d;
  d.sn = sn;
  d.round = r;
  d.value = std::move(v);
  e.text = render_decide(d);
  e.decide = std::move(d);
  return e;
}

SimConfig paxos_cfg() {
  SimConfig cfg;
  cfg.protocol = Protocol::Paxos;
  cfg.f = 1;
  cfg.finalize();
  return cfg;
}

}  // namespace

TEST_CASE("extract groups labels by instance in trace order") {
  Trace t;
  t.events.push_back(linpoint(1, InvocationLabel::add(0, Round::nat(1), "v1", Round::nat(0))));
  t.events.push_back(linpoint(2, InvocationLabel::add(2, Round::nat(1), "w", Round::nat(0))));
  t.events.push_back(linpoint(3, InvocationLabel::commit(0, Round::nat(1))));
  auto seqs = extract(t);
  REQUIRE(seqs.size() == 2);
  CHECK(seqs.at(0).size() == 2);
  CHECK(seqs.at(2).size() == 1);
  CHECK(seqs.at(0)[1].kind == InvocationLabel::Kind::Commit);

  Trace empty;
  CHECK(extract(empty).empty());
}

TEST_CASE("a clean run produces a passing report with concordant verdicts") {
  SimConfig cfg = paxos_cfg();
  cfg.seed = 4;
  cfg.max_steps = 300;
  Trace t = run_protocol(cfg);
  RunCheck rc = check_run(t, cfg);
  CHECK(rc.pass);
  std::string report = rc.refinement.render();
  CHECK(report.find("declarative=accept") != std::string::npos);
  CHECK(report.find("replay=accept") != std::string::npos);
  CHECK(report.find("concordant=true") != std::string::npos);
  CHECK(report.find("refinement=pass") != std::string::npos);
  CHECK(rc.safety.render().find("endtoend=safe") != std::string::npos);
}

TEST_CASE("a crafted duplicate commit is rejected by both checkers") {
  Trace t;
  t.events.push_back(linpoint(1, InvocationLabel::add(0, Round::nat(1), "v1", Round::nat(0)), false));
  t.events.push_back(linpoint(2, InvocationLabel::commit(0, Round::nat(1)), false));
  t.events.push_back(linpoint(3, InvocationLabel::commit(0, Round::nat(1)), false));
  RefinementReport rep = check_refinement(t, paxos_cfg());
  REQUIRE(rep.instances.size() == 1);
  CHECK(!rep.pass);
  CHECK(rep.concordant);
  CHECK(rep.instances[0].declarative.rule == seqcheck::Rule::P1DupCommit);
  CHECK(rep.instances[0].declarative.index == 2);
  CHECK(rep.instances[0].line() ==
        "instance=0 declarative=reject:P1-dup-commit:2 replay=reject:replay-mismatch:2"
        " concordant=true");
}

TEST_CASE("end-to-end oracle flags disagreement, bad values and diverging prefixes") {
  SimConfig cfg = paxos_cfg();

  SUBCASE("two different decisions for one decree") {
    Trace t;
    t.events.push_back(decide_event(1, 0, 0, Round::nat(1), "v1"));
    t.events.push_back(decide_event(2, 1, 0, Round::nat(2), "v2"));
    SafetyReport rep = check_endtoend(t, cfg);
    CHECK(!rep.safe);
    REQUIRE(!rep.violations.empty());
    CHECK(rep.violations[0].find("agreement") != std::string::npos);
  }
  SUBCASE("a decided value outside the client set") {
    Trace t;
    t.events.push_back(decide_event(1, 0, 0, Round::nat(1), "evil"));
    SafetyReport rep = check_endtoend(t, cfg);
    CHECK(!rep.safe);
    CHECK(rep.violations[0].find("validity") != std::string::npos);
  }
  SUBCASE("byzantine decisions are not counted") {
    SimConfig bft;
    bft.protocol = Protocol::Pbft;
    bft.f = 1;
    bft.faults.byzantine = {2};
    bft.strategy = ByzStrategy::Equivocate;
    bft.finalize();
    Trace t;
    t.events.push_back(decide_event(1, 0, 1, Round::nat(1), "v1"));
    t.events.push_back(decide_event(2, 2, 1, Round::nat(2), "v2"));  // byzantine
    CHECK(check_endtoend(t, bft).safe);
  }
  SUBCASE("diverging raft log positions") {
    SimConfig rcfg;
    rcfg.protocol = Protocol::Raft;
    rcfg.f = 1;
    rcfg.finalize();
    Trace t;
    auto mk = [&](int step, int proc, long idx, const char* v) {
      TraceEvent e = decide_event(step, proc, 0, Round::pair(1, idx), v);
      e.decide->index = idx;
      e.text = render_decide(*e.decide);
      return e;
    };
    t.events.push_back(mk(1, 0, 0, "v1"));
    t.events.push_back(mk(2, 1, 0, "v2"));
    SafetyReport rep = check_endtoend(t, rcfg);
    CHECK(!rep.safe);
  }
  SUBCASE("diverging decided branches") {
    SimConfig hcfg;
    hcfg.protocol = Protocol::HotStuff;
    hcfg.f = 1;
    hcfg.finalize();
    Trace t;
    TraceEvent a = decide_event(1, 0, 0, Round::nat(1), "v1");
    a.decide->branch = {"v1"};
    TraceEvent b = decide_event(2, 1, 0, Round::nat(2), "v2");
    b.decide->branch = {"v2", "v1"};
    t.events.push_back(a);
    t.events.push_back(b);
    SafetyReport rep = check_endtoend(t, hcfg);
    CHECK(!rep.safe);
  }
}

TEST_CASE("sweeps aggregate checks and the status-oracle cross-check") {
  SweepSpec spec;
  spec.base = paxos_cfg();
  spec.base.max_steps = 250;
  spec.first_seed = 1;
  spec.num_seeds = 50;
  spec.derive_crashes = true;
  SweepResult res = run_sweep(spec);
  CHECK(res.runs == 50);
  CHECK(res.passed == 50);
  CHECK(res.refinement_failures == 0);
  CHECK(res.discordances == 0);
  CHECK(res.safety_violations == 0);
  CHECK(res.oracle_mismatches == 0);
  CHECK(res.prefixes_checked > 100);
  CHECK(res.runs_with_commits > 30);
}

TEST_CASE("every protocol mutation is caught by the refinement checks") {
  struct Case {
    Protocol proto;
    Mutation mutation;
    ByzStrategy strategy;  // None for crash protocols
    std::uint64_t seeds;
  };
  const Case cases[] = {
      {Protocol::Paxos, Mutation::PaxosVoteIgnoreJoined, ByzStrategy::None, 200},
      {Protocol::Paxos, Mutation::PaxosJoinForgetVotes, ByzStrategy::None, 200},
      {Protocol::Raft, Mutation::RaftGrantAnyVote, ByzStrategy::None, 200},
      {Protocol::HotStuff, Mutation::HotStuffCertThreshold, ByzStrategy::Equivocate, 200},
      {Protocol::Pbft, Mutation::PbftJoinSkipValidation, ByzStrategy::Equivocate, 200},
  };
  for (const Case& c : cases) {
    CAPTURE(to_string(c.mutation));
    std::uint64_t caught_at = 0;
    bool coupling_ok = true;
    for (std::uint64_t seed = 1; seed <= c.seeds && !caught_at; ++seed) {
      SimConfig cfg;
      cfg.protocol = c.proto;
      cfg.f = 1;
      cfg.seed = seed;
      cfg.mutation = c.mutation;
      cfg.max_steps = 500;
      cfg.faults.drop_prob = 0.15;
      cfg.faults.delay_max = 6;
      if (c.strategy != ByzStrategy::None) {
        cfg.faults.byzantine = {int(seed % (c.proto == Protocol::Paxos ? 3 : 4))};
        cfg.strategy = c.strategy;
      }
      cfg.finalize();
      Trace t = run_protocol(cfg);
      RunCheck rc = check_run(t, cfg);
      // refinement must fail whenever end-to-end safety does
      if (!rc.safety.safe && rc.refinement.pass) coupling_ok = false;
      if (!rc.refinement.pass) caught_at = seed;
    }
    CHECK(coupling_ok);
    CHECK(caught_at > 0);
    MESSAGE("mutation ", to_string(c.mutation), " caught at seed ", caught_at);
  }
}
