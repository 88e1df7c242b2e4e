// qtsim: simulate consensus protocols under faults and check that every run
// refines the quorum-tree object via its linearization points.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "qtree/checker.hpp"
#include "qtree/figures.hpp"
#include "qtree/harness.hpp"
#include "qtree/runner.hpp"

namespace {

using namespace qtree;

constexpr int kExitPass = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;

struct RunFlags {
  std::string protocol = "paxos";
  std::string config_path, schedule_path, trace_path, report_path;
  int n = 0, f = -1, q1 = 0, q2 = 0, steps = 0, instances = 0, batch = 0;
  std::uint64_t seed = 1;
  std::string seeds_range;
  double drop = -1, dup = -1;
  int delay_min = -1, delay_max = -1;
  std::string byzantine, strategy, mutation, values, crash;
  bool derive_crashes = false, derive_byzantine = false;
};

sim::SimConfig build_config(const RunFlags& fl, const CLI::App* cmd) {
  sim::SimConfig cfg;
  if (!fl.config_path.empty()) {
    std::ifstream in(fl.config_path);
    if (!in) throw std::invalid_argument("cannot open config: " + fl.config_path);
    cfg = sim::SimConfig::parse_file(in);
  }
  auto given = [&](const char* name) { return cmd->count(name) > 0; };
  if (given("--protocol") || fl.config_path.empty()) {
    auto p = sim::protocol_from_string(fl.protocol);
    if (!p) throw std::invalid_argument("unknown protocol: " + fl.protocol);
    cfg.protocol = *p;
  }
  if (given("--n")) cfg.n = fl.n;
  if (given("--f")) cfg.f = fl.f;
  if (given("--q1")) cfg.q1 = fl.q1;
  if (given("--q2")) cfg.q2 = fl.q2;
  if (given("--steps")) cfg.max_steps = fl.steps;
  if (given("--seed")) cfg.seed = fl.seed;
  if (given("--instances")) cfg.instances = fl.instances;
  if (given("--batch")) cfg.batch = fl.batch;
  if (given("--drop")) cfg.faults.drop_prob = fl.drop;
  if (given("--dup")) cfg.faults.dup_prob = fl.dup;
  if (given("--delay-min")) cfg.faults.delay_min = fl.delay_min;
  if (given("--delay-max")) cfg.faults.delay_max = fl.delay_max;
  if (given("--byzantine")) {
    std::istringstream bs(fl.byzantine);
    std::string tok;
    while (std::getline(bs, tok, ','))
      if (!tok.empty()) cfg.faults.byzantine.insert(std::stoi(tok));
  }
  if (given("--strategy")) {
    auto s = sim::strategy_from_string(fl.strategy);
    if (!s) throw std::invalid_argument("unknown strategy: " + fl.strategy);
    cfg.strategy = *s;
  }
  if (given("--mutation")) {
    auto m = sim::mutation_from_string(fl.mutation);
    if (!m) throw std::invalid_argument("unknown mutation: " + fl.mutation);
    cfg.mutation = *m;
  }
  if (given("--values")) {
    cfg.client_values.clear();
    std::istringstream vs(fl.values);
    std::string tok;
    while (std::getline(vs, tok, ','))
      if (!tok.empty()) cfg.client_values.push_back(tok);
  }
  if (given("--crash")) {
    std::istringstream cs(fl.crash);
    std::string tok;
    while (std::getline(cs, tok, ',')) {
      auto c = tok.find(':');
      if (c == std::string::npos) throw std::invalid_argument("crash wants p:step");
      cfg.faults.crash_at[std::stoi(tok.substr(0, c))] = std::stoi(tok.substr(c + 1));
    }
  }
  if (!fl.schedule_path.empty()) {
    std::ifstream in(fl.schedule_path);
    if (!in) throw std::invalid_argument("cannot open schedule: " + fl.schedule_path);
    cfg.schedule = sim::Schedule::parse(in);
  }
  cfg.finalize();
  return cfg;
}

int cmd_run(const RunFlags& fl, const CLI::App* cmd) {
  sim::SimConfig cfg = build_config(fl, cmd);

  if (!fl.seeds_range.empty()) {
    auto dots = fl.seeds_range.find("..");
    if (dots == std::string::npos)
      throw std::invalid_argument("--seeds wants a range like 1..100");
    std::uint64_t a = std::stoull(fl.seeds_range.substr(0, dots));
    std::uint64_t b = std::stoull(fl.seeds_range.substr(dots + 2));
    if (b < a) throw std::invalid_argument("--seeds range is backwards");
    refine::SweepSpec spec;
    spec.base = cfg;
    spec.first_seed = a;
    spec.num_seeds = b - a + 1;
    spec.derive_crashes = fl.derive_crashes;
    spec.derive_byzantine = fl.derive_byzantine;
    refine::SweepResult res = refine::run_sweep(spec);
    std::cout << res.summary() << "\n";
    for (const auto& line : res.failures) std::cout << line << "\n";
    bool ok = res.passed == res.runs && res.discordances == 0 && res.oracle_mismatches == 0;
    std::cout << (ok ? "sweep=pass" : "sweep=fail") << "\n";
    return ok ? kExitPass : kExitCheckFailure;
  }

  sim::Trace trace = sim::run_protocol(cfg);
  if (!fl.trace_path.empty()) {
    std::ofstream out(fl.trace_path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot write trace: " + fl.trace_path);
    out << trace.render();
  }
  refine::RunCheck rc = refine::check_run(trace, cfg);
  std::string report = rc.refinement.render() + rc.safety.render();
  std::cout << report;
  if (!fl.report_path.empty()) {
    std::ofstream out(fl.report_path, std::ios::binary);
    out << report;
  }
  return rc.pass ? kExitPass : kExitCheckFailure;
}

int cmd_check(const std::string& trace_path, const std::string& seq_path,
              const std::string& mode_name) {
  if (trace_path.empty() == seq_path.empty())
    throw std::invalid_argument("check wants exactly one of --trace / --sequence");
  if (!trace_path.empty()) {
    std::ifstream in(trace_path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open trace: " + trace_path);
    sim::Trace trace = sim::Trace::parse(in);
    sim::SimConfig cfg = sim::SimConfig::parse_header(trace.header);
    refine::RunCheck rc = refine::check_run(trace, cfg);
    std::cout << rc.refinement.render() << rc.safety.render();
    return rc.pass ? kExitPass : kExitCheckFailure;
  }
  Mode mode = mode_name == "smr" ? Mode::Smr : Mode::SingleDecree;
  std::ifstream in(seq_path);
  if (!in) throw std::invalid_argument("cannot open sequence: " + seq_path);
  std::vector<InvocationLabel> labels = parse_label_file(in);
  std::map<std::uint64_t, std::vector<InvocationLabel>> per_instance;
  for (auto& l : labels) per_instance[l.instance].push_back(l);
  bool pass = true;
  if (per_instance.empty()) std::cout << "instance=0 declarative=accept replay=accept"
                                         " concordant=true\n";
  for (auto& [sn, seq] : per_instance) {
    refine::InstanceReport ir;
    ir.instance = sn;
    // the declarative checker takes successful labels only; sequences with
    // recorded failures are judged by replay alone
    bool all_ok = true;
    for (const auto& l : seq) all_ok = all_ok && l.ok;
    ir.replay = seqcheck::replay(seq, mode);
    if (all_ok) {
      ir.declarative = seqcheck::check_declarative(seq, mode);
      ir.concordant = ir.declarative.accepted == ir.replay.accepted;
    } else {
      ir.declarative = ir.replay;
      ir.concordant = true;
    }
    std::cout << ir.line() << "\n";
    pass = pass && ir.declarative.accepted && ir.replay.accepted && ir.concordant;
  }
  std::cout << (pass ? "check=pass" : "check=fail") << "\n";
  return pass ? kExitPass : kExitCheckFailure;
}

int cmd_enumerate(int max_len, int max_round, int num_values, const std::string& mode_name,
                  std::uint64_t limit) {
  seqcheck::EnumBounds b{max_len, max_round, num_values};
  std::uint64_t count = seqcheck::sequence_count(b);
  if (count > limit) {
    std::cout << "refusing: " << count << " sequences exceed the limit of " << limit
              << " (raise --limit to proceed)\n";
    return kExitUsage;
  }
  bool all_ok = true;
  auto run_mode = [&](Mode mode, const char* label) {
    seqcheck::EquivalenceStats st = seqcheck::check_equivalence(b, mode, 10);
    std::cout << "mode=" << label << " total=" << st.total
              << " both_accept=" << st.both_accept << " both_reject=" << st.both_reject
              << " discordant=" << st.discordant << "\n";
    for (const auto& ex : st.examples) std::cout << "  " << ex << "\n";
    if (st.discordant) all_ok = false;
  };
  if (mode_name == "single-decree" || mode_name == "both")
    run_mode(Mode::SingleDecree, "single-decree");
  if (mode_name == "smr" || mode_name == "both") run_mode(Mode::Smr, "smr");
  std::cout << (all_ok ? "equivalence=pass" : "equivalence=fail") << "\n";
  return all_ok ? kExitPass : kExitCheckFailure;
}

int cmd_figure(const std::string& name, const std::string& goldens, bool write) {
  figures::FigureOutput out = figures::run_figure(name);
  if (write) {
    figures::write_goldens(out, goldens);
    std::cout << name << ": goldens written to " << goldens << "\n";
    return kExitPass;
  }
  figures::GoldenDiff gd = figures::compare_with_goldens(out, goldens);
  if (gd.ok) {
    std::cout << name << ": matches goldens\n";
    return kExitPass;
  }
  std::cout << name << ": differs from goldens\n" << gd.diff;
  return kExitCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quorum-tree consensus simulator and refinement checker"};
  app.require_subcommand(1);

  RunFlags fl;
  CLI::App* run = app.add_subcommand("run", "simulate a protocol and check the run");
  run->add_option("--protocol", fl.protocol, "paxos|multipaxos|raft|pbft|hotstuff");
  run->add_option("--config", fl.config_path, "key = value config file");
  run->add_option("--n", fl.n, "process count");
  run->add_option("--f", fl.f, "fault budget");
  run->add_option("--q1", fl.q1, "first-phase quorum (multipaxos only)");
  run->add_option("--q2", fl.q2, "second-phase quorum (multipaxos only)");
  run->add_option("--steps", fl.steps, "scheduler step bound");
  run->add_option("--seed", fl.seed, "scheduler seed");
  run->add_option("--seeds", fl.seeds_range, "seed range A..B for a sweep");
  run->add_option("--drop", fl.drop, "message drop probability");
  run->add_option("--dup", fl.dup, "message duplication probability");
  run->add_option("--delay-min", fl.delay_min, "min delivery delay in steps");
  run->add_option("--delay-max", fl.delay_max, "max delivery delay in steps");
  run->add_option("--byzantine", fl.byzantine, "comma-separated byzantine ids");
  run->add_option("--strategy", fl.strategy, "byzantine strategy");
  run->add_option("--mutation", fl.mutation, "protocol defect to inject");
  run->add_option("--instances", fl.instances, "decrees / entries / chain depth");
  run->add_option("--batch", fl.batch, "raft entries per log request");
  run->add_option("--values", fl.values, "comma-separated client values");
  run->add_option("--crash", fl.crash, "crash plan p:step[,p:step...]");
  run->add_option("--schedule", fl.schedule_path, "scripted delivery schedule file");
  run->add_option("--trace", fl.trace_path, "write the trace here");
  run->add_option("--report", fl.report_path, "write the check report here");
  run->add_flag("--derive-crashes", fl.derive_crashes, "sweeps: crash one process on some seeds");
  run->add_flag("--derive-byzantine", fl.derive_byzantine, "sweeps: byzantine member varies by seed");

  std::string check_trace, check_seq, check_mode = "single-decree";
  CLI::App* check = app.add_subcommand("check", "check a trace or label sequence file");
  check->add_option("--trace", check_trace, "trace file (mode from its header)");
  check->add_option("--sequence", check_seq, "label sequence file");
  check->add_option("--mode", check_mode, "single-decree|smr (sequence files)");

  int en_len = 4, en_round = 3, en_vals = 2;
  std::uint64_t en_limit = 5'000'000;
  std::string en_mode = "both";
  CLI::App* enumerate =
      app.add_subcommand("enumerate", "exhaustive checker agreement within bounds");
  enumerate->add_option("--max-len", en_len, "max sequence length");
  enumerate->add_option("--max-round", en_round, "rounds drawn from 1..max-round");
  enumerate->add_option("--values", en_vals, "number of distinct values");
  enumerate->add_option("--mode", en_mode, "single-decree|smr|both");
  enumerate->add_option("--limit", en_limit, "refuse above this many sequences");

  std::string fig_name, fig_goldens = "goldens";
  bool fig_write = false;
  CLI::App* figure = app.add_subcommand("figure", "reproduce a bundled golden scenario");
  figure->add_option("name", fig_name, "fig2|fig3|fig4")->required();
  figure->add_option("--goldens", fig_goldens, "goldens directory");
  figure->add_flag("--write", fig_write, "regenerate the golden files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(fl, run);
    if (check->parsed()) return cmd_check(check_trace, check_seq, check_mode);
    if (enumerate->parsed()) return cmd_enumerate(en_len, en_round, en_vals, en_mode, en_limit);
    if (figure->parsed()) return cmd_figure(fig_name, fig_goldens, fig_write);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailure;
  }
  return kExitUsage;
}
