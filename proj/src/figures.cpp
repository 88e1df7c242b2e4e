#include "qtree/figures.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "qtree/harness.hpp"
#include "qtree/runner.hpp"

namespace qtree::figures {

namespace {

const char* kFig3Schedule = R"(# single-decree run, three competing rounds
timeout proc=1
deliver to=1 from=1 m=START r=1
deliver to=2 from=1 m=START r=1
deliver to=1 from=1 m=JOIN r=1
deliver to=1 from=2 m=JOIN r=1
deliver to=2 from=1 m=PROPOSE r=1
timeout proc=2
deliver to=1 from=2 m=START r=2
deliver to=2 from=2 m=START r=2
deliver to=2 from=1 m=JOIN r=2
timeout proc=0
deliver to=0 from=0 m=START r=3
deliver to=1 from=0 m=START r=3
deliver to=0 from=0 m=JOIN r=3
deliver to=0 from=1 m=JOIN r=3
deliver to=2 from=2 m=JOIN r=2
deliver to=0 from=0 m=PROPOSE r=3
deliver to=1 from=0 m=PROPOSE r=3
deliver to=0 from=0 m=VOTE r=3
deliver to=0 from=1 m=VOTE r=3
)";

const char* kFig4Schedule = R"(# byzantine-tolerant multi-decree run on decree 1
timeout proc=1
deliver to=1 from=1 m=PROPOSE r=1 sn=1
deliver to=2 from=1 m=PROPOSE r=1 sn=1
deliver to=3 from=1 m=PROPOSE r=1 sn=1
deliver to=2 from=1 m=JOIN r=1 sn=1
deliver to=2 from=2 m=JOIN r=1 sn=1
deliver to=2 from=3 m=JOIN r=1 sn=1
timeout proc=1
timeout proc=2
timeout proc=0
deliver to=2 from=1 m=ROUNDCHANGE r=2
deliver to=2 from=2 m=ROUNDCHANGE r=2
deliver to=2 from=0 m=ROUNDCHANGE r=2
deliver to=1 from=2 m=PROPOSE r=2 sn=1
deliver to=0 from=2 m=PROPOSE r=2 sn=1
deliver to=2 from=2 m=PROPOSE r=2 sn=1
deliver to=2 from=1 m=JOIN r=2 sn=1
deliver to=2 from=0 m=JOIN r=2 sn=1
timeout proc=3
timeout proc=3
timeout proc=1
timeout proc=0
deliver to=3 from=3 m=ROUNDCHANGE r=3
deliver to=3 from=1 m=ROUNDCHANGE r=3
deliver to=3 from=0 m=ROUNDCHANGE r=3
deliver to=1 from=3 m=PROPOSE r=3 sn=1
deliver to=3 from=3 m=PROPOSE r=3 sn=1
deliver to=0 from=3 m=PROPOSE r=3 sn=1
deliver to=3 from=1 m=JOIN r=3 sn=1
deliver to=3 from=3 m=JOIN r=3 sn=1
deliver to=3 from=0 m=JOIN r=3 sn=1
deliver to=2 from=2 m=JOIN r=2 sn=1
deliver to=1 from=1 m=JOIN r=3 sn=1
deliver to=1 from=3 m=JOIN r=3 sn=1
deliver to=1 from=0 m=JOIN r=3 sn=1
deliver to=0 from=1 m=JOIN r=3 sn=1
deliver to=0 from=3 m=JOIN r=3 sn=1
deliver to=0 from=0 m=JOIN r=3 sn=1
deliver to=3 from=1 m=VOTE r=3 sn=1
deliver to=3 from=3 m=VOTE r=3 sn=1
deliver to=3 from=0 m=VOTE r=3 sn=1
)";

sim::Schedule parse_schedule(const char* text) {
  std::istringstream in(text);
  return sim::Schedule::parse(in);
}

std::string qtree_text(const QTree& tree) {
  std::string out = tree.snapshot();
  out += "trunk=";
  auto t = tree.trunk();
  for (size_t i = 0; i < t.size(); ++i) {
    if (i) out += ',';
    out += t[i].str();
  }
  out += '\n';
  return out;
}

FigureOutput from_trace(std::string name, const sim::Trace& trace,
                        const sim::SimConfig& cfg, std::uint64_t instance) {
  FigureOutput out;
  out.name = std::move(name);
  auto seqs = refine::extract(trace);
  auto it = seqs.find(instance);
  QTree tree(cfg.mode(), cfg.round_form());
  if (it != seqs.end()) {
    for (const auto& l : it->second) {
      out.linpoints += l.str(cfg.multi_instance());
      out.linpoints += '\n';
      if (l.kind == InvocationLabel::Kind::Add) tree.add(l.round, l.value, l.parent);
      else tree.commit(l.round);
    }
  }
  out.qtree = qtree_text(tree);
  return out;
}

}  // namespace

std::vector<std::string> figure_names() { return {"fig2", "fig3", "fig4"}; }

FigureOutput run_figure(const std::string& name) {
  if (name == "fig2") {
    // two branches race from the root; the slower round's proposal enters as
    // a ghost and the higher round commits
    std::vector<InvocationLabel> labels = {
        InvocationLabel::add(0, Round::nat(1), "v1", Round::nat(0)),
        InvocationLabel::add(0, Round::nat(3), "v2", Round::nat(0)),
        InvocationLabel::add(0, Round::nat(2), "v1", Round::nat(1)),
        InvocationLabel::commit(0, Round::nat(3)),
    };
    FigureOutput out;
    out.name = name;
    QTree tree(Mode::SingleDecree, Round::Form::Nat);
    for (const auto& l : labels) {
      out.linpoints += l.str(false);
      out.linpoints += '\n';
      if (l.kind == InvocationLabel::Kind::Add) tree.add(l.round, l.value, l.parent);
      else tree.commit(l.round);
    }
    out.qtree = qtree_text(tree);
    return out;
  }
  if (name == "fig3") {
    sim::SimConfig cfg;
    cfg.protocol = sim::Protocol::Paxos;
    cfg.n = 3;
    cfg.f = 1;
    cfg.client_values = {"v1", "vx", "v2"};
    cfg.schedule = parse_schedule(kFig3Schedule);
    cfg.finalize();
    return from_trace(name, sim::run_protocol(cfg), cfg, 0);
  }
  if (name == "fig4") {
    sim::SimConfig cfg;
    cfg.protocol = sim::Protocol::Pbft;
    cfg.n = 4;
    cfg.f = 1;
    cfg.instances = 1;
    cfg.client_values = {"va", "v1", "vb", "v2"};
    cfg.schedule = parse_schedule(kFig4Schedule);
    cfg.finalize();
    return from_trace(name, sim::run_protocol(cfg), cfg, 1);
  }
  throw std::invalid_argument("unknown figure: " + name);
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open golden file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void diff_into(GoldenDiff& gd, const std::string& label, const std::string& expected,
               const std::string& actual) {
  if (expected == actual) return;
  gd.ok = false;
  gd.diff += "--- " + label + " (golden)\n+++ " + label + " (actual)\n";
  std::istringstream e(expected), a(actual);
  std::string el, al;
  bool more_e = true, more_a = true;
  while (more_e || more_a) {
    more_e = more_e && bool(std::getline(e, el));
    more_a = more_a && bool(std::getline(a, al));
    if (more_e && more_a) {
      if (el != al) gd.diff += "-" + el + "\n+" + al + "\n";
    } else if (more_e) {
      gd.diff += "-" + el + "\n";
    } else if (more_a) {
      gd.diff += "+" + al + "\n";
    }
  }
}

}  // namespace

GoldenDiff compare_with_goldens(const FigureOutput& out, const std::string& dir) {
  GoldenDiff gd;
  diff_into(gd, out.name + "_linpoints", read_file(dir + "/" + out.name + "_linpoints.txt"),
            out.linpoints);
  diff_into(gd, out.name + "_qtree", read_file(dir + "/" + out.name + "_qtree.txt"),
            out.qtree);
  return gd;
}

void write_goldens(const FigureOutput& out, const std::string& dir) {
  std::ofstream l(dir + "/" + out.name + "_linpoints.txt", std::ios::binary);
  l << out.linpoints;
  std::ofstream q(dir + "/" + out.name + "_qtree.txt", std::ios::binary);
  q << out.qtree;
}

}  // namespace qtree::figures
