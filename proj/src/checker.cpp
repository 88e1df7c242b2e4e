#include "qtree/checker.hpp"

#include <set>
#include <stdexcept>

namespace qtree::seqcheck {

std::string_view rule_id(Rule r) {
  switch (r) {
    case Rule::P1DupAdd: return "P1-dup-add";
    case Rule::P1DupCommit: return "P1-dup-commit";
    case Rule::P0MissingAdd: return "P0-missing-add";
    case Rule::P2MissingParent: return "P2-missing-parent";
    case Rule::P2aValueMismatch: return "P2a-value-mismatch";
    case Rule::P3Conflict: return "P3-conflict";
    case Rule::ReplayMismatch: return "replay-mismatch";
  }
  return "?";
}

std::string Verdict::str() const {
  if (accepted) return "accept";
  return "reject:" + std::string(rule_id(rule)) + ":" + std::to_string(index);
}

Verdict check_declarative(std::span<const InvocationLabel> seq, Mode mode) {
  for (const auto& l : seq) {
    if (!l.ok) throw std::invalid_argument("declarative check takes successful labels only");
    if (l.instance != seq.front().instance)
      throw std::invalid_argument("declarative check takes labels of one instance");
  }

  struct AddInfo {
    Round parent;
    std::string value;
  };
  std::map<Round, AddInfo> adds;
  std::set<Round> commits;

  for (std::size_t i = 0; i < seq.size(); ++i) {
    const InvocationLabel& l = seq[i];
    if (l.kind == InvocationLabel::Kind::Add) {
      const Round &r = l.round, &rp = l.parent;
      if (adds.count(r)) return Verdict::reject(Rule::P1DupAdd, i);
      if (!rp.is_zero()) {
        auto p = adds.find(rp);
        if (p == adds.end() || !(rp < r)) return Verdict::reject(Rule::P2MissingParent, i);
        if (mode == Mode::SingleDecree && p->second.value != l.value)
          return Verdict::reject(Rule::P2aValueMismatch, i);
      }
      // this add may complete a forbidden triple as the higher add(r', _, r'')
      for (const Round& c : commits)
        if (rp < c && c < r) return Verdict::reject(Rule::P3Conflict, i);
      adds.emplace(r, AddInfo{rp, l.value});
    } else {
      const Round& r = l.round;
      if (commits.count(r)) return Verdict::reject(Rule::P1DupCommit, i);
      if (!adds.count(r)) return Verdict::reject(Rule::P0MissingAdd, i);
      for (const auto& [ar, info] : adds)
        if (info.parent < r && r < ar) return Verdict::reject(Rule::P3Conflict, i);
      commits.insert(r);
    }
  }
  return Verdict::accept();
}

Verdict replay(std::span<const InvocationLabel> seq, Mode mode) {
  Round::Form form = seq.empty() ? Round::Form::Nat : seq.front().round.form();
  QTree tree(mode, form);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const InvocationLabel& l = seq[i];
    OpResult got = l.kind == InvocationLabel::Kind::Add
                       ? tree.add(l.round, l.value, l.parent)
                       : tree.commit(l.round);
    if ((got == OpResult::Ok) != l.ok) return Verdict::reject(Rule::ReplayMismatch, i);
  }
  return Verdict::accept();
}

std::map<Round, NodeStatus> statuses_from_labels(std::span<const InvocationLabel> seq) {
  Round::Form form = seq.empty() ? Round::Form::Nat : seq.front().round.form();
  const Round zero = Round::zero(form);

  std::map<Round, Round> parent;  // round -> parent round
  std::set<Round> commits;
  for (const auto& l : seq) {
    if (!l.ok) throw std::invalid_argument("status oracle takes successful labels only");
    if (l.kind == InvocationLabel::Kind::Add) {
      if (l.round.is_zero() || parent.count(l.round) || !(l.parent < l.round) ||
          (!l.parent.is_zero() && !parent.count(l.parent)))
        throw std::invalid_argument("status oracle requires a correct sequence");
      parent.emplace(l.round, l.parent);
    } else {
      if (!parent.count(l.round) || commits.count(l.round))
        throw std::invalid_argument("status oracle requires a correct sequence");
      commits.insert(l.round);
    }
  }

  // anc lies on desc's parent chain; rounds strictly decrease walking down
  auto on_chain = [&](const Round& anc, Round desc) {
    while (desc > anc) desc = parent.at(desc);
    return desc == anc;
  };

  std::map<Round, NodeStatus> out;
  out.emplace(zero, NodeStatus::Committed);
  for (const auto& [r, rp] : parent) {
    (void)rp;
    NodeStatus s;
    if (commits.count(r)) {
      s = NodeStatus::Committed;
    } else {
      bool ghost = false;
      for (const auto& [r2, rp2] : parent) {
        (void)rp2;
        if (r2 > r && !on_chain(r, r2)) {  // higher round on another branch
          ghost = true;
          break;
        }
      }
      s = ghost ? NodeStatus::Ghost : NodeStatus::Added;
    }
    out.emplace(r, s);
  }
  return out;
}

std::vector<InvocationLabel> label_universe(const EnumBounds& b) {
  std::vector<InvocationLabel> u;
  for (int r = 1; r <= b.max_round; ++r)
    for (int rp = 0; rp < b.max_round; ++rp)
      for (int v = 0; v < b.num_values; ++v)
        u.push_back(InvocationLabel::add(0, Round::nat(r), std::string(1, char('a' + v)),
                                         Round::nat(rp)));
  for (int r = 1; r <= b.max_round; ++r)
    u.push_back(InvocationLabel::commit(0, Round::nat(r)));
  return u;
}

std::uint64_t sequence_count(const EnumBounds& b) {
  std::uint64_t u = std::uint64_t(b.max_round) * b.max_round * b.num_values + b.max_round;
  std::uint64_t total = 0, pow = 1;
  for (int len = 0; len <= b.max_len; ++len) {
    total += pow;
    pow *= u;
  }
  return total;
}

void for_each_sequence(const EnumBounds& b,
                       const std::function<void(const std::vector<InvocationLabel>&)>& fn) {
  const std::vector<InvocationLabel> u = label_universe(b);
  std::vector<InvocationLabel> seq;
  std::vector<std::size_t> idx;
  for (int len = 0; len <= b.max_len; ++len) {
    idx.assign(len, 0);
    while (true) {
      seq.clear();
      for (std::size_t i : idx) seq.push_back(u[i]);
      fn(seq);
      // odometer increment
      int pos = len - 1;
      while (pos >= 0) {
        if (++idx[pos] < u.size()) break;
        idx[pos] = 0;
        --pos;
      }
      if (pos < 0) break;
    }
  }
}

std::string format_discordance(std::span<const InvocationLabel> seq, const Verdict& decl,
                               const Verdict& rep) {
  std::string out = "[";
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += "; ";
    out += seq[i].str(false);
  }
  out += "] declarative=" + decl.str() + " replay=" + rep.str();
  return out;
}

EquivalenceStats check_equivalence(const EnumBounds& b, Mode mode, std::size_t example_cap) {
  EquivalenceStats st;
  for_each_sequence(b, [&](const std::vector<InvocationLabel>& seq) {
    Verdict d = check_declarative(seq, mode);
    Verdict r = replay(seq, mode);
    ++st.total;
    if (d.accepted && r.accepted) {
      ++st.both_accept;
    } else if (!d.accepted && !r.accepted) {
      ++st.both_reject;
    } else {
      ++st.discordant;
      if (st.examples.size() < example_cap)
        st.examples.push_back(format_discordance(seq, d, r));
    }
  });
  return st;
}

}  // namespace qtree::seqcheck
