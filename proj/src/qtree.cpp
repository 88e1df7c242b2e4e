#include "qtree/qtree.hpp"

#include <set>
#include <stdexcept>

namespace qtree {

std::string_view to_string(NodeStatus s) {
  switch (s) {
    case NodeStatus::Added: return "ADDED";
    case NodeStatus::Ghost: return "GHOST";
    case NodeStatus::Committed: return "COMMITTED";
  }
  return "?";
}

std::optional<NodeStatus> status_from_string(std::string_view s) {
  if (s == "ADDED") return NodeStatus::Added;
  if (s == "GHOST") return NodeStatus::Ghost;
  if (s == "COMMITTED") return NodeStatus::Committed;
  return std::nullopt;
}

QTree::QTree(Mode mode, Round::Form form)
    : mode_(mode), form_(form), max_committed_(Round::zero(form)) {
  Node root;
  root.round = Round::zero(form);
  root.parent = root.round;  // the root is its own parent
  root.status = NodeStatus::Committed;
  nodes_.emplace(root.round, root);
}

const Node* QTree::find(const Round& r) const {
  auto it = nodes_.find(r);
  return it == nodes_.end() ? nullptr : &it->second;
}

bool QTree::reaches(const Round& desc, const Round& anc) const {
  Round cur = desc;
  while (cur > anc) {
    auto it = nodes_.find(cur);
    if (it == nodes_.end()) return false;
    cur = it->second.parent;
  }
  return cur == anc;
}

std::optional<bool> QTree::conflicting(const Round& a, const Round& b) const {
  if (!find(a) || !find(b)) return std::nullopt;
  if (a == b) return false;
  const Round& lo = a < b ? a : b;
  const Round& hi = a < b ? b : a;
  return !reaches(hi, lo);
}

bool QTree::pred_link(const Round& r, const Round& parent) const {
  return nodes_.count(parent) > 0 && parent < r;
}

bool QTree::pred_new_round(const Round& r) const { return nodes_.count(r) == 0; }

bool QTree::pred_extends_trunk(const Round& r, const Round& parent) const {
  if (r < max_committed_) return true;
  // new node would sit above the trunk head, so its parent chain must pass
  // through it
  if (nodes_.count(parent) == 0) return false;
  return reaches(parent, max_committed_);
}

bool QTree::pred_value_constraint(std::string_view value, const Round& parent) const {
  if (parent.is_zero()) return true;
  auto it = nodes_.find(parent);
  if (it == nodes_.end()) return false;
  return it->second.value == value;
}

OpResult QTree::add(const Round& r, std::string_view value, const Round& parent) {
  if (r.form() != form_ || parent.form() != form_) return OpResult::Fail;
  if (!(Round::zero(form_) < r)) return OpResult::Fail;
  if (!pred_link(r, parent) || !pred_new_round(r) || !pred_extends_trunk(r, parent))
    return OpResult::Fail;
  if (mode_ == Mode::SingleDecree && !pred_value_constraint(value, parent))
    return OpResult::Fail;

  Node n;
  n.round = r;
  n.value = std::string(value);
  n.parent = parent;
  n.status = nodes_.rbegin()->first > r ? NodeStatus::Ghost : NodeStatus::Added;

  // rounds on the new node's ancestor chain; anything below r that is not on
  // it conflicts with the new node
  std::set<Round> chain;
  for (Round cur = parent;; cur = nodes_.find(cur)->second.parent) {
    chain.insert(cur);
    if (cur.is_zero()) break;
  }
  for (auto& [rr, nn] : nodes_) {
    if (!(rr < r)) break;
    if (nn.status == NodeStatus::Added && chain.count(rr) == 0)
      nn.status = NodeStatus::Ghost;
  }
  nodes_.emplace(r, std::move(n));
  return OpResult::Ok;
}

OpResult QTree::commit(const Round& r) {
  auto it = nodes_.find(r);
  if (it == nodes_.end() || it->second.status != NodeStatus::Added) return OpResult::Fail;
  it->second.status = NodeStatus::Committed;
  if (r > max_committed_) max_committed_ = r;
  return OpResult::Ok;
}

std::vector<Round> QTree::trunk() const {
  std::vector<Round> out;
  for (Round cur = max_committed_;; cur = nodes_.find(cur)->second.parent) {
    out.push_back(cur);
    if (cur.is_zero()) break;
  }
  return {out.rbegin(), out.rend()};
}

std::optional<std::string> QTree::decided_value() const {
  if (mode_ != Mode::SingleDecree)
    throw std::logic_error("decided_value requires single-decree mode");
  if (max_committed_.is_zero()) return std::nullopt;
  return nodes_.find(max_committed_)->second.value;
}

std::map<Round, NodeStatus> QTree::status_map() const {
  std::map<Round, NodeStatus> out;
  for (const auto& [r, n] : nodes_) out.emplace(r, n.status);
  return out;
}

std::string QTree::snapshot() const {
  std::string out;
  for (const auto& [r, n] : nodes_) {
    out += "round=" + r.str();
    out += " parent=" + n.parent.str();
    out += " value=" + (r.is_zero() ? std::string("-") : n.value);
    out += " status=";
    out += to_string(n.status);
    out += '\n';
  }
  return out;
}

std::optional<std::string> QTree::invariant_violation() const {
  const Node* root = find(Round::zero(form_));
  if (!root || root->status != NodeStatus::Committed) return "root missing or not committed";
  std::vector<Round> committed;
  for (const auto& [r, n] : nodes_) {
    if (!r.is_zero()) {
      if (nodes_.count(n.parent) == 0) return "dangling parent at round " + r.str();
      if (!(n.parent < r)) return "parent round not below node at " + r.str();
      if (mode_ == Mode::SingleDecree && !n.parent.is_zero()) {
        if (nodes_.find(n.parent)->second.value != n.value)
          return "value differs from parent at round " + r.str();
      }
    }
    if (n.status == NodeStatus::Committed) committed.push_back(r);
  }
  for (size_t i = 0; i < committed.size(); ++i)
    for (size_t j = i + 1; j < committed.size(); ++j)
      if (conflicting(committed[i], committed[j]).value())
        return "conflicting committed rounds " + committed[i].str() + " and " +
               committed[j].str();
  if (mode_ == Mode::SingleDecree) {
    // all committed non-root nodes must carry one value
    std::optional<std::string> v;
    for (const Round& r : committed) {
      if (r.is_zero()) continue;
      const std::string& val = nodes_.find(r)->second.value;
      if (v && *v != val) return "committed values disagree";
      v = val;
    }
  }
  return std::nullopt;
}

OpResult QTreeForest::add(std::uint64_t sn, const Round& r, std::string_view value,
                          const Round& parent) {
  auto it = trees_.find(sn);
  if (it == trees_.end()) it = trees_.emplace(sn, QTree(mode_, form_)).first;
  return it->second.add(r, value, parent);
}

OpResult QTreeForest::commit(std::uint64_t sn, const Round& r) {
  auto it = trees_.find(sn);
  if (it == trees_.end()) return OpResult::Fail;
  return it->second.commit(r);
}

const QTree* QTreeForest::instance(std::uint64_t sn) const {
  auto it = trees_.find(sn);
  return it == trees_.end() ? nullptr : &it->second;
}

}  // namespace qtree
