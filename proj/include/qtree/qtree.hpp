#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qtree/round.hpp"

namespace qtree {

enum class NodeStatus { Added, Ghost, Committed };
enum class Mode { SingleDecree, Smr };
enum class OpResult { Ok, Fail };

std::string_view to_string(NodeStatus s);
std::optional<NodeStatus> status_from_string(std::string_view s);

struct Node {
  Round round;
  std::string value;  // opaque token; "-" rendered for the root's unset value
  Round parent;
  NodeStatus status = NodeStatus::Added;
};

// Sequential quorum tree. Nodes are keyed by round and linked by parent
// round; the trunk is the branch from the root through all Committed nodes.
// add() inserts a leaf when the validity predicates hold, demoting lower
// conflicting Added nodes to Ghost; commit() promotes an Added node.
// Failure is a value (OpResult::Fail), never an exception.
class QTree {
 public:
  QTree(Mode mode, Round::Form form);

  OpResult add(const Round& r, std::string_view value, const Round& parent);
  OpResult commit(const Round& r);

  Mode mode() const { return mode_; }
  Round::Form form() const { return form_; }
  const std::map<Round, Node>& nodes() const { return nodes_; }
  const Node* find(const Round& r) const;

  // True iff neither node is an ancestor of the other. Unknown rounds yield
  // nullopt rather than false.
  std::optional<bool> conflicting(const Round& a, const Round& b) const;

  // Parent chain from the root to the highest committed node, root first.
  std::vector<Round> trunk() const;

  // Common value of all committed non-root nodes; single-decree mode only.
  std::optional<std::string> decided_value() const;

  Round max_committed() const { return max_committed_; }
  std::map<Round, NodeStatus> status_map() const;

  // Line-per-node text form, root first then ascending rounds:
  //   round=<r> parent=<rp> value=<v> status=<ADDED|GHOST|COMMITTED>
  std::string snapshot() const;

  // Validity predicates evaluated against the current state, side-effect
  // free. add() is exactly their conjunction (value constraint applying in
  // single-decree mode only) followed by the insertion.
  bool pred_link(const Round& r, const Round& parent) const;
  bool pred_new_round(const Round& r) const;
  bool pred_extends_trunk(const Round& r, const Round& parent) const;
  bool pred_value_constraint(std::string_view value, const Round& parent) const;

  // nullopt when every structural invariant holds; otherwise a description
  // of the first violation found. Used by tests after every mutation.
  std::optional<std::string> invariant_violation() const;

 private:
  // anc and desc must both be present; true when anc lies on desc's parent
  // chain (inclusive of desc itself).
  bool reaches(const Round& desc, const Round& anc) const;

  Mode mode_;
  Round::Form form_;
  std::map<Round, Node> nodes_;
  Round max_committed_;
};

// Independent QTree instances keyed by sequence number. Instances are
// created lazily on first add; commit on an absent instance fails.
class QTreeForest {
 public:
  QTreeForest(Mode mode, Round::Form form) : mode_(mode), form_(form) {}

  OpResult add(std::uint64_t sn, const Round& r, std::string_view value, const Round& parent);
  OpResult commit(std::uint64_t sn, const Round& r);

  const QTree* instance(std::uint64_t sn) const;
  const std::map<std::uint64_t, QTree>& instances() const { return trees_; }
  Mode mode() const { return mode_; }

 private:
  Mode mode_;
  Round::Form form_;
  std::map<std::uint64_t, QTree> trees_;
};

}  // namespace qtree
