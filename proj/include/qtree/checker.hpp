#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qtree/label.hpp"
#include "qtree/qtree.hpp"

namespace qtree::seqcheck {

enum class Rule {
  P1DupAdd,
  P1DupCommit,
  P0MissingAdd,
  P2MissingParent,
  P2aValueMismatch,
  P3Conflict,
  ReplayMismatch,
};

std::string_view rule_id(Rule r);

struct Verdict {
  bool accepted = true;
  Rule rule = Rule::P1DupAdd;
  std::size_t index = 0;

  static Verdict accept() { return Verdict{}; }
  static Verdict reject(Rule r, std::size_t i) { return Verdict{false, r, i}; }
  std::string str() const;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

// Declarative acceptance of a sequence of successful labels for one
// instance. Properties checked, in fixed priority per label:
//   P1  at most one add(r) and one commit(r) per round
//   P0  commit(r) preceded by add(r)
//   P2  add(r,v,rp) with rp > 0 preceded by add(rp,v',_) with rp < r
//   P2a v = v' (single-decree mode only)
//   P3  no commit(r) when add(r) and add(r',_,r'') with r'' < r < r' coexist
// P3 is a set-level constraint over the whole sequence; the verdict flags
// whichever label completes a forbidden triple. Throws std::invalid_argument
// on FAIL-labelled input or mixed instances.
Verdict check_declarative(std::span<const InvocationLabel> seq, Mode mode);

// Executes the sequence on a fresh QTree (round form inferred from the first
// label) and accepts iff every recorded result matches the actual outcome.
// FAIL-labelled entries are allowed; instance tags are ignored — callers
// split per instance first.
Verdict replay(std::span<const InvocationLabel> seq, Mode mode);

// Status map implied directly by a correct sequence of successful labels,
// computed without running the tree mutation logic: a node is Committed iff
// it is the root or its round was committed; else Ghost iff some node with a
// strictly greater round conflicts with it; else Added. Throws
// std::invalid_argument when the sequence is not structurally sound.
std::map<Round, NodeStatus> statuses_from_labels(std::span<const InvocationLabel> seq);

// Bounds for exhaustive enumeration of successful-label sequences. Rounds
// are drawn from {1..max_round}, parents from {0..max_round-1} (rp < r is
// deliberately not enforced), values are the first num_values letters.
struct EnumBounds {
  int max_len = 4;
  int max_round = 3;
  int num_values = 2;
};

std::vector<InvocationLabel> label_universe(const EnumBounds& b);
std::uint64_t sequence_count(const EnumBounds& b);

// Visits every sequence of length 0..max_len over the universe exactly
// once, shortest first, lexicographic within a length.
void for_each_sequence(const EnumBounds& b,
                       const std::function<void(const std::vector<InvocationLabel>&)>& fn);

struct EquivalenceStats {
  std::uint64_t total = 0;
  std::uint64_t both_accept = 0;
  std::uint64_t both_reject = 0;
  std::uint64_t discordant = 0;
  std::vector<std::string> examples;  // rendered discordant sequences, capped
};

std::string format_discordance(std::span<const InvocationLabel> seq, const Verdict& decl,
                               const Verdict& rep);

// Runs both checkers over the full enumeration and tallies agreement.
EquivalenceStats check_equivalence(const EnumBounds& b, Mode mode,
                                   std::size_t example_cap = 5);

}  // namespace qtree::seqcheck
