#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qtree/qtree.hpp"
#include "qtree/round.hpp"

namespace qtree::sim {

enum class Protocol { Paxos, MultiPaxos, Raft, Pbft, HotStuff };

enum class ByzStrategy {
  None,
  Equivocate,   // leader proposes different values to the two halves
  Withhold,     // leader goes silent at the certificate phase
  ReplayStale,  // re-broadcasts an old valid certified message
  VoteNoJoin,   // votes without holding the prerequisite quorum
  PerSeed,      // one of the above four, picked from the seed
  ForgeCert,    // test hook: attempts to embed an unseen message id
};

// Deliberate protocol defects for mutation testing. The refinement check is
// expected to flag runs of any of these within a modest seed budget.
enum class Mutation {
  None,
  PaxosVoteIgnoreJoined,   // vote ignores the max joined round guard
  PaxosJoinForgetVotes,    // join replies always report a zero vote round
  HotStuffCertThreshold,   // certificates accepted one vote short of quorum
  RaftGrantAnyVote,        // vote response skips the log up-to-date check
  PbftJoinSkipValidation,  // join skips the proposal certificate check
};

std::string_view to_string(Protocol p);
std::string_view to_string(ByzStrategy s);
std::string_view to_string(Mutation m);
std::optional<Protocol> protocol_from_string(std::string_view s);
std::optional<ByzStrategy> strategy_from_string(std::string_view s);
std::optional<Mutation> mutation_from_string(std::string_view s);

struct PartitionSpec {
  int from_step = 0;
  int to_step = 0;             // inclusive
  std::vector<int> group_a;    // processes on one side; the rest form side B
};

struct FaultPlan {
  double drop_prob = 0.0;
  double dup_prob = 0.0;
  int delay_min = 0;  // extra scheduler steps before a message is deliverable
  int delay_max = 2;
  std::set<int> byzantine;
  std::map<int, int> crash_at;  // process -> last step at which it still acts
  std::vector<PartitionSpec> partitions;
};

// One scripted scheduler decision: fire a timeout at a process, or deliver
// the earliest pending message matching the given fields. File form:
//   timeout proc=<id>
//   deliver to=<id> from=<id> m=<TYPE> [r=<round>] [sn=<n>]
struct ScheduleEntry {
  enum class What { Timeout, Deliver };
  What what = What::Timeout;
  int proc = -1;  // timeout target
  int to = -1;
  int from = -1;
  std::string msg_type;
  std::optional<Round> round;
  std::optional<std::uint64_t> sn;
};

struct Schedule {
  std::vector<ScheduleEntry> entries;
  static Schedule parse(std::istream& in);  // throws with line numbers
};

struct SimConfig {
  Protocol protocol = Protocol::Paxos;
  int n = 0;  // filled by finalize() when 0
  int f = -1;
  int q1 = 0;
  int q2 = 0;
  int max_steps = 400;
  std::uint64_t seed = 1;
  FaultPlan faults;
  ByzStrategy strategy = ByzStrategy::None;
  Mutation mutation = Mutation::None;
  // Number of decrees driven: sequence numbers for multi-decree protocols,
  // total log entries for raft, decided chain depth for hotstuff.
  int instances = 0;
  int batch = 1;  // raft: entries appended per log request
  std::vector<std::string> client_values = {"v1", "v2", "v3"};
  std::optional<Schedule> schedule;

  Mode mode() const;
  Round::Form round_form() const;
  bool multi_instance() const;           // labels carry sn= in trace lines
  std::uint64_t first_instance() const;  // pbft numbers decrees from 1
  bool byzantine(int p) const { return faults.byzantine.count(p) > 0; }
  ByzStrategy effective_strategy() const;  // resolves PerSeed

  // Fills defaulted fields (n from f or vice versa, quorums, instances) and
  // throws std::invalid_argument on any constraint violation.
  void finalize();

  std::string render_header() const;
  static SimConfig parse_header(std::string_view line);

  // Flat key = value file; '#' comments allowed.
  static SimConfig parse_file(std::istream& in);
};

// Deterministic stand-in for a client submitting values: one token per
// (round, decree), drawn from the configured pool.
std::string client_value(const SimConfig& cfg, const Round& r, std::uint64_t sn);

}  // namespace qtree::sim
