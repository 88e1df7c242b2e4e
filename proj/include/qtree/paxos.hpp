#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qtree/kernel.hpp"

namespace qtree::sim::paxos {

// Highest vote a process reports for one decree inside a JOIN reply.
struct VoteInfo {
  std::uint64_t sn = 0;
  Round vr = Round::nat(0);
  std::string vv;
};

struct PaxMsg {
  enum class T { Start, Join, Propose, Vote };
  T type = T::Start;
  Round r;
  std::vector<VoteInfo> votes;  // Join
  std::uint64_t sn = 0;         // Propose / Vote
  std::string value;            // Propose
};

// Single-decree and multi-decree leader-per-round voting. The same state
// machine serves both: single-decree is the one-decree special case, the
// multi-decree variant keeps its JOIN quorum and proposes decree after
// decree in the same round while it stays stable. The leader of round r is
// process r mod n; add linearization points are emitted at the PROPOSE
// broadcast, commit linearization points at the decision.
struct PaxosFamily {
  using Message = PaxMsg;

  struct Process {
    Process(const SimConfig& cfg, int id);

    void on_timeout(Ctx<PaxMsg>& ctx);
    void on_deliver(Ctx<PaxMsg>& ctx, const Record<PaxMsg>& rec);
    int timeout_weight() const;

    // exposed for invariant tests
    const SimConfig* cfg;
    int id;
    bool multi;
    int budget;  // decrees driven
    Round max_joined = Round::nat(0);
    Round last_started = Round::nat(0);
    std::vector<Round> voted_round;            // per decree
    std::vector<std::string> voted_value;      // per decree
    std::vector<std::optional<std::string>> decided;  // per decree

    struct Lead {
      std::map<int, std::vector<VoteInfo>> joins;
      bool join_quorum = false;
      std::set<std::uint64_t> proposed;
      std::map<std::uint64_t, std::string> proposal;
      std::map<std::uint64_t, std::set<int>> votes;
    };
    std::map<Round, Lead> leads;

   private:
    bool leads_round(const Round& r) const;
    void propose_next(Ctx<PaxMsg>& ctx, const Round& r);
  };

  struct Observer {
    explicit Observer(const SimConfig&) {}
    void on_send(ObsCtx<PaxMsg>&, const Record<PaxMsg>&) {}
    void on_decide(ObsCtx<PaxMsg>&, int, const DecideInfo&) {}
  };

  static std::string_view type_name(const PaxMsg& m);
  static Round round_of(const PaxMsg& m) { return m.r; }
  static std::optional<std::uint64_t> sn_of(const PaxMsg& m);
  static std::string render_payload(const PaxMsg& m);
  static void collect_cert_ids(const PaxMsg&, std::vector<std::uint64_t>&) {}
};

}  // namespace qtree::sim::paxos
