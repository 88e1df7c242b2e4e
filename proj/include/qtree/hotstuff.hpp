#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qtree/kernel.hpp"

namespace qtree::sim::hotstuff {

struct HsNode {
  Round r;
  std::string value;
  Round parent;
  friend bool operator==(const HsNode&, const HsNode&) = default;
};

struct HsMsg {
  enum class T {
    RoundChange,
    Propose,
    Join,
    Precommit,
    PrecommitVote,
    Commit,
    CommitVote,
    Decide
  };
  T type = T::RoundChange;
  Round r;
  bool has_node = false;  // RoundChange with genesis preNode carries none
  HsNode node;
  std::vector<std::uint64_t> cert;
};

// Four-phase chained-command replication: per round the leader proposes one
// node extending the highest preNode reported in round changes, then drives
// JOIN -> PRECOMMIT -> PRECOMMIT_VOTE -> COMMIT -> COMMIT_VOTE -> DECIDE,
// each phase broadcast carrying a certificate of the previous phase's
// quorum. The trace observer emits the add linearization point at the first
// valid PRECOMMIT send of a round and the commit point at the first valid
// DECIDE send. An equivocating byzantine leader runs the whole round
// split-brain, tallying each proposal variant separately.
struct HotStuffProto {
  using Message = HsMsg;

  // certificate threshold; the mutation knocks one vote off
  static int cert_quorum(const SimConfig& cfg) {
    return cfg.mutation == Mutation::HotStuffCertThreshold ? cfg.q2 - 1 : cfg.q2;
  }

  // ids must reference `expect`-typed records for round r carrying `node`,
  // from at least `quorum` distinct senders
  static bool cert_valid(const ObsCtx<HsMsg>& octx, const std::vector<std::uint64_t>& ids,
                         HsMsg::T expect, const Round& r, const HsNode& node, int quorum);

  struct Process {
    Process(const SimConfig& cfg, int id);

    void on_timeout(Ctx<HsMsg>& ctx);
    void on_deliver(Ctx<HsMsg>& ctx, const Record<HsMsg>& rec);
    int timeout_weight() const;

    const SimConfig* cfg;
    int id;
    bool byz;
    ByzStrategy strategy = ByzStrategy::None;
    std::uint64_t cur_round = 1;
    std::map<Round, HsNode> tree;  // every node seen, keyed by round
    Round pre_node = Round::nat(0);
    Round voted_node = Round::nat(0);
    Round decided_node = Round::nat(0);
    int decided_depth = 0;

    std::set<std::uint64_t> sent_join, sent_pcv, sent_cv;

    // one proposal variant and its phase tallies; honest leaders keep one,
    // an equivocating leader keeps two
    struct Variant {
      HsNode node;
      std::map<int, std::uint64_t> joins, pc_votes, c_votes;  // sender -> msg id
      bool sent_precommit = false, sent_commit = false, sent_decide = false;
    };
    struct Lead {
      std::map<int, std::optional<HsNode>> rc;
      bool proposed = false;
      std::vector<Variant> variants;
    };
    std::map<std::uint64_t, Lead> leads;

    // stale certified message retained for the replay strategy
    std::optional<HsMsg> stale;

   private:
    int leader(std::uint64_t r) const { return int(r % std::uint64_t(cfg->n)); }
    bool extends(const HsNode& n, const Round& anc) const;
    void propose(Ctx<HsMsg>& ctx, std::uint64_t r, const HsNode* parent);
    int depth(Round r) const;
  };

  struct Observer {
    explicit Observer(const SimConfig& c) : cfg(&c) {}
    void on_send(ObsCtx<HsMsg>& octx, const Record<HsMsg>& rec);
    void on_decide(ObsCtx<HsMsg>&, int, const DecideInfo&) {}

    const SimConfig* cfg;
    std::map<std::uint64_t, HsNode> added;      // round -> node of first valid precommit
    std::map<std::uint64_t, HsNode> committed;  // round -> node of first valid decide
  };

  static std::string_view type_name(const HsMsg& m);
  static Round round_of(const HsMsg& m) { return m.r; }
  static std::optional<std::uint64_t> sn_of(const HsMsg&) { return std::nullopt; }
  static std::string render_payload(const HsMsg& m);
  static void collect_cert_ids(const HsMsg& m, std::vector<std::uint64_t>& out) {
    out.insert(out.end(), m.cert.begin(), m.cert.end());
  }
};

}  // namespace qtree::sim::hotstuff
