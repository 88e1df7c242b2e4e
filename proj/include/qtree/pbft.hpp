#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "qtree/kernel.hpp"

namespace qtree::sim::pbft {

// One prior vote relayed inside a round change: the vote message plus the
// join quorum that justified it.
struct RcVote {
  std::uint64_t sn = 0;
  std::uint64_t vote_msg = 0;
  std::vector<std::uint64_t> join_cert;
};

struct PbftMsg {
  enum class T { RoundChange, Propose, Join, Vote };
  T type = T::RoundChange;
  Round r;
  std::uint64_t sn = 0;
  std::string value;
  Round vote_round;           // r' the proposed value was voted in; zero if fresh
  std::vector<RcVote> rc;     // RoundChange payload
  std::vector<std::uint64_t> cert;  // Propose: the round-change messages
};

// Multi-decree byzantine consensus, one independent decree per sequence
// number (numbered from 1). The leader of round r proposes per undecided
// decree after a quorum of round changes, relaying the highest relayed vote
// or a fresh client value; processes broadcast JOIN after validating the
// selection against the certificate and VOTE after a quorum of matching
// JOINs; a quorum of matching VOTEs decides. The trace observer emits
// sn.add at the first honest VOTE send of a (round, decree) and sn.commit
// at the first honest decision.
struct PbftProto {
  using Message = PbftMsg;

  struct Process {
    Process(const SimConfig& cfg, int id);

    void on_timeout(Ctx<PbftMsg>& ctx);
    void on_deliver(Ctx<PbftMsg>& ctx, const Record<PbftMsg>& rec);
    int timeout_weight() const;

    const SimConfig* cfg;
    int id;
    bool byz;
    ByzStrategy strategy = ByzStrategy::None;
    std::uint64_t cur_round = 1;

    using Key = std::pair<std::uint64_t, std::uint64_t>;  // (round, sn)
    // full vote content: value and the round it cites
    using Content = std::pair<std::string, std::uint64_t>;

    std::set<Key> sent_join, sent_vote, got_propose;
    std::map<Key, std::map<Content, std::map<int, std::uint64_t>>> join_tally;
    std::map<Key, std::map<Content, std::set<int>>> vote_tally;

    struct StoredVote {
      std::uint64_t vote_msg = 0;
      std::vector<std::uint64_t> join_cert;
      std::uint64_t round = 0;
    };
    std::map<std::uint64_t, StoredVote> last_vote;  // sn -> highest vote sent
    std::map<std::uint64_t, std::string> decided;   // sn -> value

    struct Lead {
      std::map<int, std::uint64_t> rc_ids;              // sender -> rc msg id
      std::map<int, std::vector<RcVote>> rc_payloads;
      std::set<std::uint64_t> proposed;
      bool acted = false;
    };
    std::map<std::uint64_t, Lead> leads;

    std::optional<PbftMsg> stale;  // replay strategy fodder

   private:
    int leader(std::uint64_t r) const { return int(r % std::uint64_t(cfg->n)); }
    void propose_all(Ctx<PbftMsg>& ctx, std::uint64_t r);
  };

  struct Observer {
    explicit Observer(const SimConfig& c) : cfg(&c) {}
    void on_send(ObsCtx<PbftMsg>& octx, const Record<PbftMsg>& rec);
    void on_decide(ObsCtx<PbftMsg>& octx, int proc, const DecideInfo& d);

    const SimConfig* cfg;
    using Key = std::pair<std::uint64_t, std::uint64_t>;  // (sn, round)
    std::map<Key, std::pair<std::string, std::uint64_t>> added;  // -> (value, r')
    std::map<Key, std::string> committed;                        // -> value
  };

  // best valid relayed vote for decree sn among round-change payloads;
  // validity of a vote needs a quorum of matching joins behind it
  struct Selection {
    bool found = false;
    std::uint64_t round = 0;
    std::string value;
  };
  template <class LookupFn>
  static Selection select_vote(const SimConfig& cfg, const LookupFn& lookup,
                               const std::map<int, std::vector<RcVote>>& rcs,
                               std::uint64_t sn);

  static std::string_view type_name(const PbftMsg& m);
  static Round round_of(const PbftMsg& m) { return m.r; }
  static std::optional<std::uint64_t> sn_of(const PbftMsg& m);
  static std::string render_payload(const PbftMsg& m);
  static void collect_cert_ids(const PbftMsg& m, std::vector<std::uint64_t>& out);
};

template <class LookupFn>
PbftProto::Selection PbftProto::select_vote(const SimConfig& cfg, const LookupFn& lookup,
                                            const std::map<int, std::vector<RcVote>>& rcs,
                                            std::uint64_t sn) {
  Selection best;
  for (const auto& [sender, votes] : rcs) {
    (void)sender;
    for (const RcVote& rv : votes) {
      if (rv.sn != sn) continue;
      const auto* vrec = lookup(rv.vote_msg);
      if (!vrec || vrec->payload.type != PbftMsg::T::Vote || vrec->payload.sn != sn)
        continue;
      const PbftMsg& vote = vrec->payload;
      // the join quorum must match the vote's content
      std::set<int> joiners;
      bool ok = true;
      for (std::uint64_t jid : rv.join_cert) {
        const auto* jrec = lookup(jid);
        if (!jrec || jrec->payload.type != PbftMsg::T::Join ||
            jrec->payload.r != vote.r || jrec->payload.sn != sn ||
            jrec->payload.value != vote.value ||
            jrec->payload.vote_round != vote.vote_round) {
          ok = false;
          break;
        }
        joiners.insert(jrec->from);
      }
      if (!ok || (int)joiners.size() < cfg.q1) continue;
      if (!best.found || vote.r.value() > best.round) {
        best.found = true;
        best.round = vote.r.value();
        best.value = vote.value;
      }
    }
  }
  return best;
}

}  // namespace qtree::sim::pbft
