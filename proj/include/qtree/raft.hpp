#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qtree/kernel.hpp"

namespace qtree::sim::raft {

struct Entry {
  int term = 0;
  std::string value;
  friend bool operator==(const Entry&, const Entry&) = default;
};

struct RaftMsg {
  enum class T { VoteReq, VoteResp, LogReq, LogResp };
  T type = T::VoteReq;
  int term = 0;
  int lidx = -1;       // sender's last log index
  int last_term = 0;   // term of the sender's last entry (VoteReq)
  int didx = -1;       // LogReq: decided prefix end
  std::vector<Entry> log;  // LogReq: full log
};

// Terms with replicated logs; rounds are (term, index) pairs. A leader's
// periodic tick doubles as the log request action: it first decides the
// entries acknowledged by a quorum since the previous request, then appends
// fresh commands, then broadcasts its log. add linearization points fire
// when an index is first appended by its term's leader, commit points when
// the decided prefix advances over entries of the current term.
struct RaftProto {
  using Message = RaftMsg;

  struct Process {
    Process(const SimConfig& cfg, int id);

    void on_timeout(Ctx<RaftMsg>& ctx);
    void on_deliver(Ctx<RaftMsg>& ctx, const Record<RaftMsg>& rec);
    int timeout_weight() const { return role == Role::Leader ? 8 : 1; }

    const SimConfig* cfg;
    int id;
    enum class Role { Follower, Candidate, Leader } role = Role::Follower;
    int term = 0;
    int voted_term = 0;  // highest term granted a vote
    std::vector<Entry> log;
    int didx = -1;
    std::set<int> votes_for_me;
    // leader bookkeeping for the previous log request
    bool sent_req = false;
    int last_req_lidx = -1;
    std::set<int> resp_senders;

    int lidx() const { return int(log.size()) - 1; }
    int last_log_term() const { return log.empty() ? 0 : log.back().term; }

   private:
    void log_request(Ctx<RaftMsg>& ctx);
  };

  struct Observer {
    explicit Observer(const SimConfig&) {}
    void on_send(ObsCtx<RaftMsg>&, const Record<RaftMsg>&) {}
    void on_decide(ObsCtx<RaftMsg>&, int, const DecideInfo&) {}
  };

  static std::string_view type_name(const RaftMsg& m);
  static Round round_of(const RaftMsg& m) { return Round::pair(m.term, 0); }
  static std::optional<std::uint64_t> sn_of(const RaftMsg&) { return std::nullopt; }
  static std::string render_payload(const RaftMsg& m);
  static void collect_cert_ids(const RaftMsg&, std::vector<std::uint64_t>&) {}
};

}  // namespace qtree::sim::raft
