#include "qtree/raft.hpp"

namespace qtree::sim::raft {

RaftProto::Process::Process(const SimConfig& c, int pid) : cfg(&c), id(pid) {}

void RaftProto::Process::on_timeout(Ctx<RaftMsg>& ctx) {
  if (role == Role::Leader) {
    log_request(ctx);
    return;
  }
  // start an election for the next term
  term += 1;
  role = Role::Candidate;
  votes_for_me.clear();
  RaftMsg m;
  m.type = RaftMsg::T::VoteReq;
  m.term = term;
  m.lidx = lidx();
  m.last_term = last_log_term();
  ctx.broadcast(std::move(m));
}

void RaftProto::Process::log_request(Ctx<RaftMsg>& ctx) {
  // decide entries acknowledged by a quorum since the previous request
  if (sent_req && (int)resp_senders.size() >= cfg->q2 && last_req_lidx > didx) {
    int old_didx = didx;
    didx = last_req_lidx;
    for (int i = old_didx + 1; i <= didx; ++i) {
      DecideInfo d;
      d.round = Round::pair(log[i].term, i);
      d.value = log[i].value;
      d.index = i;
      ctx.decide(d);
      if (log[i].term == term)
        ctx.linpoint(InvocationLabel::commit(0, Round::pair(term, i)));
    }
  }
  // append fresh commands while the budget lasts
  for (int k = 0; k < cfg->batch && (int)log.size() < cfg->instances; ++k) {
    int i = lidx() + 1;
    Entry e{term, client_value(*cfg, Round::pair(term, i), i)};
    log.push_back(e);
    Round parent = i == 0 ? Round::zero(Round::Form::Pair) : Round::pair(log[i - 1].term, i - 1);
    ctx.linpoint(InvocationLabel::add(0, Round::pair(term, i), e.value, parent));
  }
  resp_senders.clear();
  last_req_lidx = lidx();
  sent_req = true;
  RaftMsg m;
  m.type = RaftMsg::T::LogReq;
  m.term = term;
  m.lidx = lidx();
  m.didx = didx;
  m.log = log;
  ctx.broadcast(std::move(m));
}

void RaftProto::Process::on_deliver(Ctx<RaftMsg>& ctx, const Record<RaftMsg>& rec) {
  const RaftMsg& m = rec.payload;
  switch (m.type) {
    case RaftMsg::T::VoteReq: {
      if (m.term > term) {
        term = m.term;
        role = Role::Follower;
      }
      bool up_to_date = std::pair(m.last_term, m.lidx) >= std::pair(last_log_term(), lidx());
      if (cfg->mutation == Mutation::RaftGrantAnyVote) up_to_date = true;
      if (m.term >= term && voted_term < m.term && up_to_date) {
        voted_term = m.term;
        term = m.term;
        RaftMsg reply;
        reply.type = RaftMsg::T::VoteResp;
        reply.term = m.term;
        reply.lidx = lidx();
        ctx.send(rec.from, std::move(reply));
      }
      break;
    }
    case RaftMsg::T::VoteResp: {
      if (role != Role::Candidate || m.term != term) break;
      votes_for_me.insert(rec.from);
      if ((int)votes_for_me.size() >= cfg->q1) {
        role = Role::Leader;
        sent_req = false;
        last_req_lidx = -1;
        resp_senders.clear();
        log_request(ctx);  // first request of the term
      }
      break;
    }
    case RaftMsg::T::LogReq: {
      if (m.term < term || m.lidx < lidx()) break;
      if (rec.from != id) {
        // adopt the leader's log wholesale; the local suffix is overwritten
        term = m.term;
        role = Role::Follower;
        log = m.log;
        didx = m.didx;
      }
      RaftMsg reply;
      reply.type = RaftMsg::T::LogResp;
      reply.term = m.term;
      reply.lidx = lidx();
      ctx.send(rec.from, std::move(reply));
      break;
    }
    case RaftMsg::T::LogResp: {
      if (role != Role::Leader || m.term != term) break;
      if (m.lidx == last_req_lidx) resp_senders.insert(rec.from);
      break;
    }
  }
}

std::string_view RaftProto::type_name(const RaftMsg& m) {
  switch (m.type) {
    case RaftMsg::T::VoteReq: return "VOTEREQ";
    case RaftMsg::T::VoteResp: return "VOTERESP";
    case RaftMsg::T::LogReq: return "LOGREQ";
    case RaftMsg::T::LogResp: return "LOGRESP";
  }
  return "?";
}

std::string RaftProto::render_payload(const RaftMsg& m) {
  std::string out = "m=";
  out += type_name(m);
  out += " t=" + std::to_string(m.term);
  out += " li=" + std::to_string(m.lidx);
  if (m.type == RaftMsg::T::VoteReq) out += " lt=" + std::to_string(m.last_term);
  if (m.type == RaftMsg::T::LogReq) {
    out += " di=" + std::to_string(m.didx);
    out += " log=";
    for (size_t i = 0; i < m.log.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(m.log[i].term) + ":" + m.log[i].value;
    }
  }
  return out;
}

}  // namespace qtree::sim::raft
