#include "qtree/paxos.hpp"

#include <cassert>

namespace qtree::sim::paxos {

PaxosFamily::Process::Process(const SimConfig& c, int pid)
    : cfg(&c),
      id(pid),
      multi(c.protocol == Protocol::MultiPaxos),
      budget(c.instances),
      voted_round(c.instances, Round::nat(0)),
      voted_value(c.instances),
      decided(c.instances) {}

bool PaxosFamily::Process::leads_round(const Round& r) const {
  return r.value() % std::uint64_t(cfg->n) == std::uint64_t(id);
}

int PaxosFamily::Process::timeout_weight() const {
  for (const auto& d : decided)
    if (!d) return 1;
  return 0;
}

void PaxosFamily::Process::on_timeout(Ctx<PaxMsg>& ctx) {
  // start the next round this process can lead, above everything it has seen
  std::uint64_t base = std::max(last_started.value(), max_joined.value());
  for (const Round& vr : voted_round) base = std::max(base, vr.value());
  std::uint64_t r = base + 1;
  while (r % std::uint64_t(cfg->n) != std::uint64_t(id)) ++r;
  last_started = Round::nat(r);
  leads[last_started];
  PaxMsg m;
  m.type = PaxMsg::T::Start;
  m.r = last_started;
  ctx.broadcast(std::move(m));
}

void PaxosFamily::Process::propose_next(Ctx<PaxMsg>& ctx, const Round& r) {
  Lead& lead = leads[r];
  for (int i = 0; i < budget; ++i) {
    std::uint64_t sn = std::uint64_t(i);
    if (decided[i] || lead.proposed.count(sn)) continue;
    // pick the vote with the highest round among the join quorum
    Round best_r = Round::nat(0);
    std::string best_v;
    for (const auto& [sender, infos] : lead.joins) {
      (void)sender;
      for (const VoteInfo& vi : infos) {
        if (vi.sn != sn || vi.vr.is_zero()) continue;
        if (vi.vr > best_r) {
          best_r = vi.vr;
          best_v = vi.vv;
        } else if (vi.vr == best_r) {
          // equal max vote rounds must agree on the value
          assert(vi.vv == best_v);
        }
      }
    }
    std::string v = best_r.is_zero() ? client_value(*cfg, r, sn) : best_v;
    lead.proposed.insert(sn);
    lead.proposal[sn] = v;
    PaxMsg m;
    m.type = PaxMsg::T::Propose;
    m.r = r;
    m.sn = sn;
    m.value = v;
    ctx.broadcast(std::move(m));
    ctx.linpoint(InvocationLabel::add(sn, r, v, best_r));
    return;  // one decree at a time; the next follows its decision
  }
}

void PaxosFamily::Process::on_deliver(Ctx<PaxMsg>& ctx, const Record<PaxMsg>& rec) {
  const PaxMsg& m = rec.payload;
  switch (m.type) {
    case PaxMsg::T::Start: {
      if (!(max_joined < m.r)) break;
      max_joined = m.r;
      PaxMsg reply;
      reply.type = PaxMsg::T::Join;
      reply.r = m.r;
      for (int i = 0; i < budget; ++i) {
        VoteInfo vi;
        vi.sn = std::uint64_t(i);
        if (cfg->mutation != Mutation::PaxosJoinForgetVotes) {
          vi.vr = voted_round[i];
          vi.vv = voted_value[i];
        }
        reply.votes.push_back(std::move(vi));
      }
      ctx.send(rec.from, std::move(reply));
      break;
    }
    case PaxMsg::T::Join: {
      auto it = leads.find(m.r);
      if (!leads_round(m.r) || it == leads.end()) break;
      Lead& lead = it->second;
      lead.joins[rec.from] = m.votes;
      if (!lead.join_quorum && (int)lead.joins.size() >= cfg->q1) {
        lead.join_quorum = true;
        propose_next(ctx, m.r);
      }
      break;
    }
    case PaxMsg::T::Propose: {
      std::uint64_t sn = m.sn;
      if (sn >= voted_round.size()) break;
      bool joined_ok =
          cfg->mutation == Mutation::PaxosVoteIgnoreJoined || !(max_joined > m.r);
      if (!joined_ok || !(voted_round[sn] < m.r)) break;
      voted_round[sn] = m.r;
      voted_value[sn] = m.value;
      if (max_joined < m.r) max_joined = m.r;
      PaxMsg reply;
      reply.type = PaxMsg::T::Vote;
      reply.r = m.r;
      reply.sn = sn;
      ctx.send(rec.from, std::move(reply));
      break;
    }
    case PaxMsg::T::Vote: {
      auto it = leads.find(m.r);
      if (!leads_round(m.r) || it == leads.end()) break;
      Lead& lead = it->second;
      if (!lead.proposed.count(m.sn) || decided[m.sn]) break;
      auto& voters = lead.votes[m.sn];
      voters.insert(rec.from);
      if ((int)voters.size() >= cfg->q2) {
        decided[m.sn] = lead.proposal[m.sn];
        DecideInfo d;
        d.sn = m.sn;
        d.round = m.r;
        d.value = *decided[m.sn];
        ctx.decide(d);
        ctx.linpoint(InvocationLabel::commit(m.sn, m.r));
        if (multi) propose_next(ctx, m.r);  // stable leader skips the first phase
      }
      break;
    }
  }
}

std::string_view PaxosFamily::type_name(const PaxMsg& m) {
  switch (m.type) {
    case PaxMsg::T::Start: return "START";
    case PaxMsg::T::Join: return "JOIN";
    case PaxMsg::T::Propose: return "PROPOSE";
    case PaxMsg::T::Vote: return "VOTE";
  }
  return "?";
}

std::optional<std::uint64_t> PaxosFamily::sn_of(const PaxMsg& m) {
  if (m.type == PaxMsg::T::Propose || m.type == PaxMsg::T::Vote) return m.sn;
  return std::nullopt;
}

std::string PaxosFamily::render_payload(const PaxMsg& m) {
  std::string out = "m=";
  out += type_name(m);
  out += " r=" + m.r.str();
  switch (m.type) {
    case PaxMsg::T::Start:
      break;
    case PaxMsg::T::Join:
      if (m.votes.size() == 1 && m.votes[0].sn == 0) {
        out += " vr=" + m.votes[0].vr.str();
        out += " vv=" + (m.votes[0].vv.empty() ? std::string("-") : m.votes[0].vv);
      } else {
        out += " votes=";
        for (size_t i = 0; i < m.votes.size(); ++i) {
          if (i) out += ';';
          const VoteInfo& vi = m.votes[i];
          out += std::to_string(vi.sn) + ":" + vi.vr.str() + ":" +
                 (vi.vv.empty() ? std::string("-") : vi.vv);
        }
      }
      break;
    case PaxMsg::T::Propose:
      out += " v=" + m.value;
      out += " sn=" + std::to_string(m.sn);
      break;
    case PaxMsg::T::Vote:
      out += " sn=" + std::to_string(m.sn);
      break;
  }
  return out;
}

}  // namespace qtree::sim::paxos
