#include "qtree/pbft.hpp"

#include <algorithm>

namespace qtree::sim::pbft {

PbftProto::Process::Process(const SimConfig& c, int pid)
    : cfg(&c), id(pid), byz(c.byzantine(pid)) {
  if (byz) strategy = c.effective_strategy();
}

int PbftProto::Process::timeout_weight() const {
  for (int i = 0; i < cfg->instances; ++i)
    if (!decided.count(cfg->first_instance() + i)) return 1;
  return 0;
}

void PbftProto::Process::on_timeout(Ctx<PbftMsg>& ctx) {
  if (byz && strategy == ByzStrategy::ForgeCert) {
    // kernel fault test hook: reference a message id that was never sent
    PbftMsg m;
    m.type = PbftMsg::T::RoundChange;
    m.r = Round::nat(cur_round + 1);
    m.rc.push_back(RcVote{cfg->first_instance(), 1'000'000'000ULL, {}});
    ctx.send(leader(cur_round + 1), std::move(m));
    return;
  }
  if (byz && strategy == ByzStrategy::ReplayStale && stale) ctx.broadcast(*stale);
  if (leader(cur_round) == id && cur_round == 1 && !leads[1].acted) {
    leads[1].acted = true;
    propose_all(ctx, 1);  // initial round needs no round changes
    return;
  }
  std::uint64_t next = cur_round + 1;
  PbftMsg m;
  m.type = PbftMsg::T::RoundChange;
  m.r = Round::nat(next);
  for (const auto& [sn, sv] : last_vote)
    if (!decided.count(sn)) m.rc.push_back(RcVote{sn, sv.vote_msg, sv.join_cert});
  ctx.send(leader(next), std::move(m));
  cur_round = next;
}

void PbftProto::Process::propose_all(Ctx<PbftMsg>& ctx, std::uint64_t r) {
  if (byz && strategy == ByzStrategy::Withhold) return;
  Lead& lead = leads[r];
  std::vector<std::uint64_t> cert;
  for (const auto& [sender, mid] : lead.rc_ids) {
    (void)sender;
    cert.push_back(mid);
  }
  for (int i = 0; i < cfg->instances; ++i) {
    std::uint64_t sn = cfg->first_instance() + i;
    if (decided.count(sn) || lead.proposed.count(sn)) continue;
    lead.proposed.insert(sn);
    if (byz && strategy == ByzStrategy::Equivocate) {
      // fresh split values, certificate selection ignored
      std::string a = client_value(*cfg, Round::nat(r), sn);
      std::string b = cfg->client_values[(r + sn + 1) % cfg->client_values.size()];
      for (int p = 0; p < cfg->n; ++p) {
        PbftMsg m;
        m.type = PbftMsg::T::Propose;
        m.r = Round::nat(r);
        m.sn = sn;
        m.value = p < cfg->n / 2 ? a : b;
        m.vote_round = Round::nat(0);
        m.cert = cert;
        ctx.send(p, std::move(m));
      }
      continue;
    }
    Selection sel = select_vote(*cfg, [&](std::uint64_t mid) { return ctx.lookup(mid); },
                                lead.rc_payloads, sn);
    PbftMsg m;
    m.type = PbftMsg::T::Propose;
    m.r = Round::nat(r);
    m.sn = sn;
    m.value = sel.found ? sel.value : client_value(*cfg, Round::nat(r), sn);
    m.vote_round = Round::nat(sel.found ? sel.round : 0);
    m.cert = cert;
    ctx.broadcast(std::move(m));
  }
}

void PbftProto::Process::on_deliver(Ctx<PbftMsg>& ctx, const Record<PbftMsg>& rec) {
  const PbftMsg& m = rec.payload;
  const std::uint64_t r = m.r.value();
  switch (m.type) {
    case PbftMsg::T::RoundChange: {
      if (leader(r) != id) break;
      Lead& lead = leads[r];
      lead.rc_ids[rec.from] = rec.id;
      lead.rc_payloads[rec.from] = m.rc;
      if (!lead.acted && (int)lead.rc_ids.size() >= cfg->q1 && cur_round <= r) {
        lead.acted = true;
        cur_round = r;
        propose_all(ctx, r);
      }
      break;
    }
    case PbftMsg::T::Propose: {
      if (!stale) stale = m;
      if (byz && strategy == ByzStrategy::VoteNoJoin) {
        // vote straight away, no join quorum behind it
        PbftMsg v;
        v.type = PbftMsg::T::Vote;
        v.r = m.r;
        v.sn = m.sn;
        v.value = m.value;
        v.vote_round = m.vote_round;
        ctx.broadcast(std::move(v));
        break;
      }
      Key key{r, m.sn};
      if (r != cur_round || rec.from != leader(r)) break;
      if (sent_join.count(key) || decided.count(m.sn)) break;
      if (cfg->mutation != Mutation::PbftJoinSkipValidation) {
        // the proposal must match what its certificate justifies
        bool ok;
        if (r == 1) {
          ok = m.vote_round.is_zero();
        } else {
          std::set<int> senders;
          std::map<int, std::vector<RcVote>> rcs;
          ok = true;
          for (std::uint64_t cid : m.cert) {
            const auto* crec = ctx.lookup(cid);
            if (!crec || crec->payload.type != PbftMsg::T::RoundChange ||
                crec->payload.r != m.r) {
              ok = false;
              break;
            }
            senders.insert(crec->from);
            rcs[crec->from] = crec->payload.rc;
          }
          if (ok && (int)senders.size() < cfg->q1) ok = false;
          if (ok) {
            Selection sel = select_vote(
                *cfg, [&](std::uint64_t mid) { return ctx.lookup(mid); }, rcs, m.sn);
            if (sel.found)
              ok = m.vote_round == Round::nat(sel.round) && m.value == sel.value;
            else
              ok = m.vote_round.is_zero();
          }
        }
        // fresh proposals must carry a real client value
        if (ok && m.vote_round.is_zero())
          ok = std::find(cfg->client_values.begin(), cfg->client_values.end(), m.value) !=
               cfg->client_values.end();
        if (!ok) break;
      }
      got_propose.insert(key);
      sent_join.insert(key);
      PbftMsg j;
      j.type = PbftMsg::T::Join;
      j.r = m.r;
      j.sn = m.sn;
      j.value = m.value;
      j.vote_round = m.vote_round;
      ctx.broadcast(std::move(j));
      break;
    }
    case PbftMsg::T::Join: {
      Key key{r, m.sn};
      Content content{m.value, m.vote_round.value()};
      auto& senders = join_tally[key][content];
      senders[rec.from] = rec.id;
      if (r != cur_round || sent_vote.count(key) || decided.count(m.sn)) break;
      if (!got_propose.count(key)) break;
      if ((int)senders.size() < cfg->q1) break;
      sent_vote.insert(key);
      PbftMsg v;
      v.type = PbftMsg::T::Vote;
      v.r = m.r;
      v.sn = m.sn;
      v.value = m.value;
      v.vote_round = m.vote_round;
      std::uint64_t vid = ctx.broadcast(std::move(v));
      StoredVote sv;
      sv.vote_msg = vid;
      sv.round = r;
      for (const auto& [sender, mid] : senders) {
        (void)sender;
        sv.join_cert.push_back(mid);
      }
      auto it = last_vote.find(m.sn);
      if (it == last_vote.end() || it->second.round < r) last_vote[m.sn] = std::move(sv);
      break;
    }
    case PbftMsg::T::Vote: {
      Key key{r, m.sn};
      Content content{m.value, m.vote_round.value()};
      auto& senders = vote_tally[key][content];
      senders.insert(rec.from);
      if (decided.count(m.sn) || (int)senders.size() < cfg->q2) break;
      decided[m.sn] = m.value;
      DecideInfo d;
      d.sn = m.sn;
      d.round = m.r;
      d.value = m.value;
      if (!byz) ctx.decide(d);
      break;
    }
  }
}

void PbftProto::Observer::on_send(ObsCtx<PbftMsg>& octx, const Record<PbftMsg>& rec) {
  const PbftMsg& m = rec.payload;
  if (m.type != PbftMsg::T::Vote || cfg->byzantine(rec.from)) return;
  Key key{m.sn, m.r.value()};
  std::pair<std::string, std::uint64_t> content{m.value, m.vote_round.value()};
  auto [it, fresh] = added.try_emplace(key, content);
  // one linearization point per (decree, round); a differing later vote is a
  // broken run and is emitted so the checker can flag it
  if (fresh || it->second != content)
    octx.linpoint(InvocationLabel::add(m.sn, m.r, m.value, m.vote_round));
}

void PbftProto::Observer::on_decide(ObsCtx<PbftMsg>& octx, int proc, const DecideInfo& d) {
  if (cfg->byzantine(proc)) return;
  Key key{d.sn, d.round.value()};
  auto [it, fresh] = committed.try_emplace(key, d.value);
  if (fresh || it->second != d.value)
    octx.linpoint(InvocationLabel::commit(d.sn, d.round));
}

std::string_view PbftProto::type_name(const PbftMsg& m) {
  switch (m.type) {
    case PbftMsg::T::RoundChange: return "ROUNDCHANGE";
    case PbftMsg::T::Propose: return "PROPOSE";
    case PbftMsg::T::Join: return "JOIN";
    case PbftMsg::T::Vote: return "VOTE";
  }
  return "?";
}

std::optional<std::uint64_t> PbftProto::sn_of(const PbftMsg& m) {
  if (m.type == PbftMsg::T::RoundChange) return std::nullopt;
  return m.sn;
}

std::string PbftProto::render_payload(const PbftMsg& m) {
  std::string out = "m=";
  out += type_name(m);
  out += " r=" + m.r.str();
  if (m.type == PbftMsg::T::RoundChange) {
    out += " votes=";
    for (size_t i = 0; i < m.rc.size(); ++i) {
      if (i) out += ';';
      out += std::to_string(m.rc[i].sn);
    }
  } else {
    out += " sn=" + std::to_string(m.sn);
    out += " v=" + m.value;
    out += " vr=" + m.vote_round.str();
  }
  return out;
}

void PbftProto::collect_cert_ids(const PbftMsg& m, std::vector<std::uint64_t>& out) {
  for (const RcVote& rv : m.rc) {
    out.push_back(rv.vote_msg);
    out.insert(out.end(), rv.join_cert.begin(), rv.join_cert.end());
  }
  out.insert(out.end(), m.cert.begin(), m.cert.end());
}

}  // namespace qtree::sim::pbft
