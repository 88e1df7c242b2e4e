#include "qtree/hotstuff.hpp"

#include <algorithm>

namespace qtree::sim::hotstuff {

HotStuffProto::Process::Process(const SimConfig& c, int pid)
    : cfg(&c), id(pid), byz(c.byzantine(pid)) {
  if (byz) strategy = c.effective_strategy();
}

bool HotStuffProto::Process::extends(const HsNode& n, const Round& anc) const {
  // anc lies on n's parent chain
  Round cur = n.parent;
  while (cur > anc) {
    auto it = tree.find(cur);
    if (it == tree.end()) return false;
    cur = it->second.parent;
  }
  return cur == anc;
}

int HotStuffProto::Process::depth(Round r) const {
  int d = 0;
  while (!r.is_zero()) {
    auto it = tree.find(r);
    if (it == tree.end()) break;
    ++d;
    r = it->second.parent;
  }
  return d;
}

int HotStuffProto::Process::timeout_weight() const {
  return decided_depth < cfg->instances ? 1 : 0;
}

bool HotStuffProto::cert_valid(const ObsCtx<HsMsg>& octx,
                               const std::vector<std::uint64_t>& ids, HsMsg::T expect,
                               const Round& r, const HsNode& node, int quorum) {
  std::set<int> senders;
  for (std::uint64_t id : ids) {
    const Record<HsMsg>* rec = octx.lookup(id);
    if (!rec) return false;
    const HsMsg& m = rec->payload;
    if (m.type != expect || m.r != r || !m.has_node || !(m.node == node)) return false;
    senders.insert(rec->from);
  }
  return (int)senders.size() >= quorum;
}

void HotStuffProto::Process::propose(Ctx<HsMsg>& ctx, std::uint64_t r, const HsNode* parent) {
  Lead& lead = leads[r];
  lead.proposed = true;
  Round prnd = parent ? parent->r : Round::nat(0);
  HsNode n{Round::nat(r), client_value(*cfg, Round::nat(r), 0), prnd};
  tree[n.r] = n;
  lead.variants.push_back(Variant{n, {}, {}, {}, false, false, false});
  if (byz && strategy == ByzStrategy::Equivocate) {
    HsNode alt = n;
    alt.value = cfg->client_values[(r + 1) % cfg->client_values.size()];
    lead.variants.push_back(Variant{alt, {}, {}, {}, false, false, false});
    for (int p = 0; p < cfg->n; ++p) {
      HsMsg m;
      m.type = HsMsg::T::Propose;
      m.r = Round::nat(r);
      m.has_node = true;
      m.node = p < cfg->n / 2 ? n : alt;
      ctx.send(p, std::move(m));
    }
    return;
  }
  HsMsg m;
  m.type = HsMsg::T::Propose;
  m.r = Round::nat(r);
  m.has_node = true;
  m.node = n;
  ctx.broadcast(std::move(m));
}

void HotStuffProto::Process::on_timeout(Ctx<HsMsg>& ctx) {
  if (byz && strategy == ByzStrategy::ReplayStale && stale) {
    ctx.broadcast(*stale);  // certified content from an earlier round, resent verbatim
  }
  if (leader(cur_round) == id && cur_round == 1 && !leads[1].proposed) {
    // initial round: every process starts here, no round changes exist yet
    propose(ctx, cur_round, nullptr);
    return;
  }
  std::uint64_t next = cur_round + 1;
  HsMsg m;
  m.type = HsMsg::T::RoundChange;
  m.r = Round::nat(next);
  if (!pre_node.is_zero()) {
    m.has_node = true;
    m.node = tree.at(pre_node);
  }
  ctx.send(leader(next), std::move(m));
  cur_round = next;
}

void HotStuffProto::Process::on_deliver(Ctx<HsMsg>& ctx, const Record<HsMsg>& rec) {
  const HsMsg& m = rec.payload;
  const std::uint64_t r = m.r.value();
  const int q = cert_quorum(*cfg);

  // spurious voting strategy: echo a vote for whatever passes by, guards ignored
  if (byz && strategy == ByzStrategy::VoteNoJoin && m.has_node) {
    HsMsg v;
    v.r = m.r;
    v.has_node = true;
    v.node = m.node;
    bool echo = true;
    switch (m.type) {
      case HsMsg::T::Propose: v.type = HsMsg::T::Join; break;
      case HsMsg::T::Precommit: v.type = HsMsg::T::PrecommitVote; break;
      case HsMsg::T::Commit: v.type = HsMsg::T::CommitVote; break;
      default: echo = false; break;
    }
    if (echo) {
      tree[m.node.r] = m.node;
      ctx.send(leader(r), std::move(v));
      return;
    }
  }

  // leader side: route a vote-phase message into the matching proposal
  // variant and advance that variant when its quorum completes
  auto tally = [&](std::map<int, std::uint64_t> Variant::*slot, bool Variant::*sent,
                   HsMsg::T next_type) {
    auto lit = leads.find(r);
    if (lit == leads.end() || !lit->second.proposed) return;
    for (Variant& var : lit->second.variants) {
      if (!(var.node == m.node)) continue;
      (var.*slot)[rec.from] = rec.id;
      if ((int)(var.*slot).size() >= q && !(var.*sent)) {
        var.*sent = true;
        if (byz && strategy == ByzStrategy::Withhold) return;  // starve the phase
        HsMsg out;
        out.type = next_type;
        out.r = m.r;
        out.has_node = true;
        out.node = var.node;
        for (const auto& [sender, mid] : var.*slot) {
          (void)sender;
          out.cert.push_back(mid);
        }
        ctx.broadcast(std::move(out));
      }
      return;
    }
  };

  switch (m.type) {
    case HsMsg::T::RoundChange: {
      if (leader(r) != id) break;
      Lead& lead = leads[r];
      lead.rc[rec.from] = m.has_node ? std::optional<HsNode>(m.node) : std::nullopt;
      if (m.has_node) tree[m.node.r] = m.node;
      if (!lead.proposed && (int)lead.rc.size() >= cfg->q1 && cur_round <= r) {
        cur_round = r;
        const HsNode* best = nullptr;
        for (const auto& [sender, pn] : lead.rc) {
          (void)sender;
          if (pn && (!best || pn->r > best->r)) best = &*pn;
        }
        propose(ctx, r, best);
      }
      break;
    }
    case HsMsg::T::Propose: {
      if (r != cur_round || rec.from != leader(r) || sent_join.count(r)) break;
      if (!m.has_node || m.node.r != m.r || !(m.node.parent < m.node.r)) break;
      // client-value validity: commands must come from the configured pool
      bool known = std::find(cfg->client_values.begin(), cfg->client_values.end(),
                             m.node.value) != cfg->client_values.end();
      if (!known) break;
      const HsNode& n = m.node;
      bool ok = voted_node.is_zero() || extends(n, voted_node) || voted_node < n.parent;
      if (!ok) break;
      tree[n.r] = n;
      sent_join.insert(r);
      HsMsg j;
      j.type = HsMsg::T::Join;
      j.r = m.r;
      j.has_node = true;
      j.node = n;
      ctx.send(leader(r), std::move(j));
      break;
    }
    case HsMsg::T::Join:
      if (leader(r) == id && m.has_node)
        tally(&Variant::joins, &Variant::sent_precommit, HsMsg::T::Precommit);
      break;
    case HsMsg::T::Precommit: {
      if (r != cur_round || rec.from != leader(r) || sent_pcv.count(r)) break;
      if (!m.has_node) break;
      ObsCtx<HsMsg> view{cfg, ctx.lookup_fn, {}};
      if (!cert_valid(view, m.cert, HsMsg::T::Join, m.r, m.node, q)) break;
      tree[m.node.r] = m.node;
      pre_node = m.node.r;
      if (!stale) stale = m;
      sent_pcv.insert(r);
      HsMsg v;
      v.type = HsMsg::T::PrecommitVote;
      v.r = m.r;
      v.has_node = true;
      v.node = m.node;
      ctx.send(leader(r), std::move(v));
      break;
    }
    case HsMsg::T::PrecommitVote:
      if (leader(r) == id && m.has_node)
        tally(&Variant::pc_votes, &Variant::sent_commit, HsMsg::T::Commit);
      break;
    case HsMsg::T::Commit: {
      if (r != cur_round || rec.from != leader(r) || sent_cv.count(r)) break;
      if (!m.has_node) break;
      ObsCtx<HsMsg> view{cfg, ctx.lookup_fn, {}};
      if (!cert_valid(view, m.cert, HsMsg::T::PrecommitVote, m.r, m.node, q)) break;
      tree[m.node.r] = m.node;
      voted_node = m.node.r;
      sent_cv.insert(r);
      HsMsg v;
      v.type = HsMsg::T::CommitVote;
      v.r = m.r;
      v.has_node = true;
      v.node = m.node;
      ctx.send(leader(r), std::move(v));
      break;
    }
    case HsMsg::T::CommitVote:
      if (leader(r) == id && m.has_node)
        tally(&Variant::c_votes, &Variant::sent_decide, HsMsg::T::Decide);
      break;
    case HsMsg::T::Decide: {
      if (r != cur_round || rec.from != leader(r)) break;
      if (!m.has_node) break;
      ObsCtx<HsMsg> view{cfg, ctx.lookup_fn, {}};
      if (!cert_valid(view, m.cert, HsMsg::T::CommitVote, m.r, m.node, q)) break;
      if (decided_node == m.node.r) break;  // duplicate delivery
      tree[m.node.r] = m.node;
      decided_node = m.node.r;
      decided_depth = depth(decided_node);
      if (byz) break;  // byzantine decisions carry no weight
      DecideInfo d;
      d.round = m.r;
      d.value = m.node.value;
      // decided command chain, root first
      std::vector<std::string> branch;
      for (Round cur = decided_node; !cur.is_zero(); cur = tree.at(cur).parent)
        branch.push_back(tree.at(cur).value);
      d.branch.assign(branch.rbegin(), branch.rend());
      ctx.decide(d);
      break;
    }
  }
}

void HotStuffProto::Observer::on_send(ObsCtx<HsMsg>& octx, const Record<HsMsg>& rec) {
  const HsMsg& m = rec.payload;
  if (!m.has_node) return;
  const int q = cert_quorum(*cfg);
  if (m.type == HsMsg::T::Precommit) {
    if (!cert_valid(octx, m.cert, HsMsg::T::Join, m.r, m.node, q)) return;
    auto [it, fresh] = added.try_emplace(m.r.value(), m.node);
    // a later valid precommit for the round normally repeats the same node;
    // differing content is emitted so the checker can flag the duplicate
    if (fresh || !(it->second == m.node))
      octx.linpoint(InvocationLabel::add(0, m.node.r, m.node.value, m.node.parent));
  } else if (m.type == HsMsg::T::Decide) {
    if (!cert_valid(octx, m.cert, HsMsg::T::CommitVote, m.r, m.node, q)) return;
    auto [it, fresh] = committed.try_emplace(m.r.value(), m.node);
    if (fresh || !(it->second == m.node)) octx.linpoint(InvocationLabel::commit(0, m.r));
  }
}

std::string_view HotStuffProto::type_name(const HsMsg& m) {
  switch (m.type) {
    case HsMsg::T::RoundChange: return "ROUNDCHANGE";
    case HsMsg::T::Propose: return "PROPOSE";
    case HsMsg::T::Join: return "JOIN";
    case HsMsg::T::Precommit: return "PRECOMMIT";
    case HsMsg::T::PrecommitVote: return "PRECOMMIT_VOTE";
    case HsMsg::T::Commit: return "COMMIT";
    case HsMsg::T::CommitVote: return "COMMIT_VOTE";
    case HsMsg::T::Decide: return "DECIDE";
  }
  return "?";
}

std::string HotStuffProto::render_payload(const HsMsg& m) {
  std::string out = "m=";
  out += type_name(m);
  out += " r=" + m.r.str();
  if (m.has_node)
    out += " node=" + m.node.r.str() + ":" + m.node.value + ":" + m.node.parent.str();
  return out;
}

}  // namespace qtree::sim::hotstuff
