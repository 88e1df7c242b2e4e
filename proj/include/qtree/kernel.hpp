#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "qtree/config.hpp"
#include "qtree/trace.hpp"

namespace qtree::sim {

// Raised when a process violates a kernel guarantee, e.g. tries to embed a
// message it never saw in a certificate. Never thrown by well-behaved runs.
struct SimFault : std::runtime_error {
  using runtime_error::runtime_error;
};

// A sent message as stored in the kernel registry. `from` is stamped by the
// kernel at send time and is never writable by processes; certificates
// reference registry ids, so embedded provenance cannot be altered. This
// stands in for unforgeable signatures.
template <class Msg>
struct Record {
  std::uint64_t id = 0;
  int from = -1;
  Msg payload;
};

// Capabilities handed to a process while it executes one transition.
template <class Msg>
struct Ctx {
  int self = -1;
  const SimConfig* cfg = nullptr;
  std::function<std::uint64_t(int, Msg)> send_fn;  // to == -1 broadcasts
  std::function<void(const DecideInfo&)> decide_fn;
  std::function<void(const InvocationLabel&)> linpoint_fn;
  std::function<const Record<Msg>*(std::uint64_t)> lookup_fn;

  std::uint64_t send(int to, Msg m) const { return send_fn(to, std::move(m)); }
  std::uint64_t broadcast(Msg m) const { return send_fn(-1, std::move(m)); }
  void decide(const DecideInfo& d) const { decide_fn(d); }
  void linpoint(const InvocationLabel& l) const { linpoint_fn(l); }
  const Record<Msg>* lookup(std::uint64_t id) const { return lookup_fn(id); }
};

// Read-only view for trace observers (the linearization-point watchers of
// the BFT protocols).
template <class Msg>
struct ObsCtx {
  const SimConfig* cfg = nullptr;
  std::function<const Record<Msg>*(std::uint64_t)> lookup_fn;
  std::function<void(const InvocationLabel&)> linpoint_fn;

  const Record<Msg>* lookup(std::uint64_t id) const { return lookup_fn(id); }
  void linpoint(const InvocationLabel& l) const { linpoint_fn(l); }
};

// Protocol trait contract:
//   using Message = ...;
//   struct Process { Process(const SimConfig&, int id);
//                    void on_timeout(Ctx<Message>&);
//                    void on_deliver(Ctx<Message>&, const Record<Message>&);
//                    int timeout_weight() const; };  // 0 = no timeout wanted
//
// timeout_weight biases which process a timeout step lands on; a leader
// heartbeating at weight 8 fires far more often than a follower's
// election timer at weight 1, matching the usual interval split.
//   struct Observer { Observer(const SimConfig&);
//                     void on_send(ObsCtx<Message>&, const Record<Message>&);
//                     void on_decide(ObsCtx<Message>&, int proc, const DecideInfo&); };
//   static std::string_view type_name(const Message&);
//   static Round round_of(const Message&);
//   static std::optional<std::uint64_t> sn_of(const Message&);
//   static std::string render_payload(const Message&);  // "m=TYPE ..." sans cert
//   static void collect_cert_ids(const Message&, std::vector<std::uint64_t>&);
//
// One kernel step delivers one message, fires one timeout, or stutters while
// only delayed messages remain. Identical (config, seed) gives a bit
// identical trace.
template <class Proto>
class Kernel {
 public:
  using Msg = typename Proto::Message;
  using Rec = Record<Msg>;
  using Process = typename Proto::Process;

  explicit Kernel(const SimConfig& cfg)
      : cfg_(cfg), rng_(cfg.seed), observer_(cfg), scripted_(cfg.schedule.has_value()) {
    procs_.reserve(cfg_.n);
    for (int p = 0; p < cfg_.n; ++p) procs_.emplace_back(cfg_, p);
    seen_.resize(cfg_.n);
  }

  Trace run() {
    trace_.header = cfg_.render_header();
    if (scripted_) run_scripted();
    else run_random();
    return std::move(trace_);
  }

  const std::vector<Process>& processes() const { return procs_; }
  const std::vector<Rec>& registry() const { return registry_; }

 private:
  static constexpr double kTimeoutWeight = 1.0 / 12.0;

  struct Pending {
    std::uint64_t rid = 0;
    int to = -1;
    int not_before = 0;
  };

  bool alive(int p) const {
    auto it = cfg_.faults.crash_at.find(p);
    return it == cfg_.faults.crash_at.end() || step_ <= it->second;
  }

  bool partition_blocked(int a, int b) const {
    for (const auto& ps : cfg_.faults.partitions) {
      if (step_ < ps.from_step || step_ > ps.to_step) continue;
      bool a_in = false, b_in = false;
      for (int x : ps.group_a) {
        if (x == a) a_in = true;
        if (x == b) b_in = true;
      }
      if (a_in != b_in) return true;
    }
    return false;
  }

  double uniform01() { return double(rng_() >> 11) * (1.0 / 9007199254740992.0); }

  std::uint64_t pick(std::uint64_t k) { return rng_() % k; }

  void emit(EventKind kind, int proc, std::string text) {
    TraceEvent e;
    e.step = step_;
    e.kind = kind;
    e.proc = proc;
    e.text = std::move(text);
    trace_.events.push_back(std::move(e));
  }

  std::string payload_text(const Rec& rec) const {
    std::string s = Proto::render_payload(rec.payload);
    std::vector<std::uint64_t> ids;
    Proto::collect_cert_ids(rec.payload, ids);
    if (!ids.empty()) {
      std::vector<int> senders;
      for (auto id : ids)
        senders.push_back(id < registry_.size() ? registry_[id].from : -1);
      std::sort(senders.begin(), senders.end());
      s += " cert=[";
      for (size_t i = 0; i < senders.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(senders[i]);
      }
      s += ']';
    }
    return s;
  }

  const Rec* lookup(std::uint64_t id) const {
    return id < registry_.size() ? &registry_[id] : nullptr;
  }

  std::uint64_t do_send(int to, Msg m) {
    std::vector<std::uint64_t> ids;
    Proto::collect_cert_ids(m, ids);
    for (auto id : ids)
      if (id >= registry_.size() || !seen_[actor_].count(id))
        throw SimFault("process " + std::to_string(actor_) +
                       " embedded a message it has not seen");
    std::uint64_t rid = registry_.size();
    registry_.push_back(Rec{rid, actor_, std::move(m)});
    seen_[actor_].insert(rid);
    const Rec& rec = registry_.back();
    std::string text = "to=" + (to < 0 ? std::string("*") : std::to_string(to)) +
                       " mid=" + std::to_string(rid) + " " + payload_text(rec);
    emit(EventKind::Send, actor_, std::move(text));
    if (to < 0) {
      for (int t = 0; t < cfg_.n; ++t) route(rec, t);
    } else {
      route(rec, to);
    }
    ObsCtx<Msg> octx = obs_ctx();
    observer_.on_send(octx, rec);
    return rid;
  }

  void route(const Rec& rec, int t) {
    if (scripted_) {
      pending_.push_back(Pending{rec.id, t, step_ + 1});
      return;
    }
    if (cfg_.faults.drop_prob > 0 && uniform01() < cfg_.faults.drop_prob) {
      emit(EventKind::Drop, rec.from,
           "to=" + std::to_string(t) + " mid=" + std::to_string(rec.id) + " m=" +
               std::string(Proto::type_name(rec.payload)));
      return;
    }
    int span = cfg_.faults.delay_max - cfg_.faults.delay_min + 1;
    int extra = cfg_.faults.delay_min + int(pick(span));
    pending_.push_back(Pending{rec.id, t, step_ + 1 + extra});
    if (cfg_.faults.dup_prob > 0 && uniform01() < cfg_.faults.dup_prob) {
      int extra2 = cfg_.faults.delay_min + int(pick(span));
      pending_.push_back(Pending{rec.id, t, step_ + 1 + extra2});
    }
  }

  void do_decide(const DecideInfo& d) {
    TraceEvent e;
    e.step = step_;
    e.kind = EventKind::Decide;
    e.proc = actor_;
    e.text = render_decide(d);
    e.decide = d;
    trace_.events.push_back(std::move(e));
    ObsCtx<Msg> octx = obs_ctx();
    observer_.on_decide(octx, actor_, d);
  }

  void do_linpoint(const InvocationLabel& l) {
    TraceEvent e;
    e.step = step_;
    e.kind = EventKind::Linpoint;
    e.proc = actor_;
    e.text = l.str(cfg_.multi_instance());
    e.label = l;
    trace_.events.push_back(std::move(e));
  }

  Ctx<Msg> ctx() {
    Ctx<Msg> c;
    c.self = actor_;
    c.cfg = &cfg_;
    c.send_fn = [this](int to, Msg m) { return do_send(to, std::move(m)); };
    c.decide_fn = [this](const DecideInfo& d) { do_decide(d); };
    c.linpoint_fn = [this](const InvocationLabel& l) { do_linpoint(l); };
    c.lookup_fn = [this](std::uint64_t id) { return lookup(id); };
    return c;
  }

  ObsCtx<Msg> obs_ctx() {
    ObsCtx<Msg> c;
    c.cfg = &cfg_;
    c.lookup_fn = [this](std::uint64_t id) { return lookup(id); };
    c.linpoint_fn = [this](const InvocationLabel& l) { do_linpoint(l); };
    return c;
  }

  void fire_timeout(int p) {
    emit(EventKind::Timeout, p, "");
    actor_ = p;
    Ctx<Msg> c = ctx();
    procs_[p].on_timeout(c);
    actor_ = -1;
  }

  void deliver_at(size_t pi) {
    Pending pe = pending_[pi];
    pending_.erase(pending_.begin() + pi);
    const Rec& rec = registry_[pe.rid];
    seen_[pe.to].insert(rec.id);
    std::vector<std::uint64_t> ids;
    Proto::collect_cert_ids(rec.payload, ids);
    for (auto id : ids) seen_[pe.to].insert(id);
    emit(EventKind::Deliver, pe.to,
         "from=" + std::to_string(rec.from) + " mid=" + std::to_string(rec.id) + " " +
             payload_text(rec));
    actor_ = pe.to;
    Ctx<Msg> c = ctx();
    procs_[pe.to].on_deliver(c, rec);
    actor_ = -1;
  }

  void run_random() {
    std::vector<size_t> eligible;
    std::vector<std::pair<int, int>> timeout_ready;  // (proc, weight)
    for (step_ = 0; step_ < cfg_.max_steps; ++step_) {
      eligible.clear();
      for (size_t i = 0; i < pending_.size(); ++i) {
        const Pending& p = pending_[i];
        if (p.not_before > step_ || !alive(p.to)) continue;
        if (partition_blocked(registry_[p.rid].from, p.to)) continue;
        eligible.push_back(i);
      }
      timeout_ready.clear();
      std::uint64_t total_weight = 0;
      for (int p = 0; p < cfg_.n; ++p) {
        int w = alive(p) ? procs_[p].timeout_weight() : 0;
        if (w > 0) {
          timeout_ready.emplace_back(p, w);
          total_weight += std::uint64_t(w);
        }
      }

      if (eligible.empty() && timeout_ready.empty()) {
        bool live_pending = false;
        for (const Pending& p : pending_)
          if (alive(p.to)) live_pending = true;
        if (!live_pending) {
          emit(EventKind::Quiesce, -1, "");
          break;
        }
        continue;  // only delayed or blocked messages remain; let steps mature
      }

      bool take_timeout;
      if (eligible.empty()) take_timeout = true;
      else if (timeout_ready.empty()) take_timeout = false;
      else take_timeout = uniform01() < kTimeoutWeight;

      if (take_timeout) {
        std::uint64_t x = pick(total_weight);
        for (const auto& [p, w] : timeout_ready) {
          if (x < std::uint64_t(w)) {
            fire_timeout(p);
            break;
          }
          x -= std::uint64_t(w);
        }
      } else {
        deliver_at(eligible[pick(eligible.size())]);
      }
    }
  }

  void run_scripted() {
    const Schedule& sched = *cfg_.schedule;
    for (size_t k = 0; k < sched.entries.size(); ++k) {
      step_ = int(k);
      const ScheduleEntry& e = sched.entries[k];
      if (e.what == ScheduleEntry::What::Timeout) {
        fire_timeout(e.proc);
        continue;
      }
      bool matched = false;
      for (size_t i = 0; i < pending_.size(); ++i) {
        const Pending& p = pending_[i];
        const Rec& rec = registry_[p.rid];
        if (p.to != e.to || rec.from != e.from) continue;
        if (Proto::type_name(rec.payload) != e.msg_type) continue;
        if (e.round && Proto::round_of(rec.payload) != *e.round) continue;
        if (e.sn && Proto::sn_of(rec.payload) != e.sn) continue;
        deliver_at(i);
        matched = true;
        break;
      }
      if (!matched)
        throw std::runtime_error("schedule entry " + std::to_string(k + 1) +
                                 ": no matching pending message");
    }
  }

  SimConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<Rec> registry_;
  std::vector<Pending> pending_;
  std::vector<Process> procs_;
  typename Proto::Observer observer_;
  std::vector<std::unordered_set<std::uint64_t>> seen_;
  Trace trace_;
  int step_ = 0;
  int actor_ = -1;
  bool scripted_ = false;
};

}  // namespace qtree::sim
