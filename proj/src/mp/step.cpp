#include "sim/mp/step.hpp"

#include <algorithm>

#include "sim/error.hpp"

namespace sim::mp {

std::string MpStep::label() const {
  if (rule == Rule::Internal) return "-";
  return action.label();
}

std::string MpStep::recv_str() const {
  if (recv.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < recv.size(); ++i) {
    if (i) out += ',';
    out += recv[i].str();
  }
  return out;
}

namespace {

void check_pid(const MpGlobalState& g, Pid p) {
  if (p < 0 || p >= g.total()) fail(Err::Internal, "process id out of range: " + std::to_string(p));
  if (g.entry(p).crashed) fail(Err::Crashed, "process " + std::to_string(p) + " has crashed");
}

ProcEntry with_sends(const MpGlobalState& g, Pid pid, ProcEntry e, std::vector<Send> sends) {
  for (auto& s : sends) {
    if (s.dst < 0 || s.dst >= g.total())
      fail(Err::Internal, "send to unknown process " + std::to_string(s.dst));
    Message m;
    m.src = pid;
    m.dst = s.dst;
    m.payload = std::move(s.payload);
    m.uid = Uid{pid, e.pool.size()};
    e.pool = e.pool.append(std::move(m));
  }
  return e;
}

}  // namespace

MpGlobalState step_call(const MpImplementation& impl, const MpGlobalState& g, Pid i,
                        const Action& call) {
  check_pid(g, i);
  if (!g.is_client(i)) fail(Err::Internal, "call step on non-client " + std::to_string(i));
  if (call.kind != Action::Kind::Call) fail(Err::Internal, "call step needs a call action");
  const ProcEntry& cur = g.entry(i);
  if (impl.pending(i, cur.state) || cur.pending_inv)
    fail(Err::PendingInvocation,
         "client " + std::to_string(i) + " already has a pending invocation");
  DeltaResult r = impl.delta(i, cur.state, DeltaInput::call(call));
  if (!r)
    fail(Err::UndefinedTransition,
         "client " + std::to_string(i) + " has no transition for " + call.label());
  ProcEntry next = cur;
  next.state = std::move(r->first);
  next.pending_inv = call.inv;
  next = with_sends(g, i, std::move(next), std::move(r->second));
  return g.with_entry(i, std::move(next));
}

std::pair<MpGlobalState, Action> step_return(const MpImplementation& impl,
                                             const MpGlobalState& g, Pid i) {
  check_pid(g, i);
  if (!g.is_client(i)) fail(Err::Internal, "return step on non-client " + std::to_string(i));
  const ProcEntry& cur = g.entry(i);
  std::optional<Value> y = impl.ret_enabled(i, cur.state);
  if (!y)
    fail(Err::ReturnNotEnabled, "client " + std::to_string(i) + " cannot return yet");
  if (!cur.pending_inv)
    fail(Err::ReturnNotEnabled, "client " + std::to_string(i) + " has no pending invocation");
  Action ret = Action::ret(*cur.pending_inv, *y);
  DeltaResult r = impl.delta(i, cur.state, DeltaInput::ret(ret));
  if (!r)
    fail(Err::Internal, "return value enabled but transition undefined on " + ret.label());
  ProcEntry next = cur;
  next.state = std::move(r->first);
  next.pending_inv.reset();
  next = with_sends(g, i, std::move(next), std::move(r->second));
  return {g.with_entry(i, std::move(next)), ret};
}

std::optional<MpGlobalState> try_deliver(const MpImplementation& impl, const MpGlobalState& g,
                                         Pid j, const std::vector<const Message*>& msgs,
                                         bool dedupe) {
  const ProcEntry& cur = g.entry(j);
  DeltaResult r = impl.delta(j, cur.state, DeltaInput::recv_set(msgs));
  if (!r) return std::nullopt;
  ProcEntry next = cur;
  next.state = std::move(r->first);
  if (dedupe && !msgs.empty()) {
    std::vector<std::uint64_t> del = cur.delivered ? *cur.delivered : std::vector<std::uint64_t>{};
    for (const Message* m : msgs) {
      auto it = std::lower_bound(del.begin(), del.end(), m->uid.pack());
      if (it == del.end() || *it != m->uid.pack()) del.insert(it, m->uid.pack());
    }
    next.delivered = std::make_shared<const std::vector<std::uint64_t>>(std::move(del));
  }
  next = with_sends(g, j, std::move(next), std::move(r->second));
  return g.with_entry(j, std::move(next));
}

MpGlobalState step_internal(const MpImplementation& impl, const MpGlobalState& g, Pid j,
                            const std::vector<Uid>& recv, bool dedupe) {
  check_pid(g, j);
  std::vector<const Message*> msgs;
  msgs.reserve(recv.size());
  for (const Uid& uid : recv) {
    const Message* m = g.find_message(uid);
    if (!m) fail(Err::ForeignMessage, "no sent message with uid " + uid.str());
    if (m->dst != j)
      fail(Err::ForeignMessage,
           "message " + uid.str() + " is addressed to " + std::to_string(m->dst) +
               ", not " + std::to_string(j));
    msgs.push_back(m);
  }
  std::sort(msgs.begin(), msgs.end(),
            [](const Message* a, const Message* b) { return a->uid < b->uid; });
  std::optional<MpGlobalState> out = try_deliver(impl, g, j, msgs, dedupe);
  if (!out)
    fail(Err::UndefinedTransition,
         "process " + std::to_string(j) + " has no transition for the received set");
  return *std::move(out);
}

MpGlobalState apply_step(const MpImplementation& impl, const MpGlobalState& g,
                         const MpStep& step, bool dedupe) {
  switch (step.rule) {
    case MpStep::Rule::Call:
      return step_call(impl, g, step.pid, step.action);
    case MpStep::Rule::Ret: {
      auto [g2, ret] = step_return(impl, g, step.pid);
      if (step.action.kind == Action::Kind::Ret && !(ret == step.action))
        fail(Err::Internal, "recorded return " + step.action.label() +
                                " does not match enabled return " + ret.label());
      return g2;
    }
    case MpStep::Rule::Internal:
      return step_internal(impl, g, step.pid, step.recv, dedupe);
  }
  fail(Err::Internal, "bad step rule");
}

std::vector<Uid> undelivered_to(const MpGlobalState& g, Pid j) {
  std::vector<Uid> out;
  for (const Message* m : g.addressed_to(j)) {
    if (!g.entry(j).was_delivered(m->uid)) out.push_back(m->uid);
  }
  return out;
}

EnabledSteps enabled_steps(const MpImplementation& impl, const MpGlobalState& g,
                           const EnumOptions& opts) {
  EnabledSteps out;
  for (Pid p = 0; p < g.total(); ++p) {
    const ProcEntry& e = g.entry(p);
    if (e.crashed) continue;
    if (g.is_client(p)) {
      if (!impl.pending(p, e.state) && !e.pending_inv) out.callable.push_back(p);
      if (auto y = impl.ret_enabled(p, e.state); y && e.pending_inv)
        out.returnable.emplace_back(p, *y);
    }
    std::vector<const Message*> avail;
    for (const Message* m : g.addressed_to(p)) {
      if (opts.dedupe && e.was_delivered(m->uid)) continue;
      avail.push_back(m);
    }
    if (avail.size() > 16)
      fail(Err::Internal, "too many deliverable messages to enumerate subsets: " +
                              std::to_string(avail.size()));
    const std::size_t k = avail.size();
    for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
      std::size_t bits = static_cast<std::size_t>(__builtin_popcount(mask));
      if (opts.max_recv && bits > opts.max_recv) continue;
      std::vector<const Message*> msgs;
      std::vector<Uid> uids;
      for (std::size_t b = 0; b < k; ++b) {
        if (mask & (1u << b)) {
          msgs.push_back(avail[b]);
          uids.push_back(avail[b]->uid);
        }
      }
      if (impl.delta(p, e.state, DeltaInput::recv_set(std::move(msgs))))
        out.internals.push_back(EnabledInternal{p, std::move(uids)});
    }
    if (opts.include_empty_recv && impl.delta(p, e.state, DeltaInput::recv_set({})))
      out.internals.push_back(EnabledInternal{p, {}});
  }
  return out;
}

}  // namespace sim::mp
