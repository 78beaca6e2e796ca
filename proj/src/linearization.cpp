#include "sim/linearization.hpp"

#include <algorithm>
#include <set>

#include "sim/error.hpp"

namespace sim {

namespace {

struct OpView {
  InvId inv;
  std::string method;
  Value arg;
  bool complete = false;
  Value ret;
  std::size_t call_pos = 0;
  std::size_t ret_pos = 0;
};

std::map<InvId, OpView> collect_ops(const History& h) {
  std::map<InvId, OpView> ops;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const Action& a = h[i];
    if (a.is_call()) {
      OpView v;
      v.inv = a.inv;
      v.method = a.method;
      v.arg = a.arg;
      v.call_pos = i;
      ops.emplace(a.inv, std::move(v));
    } else {
      auto it = ops.find(a.inv);
      it->second.complete = true;
      it->second.ret = a.value;
      it->second.ret_pos = i;
    }
  }
  return ops;
}

}  // namespace

bool is_linearization(const History& h1, const History& h2, const SeqSpec& spec) {
  if (!history_well_formed(h1)) fail(Err::MalformedHistory, "h1 is not well-formed");
  if (!history_well_formed(h2) || !history_sequential(h2))
    fail(Err::MalformedHistory, "h2 is not a sequential history");

  auto ops1 = collect_ops(h1);

  // h2 in left-to-right op order.
  std::vector<OpView> seq;
  for (std::size_t i = 0; i + 1 < h2.size(); i += 2) {
    OpView v;
    v.inv = h2[i].inv;
    v.method = h2[i].method;
    v.arg = h2[i].arg;
    v.complete = true;
    v.ret = h2[i + 1].value;
    seq.push_back(std::move(v));
  }

  // h2 must replay through the spec with exactly its recorded returns.
  Value state = spec.init;
  for (const OpView& op : seq) {
    auto r = spec.apply(state, op.method, op.arg);
    if (!r || r->first != op.ret) return false;
    state = r->second;
  }

  // Op correspondence: every h2 op is called in h1 with the same method
  // and argument; every completed h1 op appears with its actual return.
  std::set<InvId> in_h2;
  for (const OpView& op : seq) {
    auto it = ops1.find(op.inv);
    if (it == ops1.end()) return false;
    if (it->second.method != op.method || it->second.arg != op.arg) return false;
    if (it->second.complete && it->second.ret != op.ret) return false;
    in_h2.insert(op.inv);
  }
  for (const auto& [inv, op] : ops1) {
    if (op.complete && !in_h2.count(inv)) return false;
  }

  // Order preservation: if A returned before B was called in h1, then A
  // precedes B in h2. Completions append returns at the end of h1', so
  // pending ops impose no such constraints.
  std::map<InvId, std::size_t> pos2;
  for (std::size_t i = 0; i < seq.size(); ++i) pos2[seq[i].inv] = i;
  for (const OpView& a : seq) {
    const OpView& a1 = ops1.at(a.inv);
    if (!a1.complete) continue;
    for (const OpView& b : seq) {
      if (a.inv == b.inv) continue;
      if (ops1.at(b.inv).call_pos > a1.ret_pos && pos2[a.inv] > pos2[b.inv]) return false;
    }
  }
  return true;
}

History lin_ops_to_history(const std::vector<LinOp>& ops) {
  History h;
  for (const LinOp& op : ops) {
    h.push_back(Action::call(op.inv, op.method, op.arg));
    h.push_back(Action::ret(op.inv, op.ret));
  }
  return h;
}

LinMonitor::LinMonitor(const SeqSpec* spec) : spec_(spec) {
  Cand c;
  c.state = spec->init;
  cands_.push_back(std::move(c));
}

std::uint64_t LinMonitor::Cand::key() const {
  std::uint64_t h = state.hash();
  for (const auto& [inv, ma] : pending) {
    h = hash_combine(h, static_cast<std::uint64_t>(inv));
    h = hash_combine(h, fnv1a64(ma.first));
    h = hash_combine(h, ma.second.hash());
  }
  h = hash_combine(h, 0x5eedull);
  for (const auto& [inv, v] : awaiting) {
    h = hash_combine(h, static_cast<std::uint64_t>(inv));
    h = hash_combine(h, v.hash());
  }
  return h;
}

void LinMonitor::dedup() {
  std::sort(cands_.begin(), cands_.end(),
            [](const Cand& a, const Cand& b) { return a.key() < b.key(); });
  std::vector<Cand> out;
  std::uint64_t last = 0;
  for (auto& c : cands_) {
    std::uint64_t k = c.key();
    if (!out.empty() && k == last) continue;
    last = k;
    out.push_back(std::move(c));
  }
  cands_ = std::move(out);
}

bool LinMonitor::on_action(const Action& a) {
  if (a.is_call()) {
    for (Cand& c : cands_) c.pending[a.inv] = {a.method, a.arg};
    return alive();
  }

  // Return: close each candidate under sequences of linearizations and
  // keep those where this invocation is linearized with this value.
  std::vector<Cand> next;
  std::set<std::uint64_t> seen;
  for (const Cand& c : cands_) {
    std::vector<Cand> frontier{c};
    std::set<std::uint64_t> local;
    local.insert(c.key());
    while (!frontier.empty()) {
      Cand cur = std::move(frontier.back());
      frontier.pop_back();

      auto got = cur.awaiting.find(a.inv);
      if (got != cur.awaiting.end() && got->second == a.value) {
        Cand done = cur;
        done.awaiting.erase(a.inv);
        std::uint64_t k = done.key();
        if (seen.insert(k).second) next.push_back(std::move(done));
      }

      for (const auto& [inv, ma] : cur.pending) {
        auto r = spec_->apply(cur.state, ma.first, ma.second);
        if (!r) continue;
        Cand nx = cur;
        nx.state = r->second;
        nx.pending.erase(inv);
        nx.awaiting[inv] = r->first;
        auto node = std::make_shared<WitNode>();
        node->op = LinOp{inv, ma.first, ma.second, r->first};
        node->prev = cur.wit;
        nx.wit = std::move(node);
        std::uint64_t k = nx.key();
        if (local.insert(k).second) frontier.push_back(std::move(nx));
      }
    }
  }
  cands_ = std::move(next);
  dedup();
  return alive();
}

std::uint64_t LinMonitor::digest() const {
  std::vector<std::uint64_t> keys;
  keys.reserve(cands_.size());
  for (const Cand& c : cands_) keys.push_back(c.key());
  std::sort(keys.begin(), keys.end());
  std::uint64_t h = 0x11a7ull;
  for (std::uint64_t k : keys) h = hash_combine(h, k);
  return h;
}

std::optional<std::vector<LinOp>> LinMonitor::witness() const {
  if (cands_.empty()) return std::nullopt;
  std::vector<LinOp> ops;
  for (auto node = cands_.front().wit; node; node = node->prev) ops.push_back(node->op);
  std::reverse(ops.begin(), ops.end());
  return ops;
}

LinVerdict check_linearizable(const History& h, const SeqSpec& spec,
                              std::size_t max_invocations) {
  if (!history_well_formed(h)) fail(Err::MalformedHistory, "history is not well-formed");
  std::size_t invocations = 0;
  for (const Action& a : h)
    if (a.is_call()) ++invocations;
  LinVerdict v;
  if (invocations > max_invocations) {
    v.status = LinVerdict::Status::BoundExceeded;
    return v;
  }
  LinMonitor mon(&spec);
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!mon.on_action(h[i])) {
      v.status = LinVerdict::Status::NotLinearizable;
      v.refuted_at = i;
      return v;
    }
  }
  v.status = LinVerdict::Status::Linearizable;
  v.witness = lin_ops_to_history(*mon.witness());
  return v;
}

}  // namespace sim
