#include "sim/mp/explore.hpp"

#include <algorithm>
#include <deque>
#include <unordered_map>

#include "sim/error.hpp"

namespace sim::mp {

namespace {

struct Node {
  MpGlobalState g;
  std::vector<std::size_t> cursor;
  std::shared_ptr<const LinMonitor> monitor;
  int depth = 0;
  Digest128 key;
};

Digest128 node_key(const Node& n) {
  Digest128 d{n.g.digest(), 0x6578706cull};
  for (std::size_t c : n.cursor) d = digest128_combine(d, c);
  if (n.monitor) d = digest128_combine(d, n.monitor->digest());
  return d;
}

ExploreResult explore_impl(const MpImplementation& impl, const Workload& workload,
                           const ExploreOptions& opts, bool track_parents) {
  ExploreResult res;

  MpGlobalState g0(impl.clients, impl.servers, impl.initial_state);
  for (Pid p : opts.crashed) {
    ProcEntry e = g0.entry(p);
    e.crashed = true;
    g0 = g0.with_entry(p, std::move(e));
  }

  Node root;
  root.g = g0;
  root.cursor.assign(static_cast<std::size_t>(impl.clients), 0);
  if (opts.spec) root.monitor = std::make_shared<const LinMonitor>(opts.spec);
  root.key = node_key(root);

  struct Edge {
    Digest128 parent;
    MpStep step;
  };
  std::unordered_map<Digest128, int, Digest128Hash> visited;
  std::unordered_map<Digest128, Edge, Digest128Hash> parents;
  visited.reserve(1 << 20);
  std::deque<Node> queue;

  const Digest128 root_key = root.key;
  visited.emplace(root_key, 0);
  queue.push_back(std::move(root));
  res.states = 1;
  bool truncated = false;
  bool violated = false;

  auto rebuild_trace = [&](const Digest128& leaf, const MpStep& last) {
    std::vector<MpStep> steps{last};
    Digest128 cur = leaf;
    while (!(cur == root_key)) {
      auto it = parents.find(cur);
      if (it == parents.end()) break;
      steps.push_back(it->second.step);
      cur = it->second.parent;
    }
    std::reverse(steps.begin(), steps.end());
    RunResult rr = run_scripted(impl, steps, {}, opts.dedupe);
    if (!opts.crashed.empty()) {
      std::string cs;
      for (Pid p : opts.crashed) {
        if (!cs.empty()) cs += ',';
        cs += std::to_string(p) + "@0";
      }
      rr.trace.meta["crash"] = cs;
    }
    return rr.trace;
  };

  while (!queue.empty() && !violated) {
    Node node = std::move(queue.front());
    queue.pop_front();
    res.depth_reached = std::max(res.depth_reached, node.depth);

    const Digest128 key = node.key;
    const std::uint64_t sem = node.g.semantic_digest();
    const bool at_cutoff = node.depth >= opts.max_depth;

    // Inserts one successor; returns false on a linearizability violation.
    auto emit = [&](MpGlobalState&& g2, const MpStep& recorded) -> bool {
      Node child;
      child.g = std::move(g2);
      child.cursor = node.cursor;
      child.monitor = node.monitor;
      child.depth = node.depth + 1;
      if (recorded.rule == MpStep::Rule::Call)
        child.cursor[static_cast<std::size_t>(recorded.pid)]++;
      ++res.edges;

      if (recorded.rule == MpStep::Rule::Ret)
        res.returns_seen[recorded.action.inv].insert(recorded.action.value);

      if (child.monitor && recorded.rule != MpStep::Rule::Internal) {
        auto m2 = std::make_shared<LinMonitor>(*child.monitor);
        if (!m2->on_action(recorded.action)) {
          res.all_linearizable = false;
          if (track_parents) {
            ExecutionTrace t = rebuild_trace(key, recorded);
            res.violating_history = t.history();
            res.violation = std::move(t);
          }
          return false;
        }
        child.monitor = std::move(m2);
      }

      child.key = node_key(child);
      auto [it, inserted] = visited.emplace(child.key, child.depth);
      if (!inserted) return true;
      if (track_parents) parents.emplace(child.key, Edge{key, recorded});
      ++res.states;
      while (res.states_per_depth.size() <= static_cast<std::size_t>(child.depth))
        res.states_per_depth.push_back(0);
      res.states_per_depth[static_cast<std::size_t>(child.depth)]++;
      if (res.states >= opts.max_states) {
        res.state_budget_hit = true;
        return false;
      }
      queue.push_back(std::move(child));
      return true;
    };

    // Visible steps: returns and workload calls.
    bool any_candidate = false;
    for (Pid p = 0; p < impl.clients && !violated; ++p) {
      const ProcEntry& e = node.g.entry(p);
      if (e.crashed) continue;
      auto ci = static_cast<std::size_t>(p);
      if (e.pending_inv && impl.ret_enabled(p, e.state)) {
        res.any_return_enabled = true;
        any_candidate = true;
        if (!at_cutoff) {
          MpStep rec;
          rec.rule = MpStep::Rule::Ret;
          rec.pid = p;
          auto [g2, ret] = step_return(impl, node.g, p);
          rec.action = ret;
          if (!emit(std::move(g2), rec)) violated = !res.state_budget_hit;
        }
      }
      if (!e.pending_inv && !impl.pending(p, e.state) && ci < workload.scripts.size() &&
          node.cursor[ci] < workload.scripts[ci].size()) {
        const auto& [method, arg] = workload.scripts[ci][node.cursor[ci]];
        MpStep rec;
        rec.rule = MpStep::Rule::Call;
        rec.pid = p;
        rec.action = Action::call(
            static_cast<InvId>(p) * 100 + static_cast<InvId>(node.cursor[ci]) + 1, method, arg);
        if (impl.delta(p, e.state, DeltaInput::call(rec.action))) {
          any_candidate = true;
          if (!at_cutoff) {
            MpGlobalState g2 = step_call(impl, node.g, p, rec.action);
            if (!emit(std::move(g2), rec)) violated = !res.state_budget_hit;
          }
        }
      }
    }

    // Internal steps. One-at-a-time delivery is the default: deltas fold
    // over the received set in uid order, so batch deliveries reach states
    // singleton schedules also reach.
    if (opts.max_recv == 1) {
      std::vector<const Message*> one(1);
      for (Pid p = 0; p < impl.total() && !violated; ++p) {
        const ProcEntry& e = node.g.entry(p);
        if (e.crashed) continue;
        for (const Message* m : node.g.addressed_to(p)) {
          if (opts.dedupe && e.was_delivered(m->uid)) continue;
          if (at_cutoff && any_candidate) break;
          one[0] = m;
          std::optional<MpGlobalState> g2 = try_deliver(impl, node.g, p, one, opts.dedupe);
          if (!g2) continue;
          any_candidate = true;
          if (at_cutoff) break;
          // Deliveries that change nothing a process can observe
          // (stale-phase messages) commute with every later step, so
          // schedules without them cover the same histories; the message
          // stays deliverable later, when it might matter.
          if (g2->semantic_digest() == sem) continue;
          MpStep rec;
          rec.rule = MpStep::Rule::Internal;
          rec.pid = p;
          rec.recv = {m->uid};
          if (!emit(*std::move(g2), rec)) {
            violated = !res.state_budget_hit;
            break;
          }
        }
      }
    } else {
      EnumOptions eo;
      eo.dedupe = opts.dedupe;
      eo.max_recv = opts.max_recv;
      eo.include_empty_recv = false;  // empty deliveries never change a state
      for (EnabledInternal& ei : enabled_steps(impl, node.g, eo).internals) {
        any_candidate = true;
        if (at_cutoff || violated) break;
        MpStep rec;
        rec.rule = MpStep::Rule::Internal;
        rec.pid = ei.pid;
        rec.recv = std::move(ei.recv);
        MpGlobalState g2 = apply_step(impl, node.g, rec, opts.dedupe);
        if (g2.semantic_digest() == sem) continue;
        if (!emit(std::move(g2), rec)) {
          violated = !res.state_budget_hit;
          break;
        }
      }
    }

    if (!any_candidate) ++res.terminals;
    if (at_cutoff && any_candidate) truncated = true;
    if (res.state_budget_hit) return res;
  }

  res.complete = !truncated && !violated && !res.state_budget_hit;
  return res;
}

}  // namespace

ExploreResult explore(const MpImplementation& impl, const Workload& workload,
                      const ExploreOptions& opts) {
  ExploreResult res = explore_impl(impl, workload, opts, false);
  if (!res.all_linearizable) {
    // Deterministic rerun with parent tracking reconstructs the violating
    // schedule; the common all-clear pass stays lean.
    res = explore_impl(impl, workload, opts, true);
  }
  return res;
}

}  // namespace sim::mp
