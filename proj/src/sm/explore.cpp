#include "sim/sm/explore.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <unordered_map>

#include "sim/error.hpp"

namespace sim::sm {

namespace {

struct Node {
  SmGlobalState g;
  std::vector<std::size_t> next;  // workload cursor per process
  std::unique_ptr<SmMonitor> monitor;
  int depth = 0;
  Digest128 key;
};

Digest128 node_key(const SmGlobalState& g, const std::vector<std::size_t>& next,
                   const SmMonitor* monitor) {
  Digest128 d;
  d.hi = g.digest();
  d.lo = splitmix64(g.digest() ^ 0x736d6578706c6f72ull);
  for (std::size_t c : next) d = digest128_combine(d, c);
  if (monitor) d = digest128_combine(d, monitor->digest());
  return d;
}

Action next_call(const Workload& w, Pid p, std::size_t cursor) {
  const auto& [method, arg] = w.scripts[static_cast<std::size_t>(p)][cursor];
  InvId inv = static_cast<InvId>(p) * 100 + static_cast<InvId>(cursor) + 1;
  return Action::call(inv, method, arg);
}

}  // namespace

std::string SmExploreResult::summary() const {
  std::ostringstream out;
  out << "states=" << states << " edges=" << edges << " terminals=" << terminals
      << " depth=" << depth_reached << " complete=" << (complete ? "yes" : "no")
      << " ok=" << (ok ? "yes" : "no");
  return out.str();
}

SmExploreResult sm_explore(const SmProgram& program, const Workload& workload,
                           const SmExploreOptions& opts) {
  if (static_cast<int>(workload.scripts.size()) != program.processes)
    fail(Err::ConfigError, "workload process count does not match the program");
  SmExploreResult res;
  res.complete = true;

  Node root;
  root.g = SmGlobalState(program);
  for (Pid p : opts.crashed) root.g.crash(p);
  root.next.assign(static_cast<std::size_t>(program.processes), 0);
  if (opts.make_monitor) root.monitor = opts.make_monitor();
  root.key = node_key(root.g, root.next, root.monitor.get());

  std::unordered_map<Digest128, std::pair<Digest128, Pid>, Digest128Hash> parent;
  parent.emplace(root.key, std::make_pair(root.key, -1));

  auto schedule_to = [&](Digest128 key, Pid last) {
    std::vector<Pid> sched;
    if (last >= 0) sched.push_back(last);
    while (true) {
      auto it = parent.find(key);
      if (it == parent.end() || it->second.second < 0) break;
      sched.push_back(it->second.second);
      key = it->second.first;
    }
    std::reverse(sched.begin(), sched.end());
    return sched;
  };

  std::deque<Node> queue;
  queue.push_back(std::move(root));
  res.states = 1;

  while (!queue.empty()) {
    Node node = std::move(queue.front());
    queue.pop_front();
    if (node.depth > res.depth_reached) res.depth_reached = node.depth;

    bool at_cutoff = node.depth >= opts.max_depth;
    bool any_successor = false;
    for (Pid p = 0; p < node.g.processes(); ++p) {
      SmEnabled e = sm_enabled(node.g, p);
      if (e == SmEnabled::None) continue;
      std::size_t cursor = node.next[static_cast<std::size_t>(p)];
      if (e == SmEnabled::Call) {
        if (cursor >= workload.scripts[static_cast<std::size_t>(p)].size()) continue;
        const auto& [method, arg] = workload.scripts[static_cast<std::size_t>(p)][cursor];
        if (!node.g.machine(p).accepts_call(method, arg)) continue;
      }
      any_successor = true;
      if (at_cutoff) continue;

      Node child;
      child.g = node.g.clone();
      child.next = node.next;
      child.monitor = node.monitor ? node.monitor->clone() : nullptr;
      child.depth = node.depth + 1;
      SmStepRecord rec;
      switch (e) {
        case SmEnabled::Call:
          rec = sm_call(child.g, p, next_call(workload, p, cursor));
          ++child.next[static_cast<std::size_t>(p)];
          break;
        case SmEnabled::Ret:
          rec = sm_return(child.g, p);
          res.returns_seen[rec.action.inv].insert(rec.action.value);
          break;
        default:
          rec = sm_step(child.g, p);
          break;
      }
      ++res.edges;
      if (child.monitor && !child.monitor->on_step(child.g, rec)) {
        res.ok = false;
        res.violation = child.monitor->describe_violation();
        res.violating_schedule = schedule_to(node.key, p);
        return res;
      }
      child.key = node_key(child.g, child.next, child.monitor.get());
      if (!parent.emplace(child.key, std::make_pair(node.key, p)).second) continue;
      ++res.states;
      if (res.states >= opts.max_states) {
        res.state_budget_hit = true;
        res.complete = false;
        return res;
      }
      queue.push_back(std::move(child));
    }

    if (!any_successor) {
      ++res.terminals;
      if (opts.on_terminal) {
        auto bad = opts.on_terminal(node.g, node.monitor.get());
        if (bad) {
          res.ok = false;
          res.violation = *bad;
          res.violating_schedule = schedule_to(node.key, -1);
          return res;
        }
      }
    } else if (at_cutoff) {
      res.complete = false;
    }
  }
  return res;
}

}  // namespace sim::sm
