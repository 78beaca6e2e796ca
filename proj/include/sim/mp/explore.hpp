#pragma once

#include <map>
#include <set>

#include "sim/linearization.hpp"
#include "sim/mp/run.hpp"

namespace sim::mp {

struct ExploreOptions {
  int max_depth = 30;
  std::size_t max_states = 2000000;
  bool dedupe = true;
  // Received-set size cap per internal step (0 = unlimited). Defaults to
  // one-at-a-time delivery: deltas fold over the received set in uid order,
  // so a batch delivery reaches the same state as consecutive singleton
  // deliveries and singleton schedules cover all histories.
  std::size_t max_recv = 1;
  std::vector<Pid> crashed;        // crashed before the first step
  const SeqSpec* spec = nullptr;   // when set, monitor linearizability online
};

struct ExploreResult {
  std::size_t states = 0;
  std::size_t edges = 0;
  std::size_t terminals = 0;       // states with no enabled progress
  int depth_reached = 0;
  bool complete = false;           // frontier exhausted within all bounds
  bool state_budget_hit = false;   // stopped early at max_states
  std::vector<std::size_t> states_per_depth;

  bool all_linearizable = true;
  std::optional<ExecutionTrace> violation;  // schedule reaching a bad history
  std::optional<History> violating_history;

  // Return values observed per invocation id across all schedules.
  std::map<InvId, std::set<Value>> returns_seen;
  // True iff some state had a return step enabled.
  bool any_return_enabled = false;
};

// Exhaustive breadth-first enumeration of all schedules of the workload
// up to the depth bound, folding states by digest. Every call/return edge
// feeds the linearizability monitor when a spec is given; exploration
// stops early at the first non-linearizable history.
ExploreResult explore(const MpImplementation& impl, const Workload& workload,
                      const ExploreOptions& opts);

}  // namespace sim::mp
