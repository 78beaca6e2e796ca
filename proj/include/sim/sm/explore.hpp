#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sim/sm/run.hpp"

namespace sim::sm {

// Per-path property monitor carried through exploration. Its digest is
// part of the visited key, so state folding never merges paths with
// different monitor verdicts pending.
class SmMonitor {
 public:
  virtual ~SmMonitor() = default;
  virtual std::unique_ptr<SmMonitor> clone() const = 0;
  virtual std::uint64_t digest() const = 0;
  // Observes one applied step and the state it produced; false reports a
  // violation on this path.
  virtual bool on_step(const SmGlobalState& g, const SmStepRecord& rec) = 0;
  virtual std::string describe_violation() const = 0;
};

struct SmExploreOptions {
  int max_depth = 60;
  std::size_t max_states = 2'000'000;
  std::vector<Pid> crashed;  // processes that never take a step
  std::function<std::unique_ptr<SmMonitor>()> make_monitor;
  // Invoked at states with no enabled transition; returns a violation
  // description, or nullopt when the terminal state is acceptable.
  std::function<std::optional<std::string>(const SmGlobalState&, const SmMonitor*)> on_terminal;
};

struct SmExploreResult {
  std::size_t states = 0;
  std::size_t edges = 0;
  std::size_t terminals = 0;
  int depth_reached = 0;
  bool complete = false;         // no depth cutoff hit
  bool state_budget_hit = false;
  bool ok = true;
  std::string violation;
  std::vector<Pid> violating_schedule;  // schedule reaching the violation
  // Return values observed per invocation id across all paths.
  std::map<InvId, std::set<Value>> returns_seen;

  std::string summary() const;
};

// Breadth-first exploration of every schedule of the program under the
// workload, folding states by (state digest, workload cursors, monitor
// digest). Each live process contributes at most one successor per node.
SmExploreResult sm_explore(const SmProgram& program, const Workload& workload,
                           const SmExploreOptions& opts);

}  // namespace sim::sm
