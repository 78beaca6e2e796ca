#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sim/mp/run.hpp"
#include "sim/sm/trace.hpp"

namespace sim::sm {

// Invocation scripts and crash events share the message-passing shapes.
using mp::CrashEvent;
using mp::Workload;

// Scheduler choice point: each live process offers at most one
// transition (machines are deterministic), so a choice is just a pid
// plus what kind of transition it would take.
struct SmChoice {
  Pid pid = 0;
  SmEnabled kind = SmEnabled::Stmt;
};

class SmScheduler {
 public:
  virtual ~SmScheduler() = default;
  virtual std::string name() const = 0;
  // Returns an index into `choices`, or nullopt to stop the run.
  virtual std::optional<std::size_t> pick(const SmGlobalState& g,
                                          const std::vector<SmChoice>& choices, Rng& rng) = 0;
};

// Uniformly random among enabled processes; fair with probability 1.
std::unique_ptr<SmScheduler> make_sm_fair_scheduler();

// Cycles through processes in pid order. Deterministic.
std::unique_ptr<SmScheduler> make_sm_round_robin_scheduler();

struct SmRunOptions {
  std::uint64_t seed = 1;
  int budget = 5000;
  std::vector<CrashEvent> crashes;
};

struct SmRunResult {
  SmExecutionTrace trace;
  SmGlobalState final_state;
  // True iff every invocation of a non-crashed process returned.
  bool completed = false;
  int steps_taken = 0;
};

SmRunResult sm_run(const SmProgram& program, SmScheduler& sched, const Workload& workload,
                   const SmRunOptions& opts);

// Applies an explicit process schedule; what each pid does (call with
// its next workload entry, return, or statement) is determined by its
// machine state. Digests in the returned trace are computed.
SmRunResult sm_run_scripted(const SmProgram& program, const std::vector<Pid>& schedule,
                            const Workload& workload, const std::vector<CrashEvent>& crashes = {});

}  // namespace sim::sm
