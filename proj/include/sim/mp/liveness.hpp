#pragma once

#include "sim/mp/run.hpp"

namespace sim::mp {

// All subsets of at most f servers, as crash scripts taking effect at the
// given step.
std::vector<std::vector<CrashEvent>> server_crash_subsets(const MpImplementation& impl, int f,
                                                          int at_step = 0);

struct LivenessReport {
  int runs = 0;
  int completed = 0;       // runs where every workload invocation returned
  int with_return = 0;     // runs where at least one return occurred
  std::optional<std::uint64_t> failing_seed;
  std::vector<CrashEvent> failing_crashes;

  bool all_completed() const { return completed == runs; }
  bool all_progressed() const { return with_return == runs; }
};

// Drives `seeds` fair-random runs per crash script and reports how many
// completed. The bounded surrogate for progress guarantees: under fair
// scheduling with a delivery deadline, pending invocations of live
// clients must finish within the budget.
LivenessReport check_fair_completion(const MpImplementation& impl, const Workload& workload,
                                     const std::vector<std::vector<CrashEvent>>& crash_sets,
                                     int seeds, RunOptions base);

}  // namespace sim::mp
