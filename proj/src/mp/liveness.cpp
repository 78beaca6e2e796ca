#include "sim/mp/liveness.hpp"

namespace sim::mp {

std::vector<std::vector<CrashEvent>> server_crash_subsets(const MpImplementation& impl, int f,
                                                          int at_step) {
  std::vector<std::vector<CrashEvent>> out;
  const int n = impl.servers;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) > f) continue;
    std::vector<CrashEvent> crashes;
    for (int s = 0; s < n; ++s) {
      if (mask & (1u << s)) crashes.push_back(CrashEvent{impl.clients + s, at_step});
    }
    out.push_back(std::move(crashes));
  }
  return out;
}

LivenessReport check_fair_completion(const MpImplementation& impl, const Workload& workload,
                                     const std::vector<std::vector<CrashEvent>>& crash_sets,
                                     int seeds, RunOptions base) {
  LivenessReport rep;
  for (const auto& crashes : crash_sets) {
    for (int s = 0; s < seeds; ++s) {
      RunOptions opts = base;
      opts.seed = base.seed + static_cast<std::uint64_t>(s);
      opts.crashes = crashes;
      auto sched = make_fair_random_scheduler();
      RunResult r = run(impl, *sched, workload, opts);
      ++rep.runs;
      if (r.completed) ++rep.completed;
      bool any_ret = false;
      for (const TraceStep& ts : r.trace.steps) {
        if (ts.step.rule == MpStep::Rule::Ret) any_ret = true;
      }
      if (any_ret) ++rep.with_return;
      if ((!r.completed || !any_ret) && !rep.failing_seed) {
        rep.failing_seed = opts.seed;
        rep.failing_crashes = crashes;
      }
    }
  }
  return rep;
}

}  // namespace sim::mp
