#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sim/mp/trace.hpp"

namespace sim::mp {

// Invocation scripts, one per client; each entry is (method, argument).
struct Workload {
  std::vector<std::vector<std::pair<std::string, Value>>> scripts;

  static Workload for_clients(int m) {
    Workload w;
    w.scripts.resize(static_cast<std::size_t>(m));
    return w;
  }
  Workload& add(int client, std::string method, Value arg = {}) {
    scripts.at(static_cast<std::size_t>(client)).emplace_back(std::move(method), std::move(arg));
    return *this;
  }
  std::size_t invocations() const {
    std::size_t n = 0;
    for (const auto& s : scripts) n += s.size();
    return n;
  }
  std::string str() const;
  static Workload parse(const std::string& text, int m);  // throws ParseError
};

struct CrashEvent {
  Pid pid = 0;
  int at_step = 0;
};

// Scheduler choice point: candidate steps plus the subset that a
// deadline-respecting scheduler must pick from (overdue deliveries).
class MpScheduler {
 public:
  virtual ~MpScheduler() = default;
  virtual std::string name() const = 0;
  // Returns an index into `choices`, or nullopt to stop the run.
  virtual std::optional<std::size_t> pick(const MpGlobalState& g,
                                          const std::vector<MpStep>& choices,
                                          const std::vector<std::size_t>& forced,
                                          Rng& rng) = 0;
  // Whether the run loop should compute forced (overdue) deliveries.
  virtual bool respects_deadline() const { return true; }
};

// Uniformly random among candidates, except overdue deliveries take
// priority; satisfies the bounded-delivery contract.
std::unique_ptr<MpScheduler> make_fair_random_scheduler();

// Cycles through processes; per process prefers Return over Call over
// delivering everything outstanding. Deterministic.
std::unique_ptr<MpScheduler> make_round_robin_scheduler();

struct RunOptions {
  std::uint64_t seed = 1;
  int budget = 10000;
  // Delivery deadline D in steps of the destination; 0 means 4*(m+n).
  int deadline = 0;
  bool dedupe = true;
  std::vector<CrashEvent> crashes;
};

struct RunResult {
  ExecutionTrace trace;
  MpGlobalState final_state;
  // True iff every workload invocation was called and returned.
  bool completed = false;
  int steps_taken = 0;
};

RunResult run(const MpImplementation& impl, MpScheduler& sched, const Workload& workload,
              const RunOptions& opts);

// Applies an explicit step sequence (adversarial schedules, tests).
// Digests in the returned trace are computed, not checked.
RunResult run_scripted(const MpImplementation& impl, const std::vector<MpStep>& steps,
                       const std::vector<CrashEvent>& crashes = {}, bool dedupe = true);

}  // namespace sim::mp
