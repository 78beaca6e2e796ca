#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sim/sm/step.hpp"

namespace sim::sm {

struct SmTraceStep {
  SmStepRecord rec;
  std::uint64_t digest = 0;  // state digest after the step
};

// A recorded shared-memory execution: the schedule plus per-step state
// digests. Machines are deterministic, so the schedule determines the
// run; digests pin it down for replay verification. Monitor annotations
// are runtime-only and are regenerated on replay.
struct SmExecutionTrace {
  int m = 0;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> meta;
  std::vector<SmTraceStep> steps;

  History history() const;
  std::string to_text() const;
  static SmExecutionTrace from_text(const std::string& text);
};

// Called after each replayed step with the resulting state, the
// re-executed record (with live annotation) and the step index.
using SmReplayObserver =
    std::function<void(const SmGlobalState&, const SmStepRecord&, std::size_t)>;

// Re-executes the trace against fresh machines, verifying tags,
// registers, actions and (optionally) post-state digests; any divergence
// raises DigestMismatch naming the step. Crash meta ("pid@step,...") is
// honored. Returns the final state.
SmGlobalState sm_replay(const SmProgram& program, const SmExecutionTrace& trace,
                        bool check_digests = true, const SmReplayObserver& observe = {});

// Parses "pid@step,pid@step" crash annotations.
std::vector<std::pair<Pid, int>> parse_sm_crash_meta(const std::string& s);

}  // namespace sim::sm
