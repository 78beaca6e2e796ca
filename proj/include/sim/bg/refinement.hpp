#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sim/bg/machine.hpp"
#include "sim/mp/state.hpp"
#include "sim/mp/trace.hpp"
#include "sim/sm/trace.hpp"

namespace sim::bg {

// The message-passing global state determined by a shared-memory state
// of a build_sm program: per client the register content — pre-applying
// the call while the initial write is outstanding, and holding the
// saved pre-return content across the return window — and per server
// the most recent agreed step. UnreachableShape when the state does not
// have the simulation's structure.
mp::MpGlobalState fwd_sim_image(const sm::SmGlobalState& s, const mp::MpImplementation& impl);

struct RefinementVerdict {
  bool ok = true;
  std::string violation;       // empty when ok
  std::size_t step_index = 0;  // offending shared-memory step
  mp::ExecutionTrace induced;  // the simulated message-passing run

  std::string describe() const;
};

// Replays the trace and checks, step by step, that the image either
// stays put or advances by exactly the message-passing step the program
// vouched for; call and return steps must map to call and return steps
// with the same actions. The verdict carries the induced trace, whose
// history equals the shared-memory history whenever the check passes.
// Replay divergence (a tampered or foreign trace) raises DigestMismatch
// as usual; only simulation failures land in the verdict.
RefinementVerdict monitor_refinement(const sm::SmExecutionTrace& trace,
                                     const mp::MpImplementation& impl);
// Same, against an explicit program (fault variants for monitor tests).
RefinementVerdict monitor_refinement(const sm::SmExecutionTrace& trace,
                                     const mp::MpImplementation& impl,
                                     const sm::SmProgram& program);

// Servers on whose current agreement step some live process is blocked
// while the registers no longer support a decision. At a quiescent
// state (live processes idle between invocations) such a step can only
// be completed by a crashed process, so the server is permanently
// stalled; there is at most one per crashed process.
std::vector<mp::Pid> bg_stalled_servers(const sm::SmGlobalState& g,
                                        const mp::MpImplementation& impl);

}  // namespace sim::bg
