#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sim/mp/step.hpp"

namespace sim::mp {

struct TraceStep {
  MpStep step;
  std::uint64_t digest = 0;  // digest of the state after the step
};

struct ExecutionTrace {
  int m = 0;
  int n = 0;
  std::uint64_t seed = 0;
  // Free-form metadata carried in `# key value` comment lines (scenario
  // name, workload, crash script) so a trace file is self-describing.
  std::map<std::string, std::string> meta;
  std::vector<TraceStep> steps;

  History history() const;
  std::string to_text() const;
  static ExecutionTrace from_text(const std::string& text);  // throws ParseError
};

// Re-applies every step from the initial state, checking each recorded
// post-state digest; throws DigestMismatch on divergence. Returns the
// final state.
MpGlobalState replay_trace(const MpImplementation& impl, const ExecutionTrace& trace,
                           bool check_digests = true);

// Checks bounded delivery along a finite trace: every message is delivered
// to its destination within `window` steps of its destination (counting
// only steps where the destination moves), unless the trace ends or the
// destination crashes first. Returns uids violating the window.
std::vector<Uid> audit_delivery(const MpImplementation& impl, const ExecutionTrace& trace,
                                int window);

}  // namespace sim::mp
