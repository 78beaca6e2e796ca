#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sim/mp/state.hpp"

namespace sim::mp {

// Record of one applied transition, sufficient to replay it.
struct MpStep {
  enum class Rule { Call, Ret, Internal };
  Rule rule = Rule::Internal;
  Pid pid = 0;
  Action action;          // Call / Ret steps
  std::vector<Uid> recv;  // Internal steps, sorted

  std::string label() const;  // "call[1]write(5)" / "ret[1]ok" / "-"
  std::string recv_str() const;  // "0.1,2.0" / "-"
};

// A client invokes a method: requires no pending invocation and a defined
// transition; sends are appended to the client's pool.
MpGlobalState step_call(const MpImplementation& impl, const MpGlobalState& g, Pid i,
                        const Action& call);

// A client returns from the pending invocation; the returned value is the
// unique one its transition function accepts in the current state.
std::pair<MpGlobalState, Action> step_return(const MpImplementation& impl,
                                             const MpGlobalState& g, Pid i);

// A process consumes a set of previously sent messages addressed to it.
// `dedupe` additionally records the uids as delivered (duplicate
// suppression bookkeeping used by the enumeration below).
MpGlobalState step_internal(const MpImplementation& impl, const MpGlobalState& g, Pid j,
                            const std::vector<Uid>& recv, bool dedupe = true);

// Non-throwing internal step over already-resolved messages (borrowed from
// g, sorted by uid, addressed to j): nullopt when the transition function
// is undefined on the set. Hot path for explorers.
std::optional<MpGlobalState> try_deliver(const MpImplementation& impl, const MpGlobalState& g,
                                         Pid j, const std::vector<const Message*>& msgs,
                                         bool dedupe = true);

// Applies a recorded step; returns the successor state.
MpGlobalState apply_step(const MpImplementation& impl, const MpGlobalState& g,
                         const MpStep& step, bool dedupe = true);

struct EnabledInternal {
  Pid pid = 0;
  std::vector<Uid> recv;
};

struct EnabledSteps {
  // Clients able to accept a new invocation now (not pending, not crashed).
  std::vector<Pid> callable;
  // Clients whose transition function permits a return, with the value.
  std::vector<std::pair<Pid, Value>> returnable;
  // Internal steps with non-empty received sets. When enumerated with
  // dedupe=true, already-delivered uids are excluded and subsets are
  // enumerated over the remainder.
  std::vector<EnabledInternal> internals;
};

struct EnumOptions {
  bool dedupe = true;
  // Cap on enumerated subset size per internal step (0 = no cap).
  std::size_t max_recv = 0;
  // Include the empty received set whenever the transition is defined on
  // it (empty deliveries are legal steps; explorers prune no-op edges).
  bool include_empty_recv = true;
};

EnabledSteps enabled_steps(const MpImplementation& impl, const MpGlobalState& g,
                           const EnumOptions& opts = {});

// Messages addressed to j that are deliverable now: filtered to those the
// transition function accepts together (per-uid when dedupe) — helper for
// schedulers that deliver everything available.
std::vector<Uid> undelivered_to(const MpGlobalState& g, Pid j);

}  // namespace sim::mp
