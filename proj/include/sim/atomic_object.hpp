#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sim/action.hpp"
#include "sim/seq_spec.hpp"

namespace sim {

// Linearization-point label of the atomic object.
struct LinPoint {
  InvId inv = 0;

  friend bool operator==(const LinPoint& a, const LinPoint& b) { return a.inv == b.inv; }
};

using AtomicLabel = std::variant<Action, LinPoint>;

std::string atomic_label_str(const AtomicLabel& l);

// State of the atomic object over a sequential specification: the history
// so far plus a linearization of it, with the replayed abstract value
// cached alongside.
struct AtomicObjectState {
  History h;
  History hs;
  Value abs;

  std::uint64_t digest() const;
};

AtomicObjectState atomic_initial(const SeqSpec& spec);

// One transition of the atomic object. Calls append to h; returns require
// the matching return action to occur in hs; lin(k) appends the call and
// return of invocation k to hs, with the return value computed by the
// spec. Throws IllegalAtomicStep naming the violated case.
AtomicObjectState atomic_step(const AtomicObjectState& s, const AtomicLabel& label,
                              const SeqSpec& spec);

struct AtomicEnumOptions {
  int value_domain = 3;
  std::size_t max_invocations = 6;
  std::size_t max_pending = 2;
};

// All labels enabled in s, under the enumeration bounds. Fresh invocation
// ids are assigned sequentially, so the enumeration is canonical.
std::vector<AtomicLabel> enumerate_atomic_steps(const AtomicObjectState& s, const SeqSpec& spec,
                                                const AtomicEnumOptions& opts);

}  // namespace sim
