#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sim/action.hpp"
#include "sim/value.hpp"

namespace sim {

// A sequential object specification: deterministic apply over an abstract
// value. apply returns nullopt for unknown methods or ill-typed arguments.
struct SeqSpec {
  std::string name;
  Value init;
  std::function<std::optional<std::pair<Value, Value>>(const Value& state, const std::string& method,
                                                       const Value& arg)>
      apply;  // -> (return value, next state)

  // Method prototypes, used by explorers to enumerate bounded call actions.
  struct Method {
    std::string name;
    bool takes_arg = false;
  };
  std::vector<Method> methods;

  // Convenience: apply or fail loudly.
  std::pair<Value, Value> apply_or_throw(const Value& state, const std::string& method,
                                         const Value& arg) const;

  // Replays a sequential history from init; false if some step is illegal
  // or a recorded return value disagrees with the spec.
  bool accepts(const History& sequential) const;
};

// write(v)/read(); read returns the current value, write returns ok.
SeqSpec make_mw_register(Value init);

// writeMax(v)/readMax() over integers.
SeqSpec make_max_register(std::int64_t init);

// increment()/read() over integers, starting at 0.
SeqSpec make_counter();

// update([i,v])/scan(); scan returns the component list.
SeqSpec make_snapshot(int width, Value init);

// Registry lookup: "mw_register(0)", "max_register(0)", "counter",
// "snapshot(2,0)". Throws ConfigError on unknown kinds.
SeqSpec make_spec(const std::string& kind);

// All call actions over the spec's methods with integer arguments drawn
// from [0, value_domain); used by bounded explorers.
std::vector<std::pair<std::string, Value>> spec_call_alphabet(const SeqSpec& spec,
                                                              int value_domain);

}  // namespace sim
