#pragma once

#include "sim/action.hpp"
#include "sim/seq_spec.hpp"

namespace sim::testing {

// Brute-force linearizability oracle, independent of the production
// checker: enumerates completions (which pending calls take effect) and
// all order-respecting permutations, replaying each through the spec.
// Exponential; only for small histories in tests.
bool brute_linearizable(const History& h, const SeqSpec& spec);

// All well-formed histories over the given call alphabet with at most
// max_ops invocations, each op either completed or left pending, with
// every interleaving of events. Returns may only carry values the spec
// could produce (replay determines them), so histories are generated by
// choosing, per step, to start a new op or to return a started one with
// an arbitrary value from the domain.
std::vector<History> enumerate_histories(const SeqSpec& spec, int value_domain, int max_ops,
                                         std::size_t cap);

}  // namespace sim::testing
