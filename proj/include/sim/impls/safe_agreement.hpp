#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sim/sm/explore.hpp"
#include "sim/sm/state.hpp"

namespace sim::impls {

// Safe agreement from single-writer registers. One object for m
// processes owns registers <prefix>val[p] (proposal, init nil),
// <prefix>id[p] (participant id, init nil) and <prefix>set[p]
// (participant set as a sorted id list, init []), each written only by
// process p. propose publishes a value and double-collects the id
// registers until stable; resolve decides once the smallest published
// set is covered by every member's set, otherwise reports "unresolved"
// (nil).

// Stepwise propose/resolve sessions over one object, embeddable in any
// SmMachine. Each step call performs at most one shared access; free
// reads of the caller's own registers are folded in.
class SaSession {
 public:
  SaSession() = default;
  SaSession(std::string prefix, int m, sm::Pid self);

  // Advances the propose by one statement; true once the participant
  // set has been written (the final statement).
  bool step_propose(sm::Shared& sh, const Value& proposal);
  // Advances the resolve by one statement; true when done, with `out`
  // the decided value or nil for "unresolved". A finished session may
  // resolve again.
  bool step_resolve(sm::Shared& sh, Value& out);

  bool propose_started() const { return pc_ != Pc::Idle; }
  bool propose_done() const { return pc_ == Pc::Done; }
  bool resolve_active() const { return rpc_ != Rpc::Idle; }
  // Double-collect rounds of the (possibly still running) propose.
  int iterations() const { return iters_; }

  std::uint64_t digest() const;

 private:
  enum class Pc { Idle, WriteVal, WriteId, Collect1, Collect2, Compare, WriteSet, Done };
  enum class Rpc { Idle, ReadSets, Decide, ReadVal };

  void bind(sm::Shared& sh);

  std::string prefix_;
  int m_ = 0;
  sm::Pid self_ = 0;
  bool bound_ = false;
  std::vector<sm::RegId> val_, id_, set_;

  Pc pc_ = Pc::Idle;
  int k_ = 0;
  int iters_ = 0;
  Value::List c1_, c2_;

  Rpc rpc_ = Rpc::Idle;
  int rk_ = 0;
  Value::List sets_;
  int min_ = -1;
};

// The decision currently supported by the registers: nil while
// unresolved. Missing registers count as unwritten.
Value sa_resolve_now(const sm::RegFile& regs, const std::string& prefix, int m);

// Every pair of written participant sets is containment-comparable.
bool sa_sets_comparable(const sm::RegFile& regs, const std::string& prefix, int m);

// Standalone program: methods propose(v) -> "done" and resolve() ->
// value-or-nil, sharing one object among all m processes.
sm::SmProgram make_sa_program(int m);

// Exploration monitor for the standalone program: agreement of non-nil
// resolve returns, validity against propose arguments seen on the path,
// set comparability after every set write, and the <= m double-collect
// bound.
std::unique_ptr<sm::SmMonitor> make_sa_monitor(int m);

// Terminal-state check: drives a fresh resolve for every live process
// that completed its propose. When no propose can still be pending the
// returns must be non-nil; all non-nil returns must agree with each
// other and with the register decision. Returns an error description.
std::optional<std::string> sa_check_terminal_liveness(const sm::SmGlobalState& g, int m);

}  // namespace sim::impls
