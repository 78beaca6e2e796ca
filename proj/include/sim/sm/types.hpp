#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sim/action.hpp"
#include "sim/value.hpp"

namespace sim::sm {

// Shared-memory process ids: [0, m).
using Pid = int;
using RegId = int;

// A single-writer atomic register: one declared owner may write, anyone
// may read, and each access is one indivisible step.
struct RegisterDecl {
  std::string name;
  Pid owner = 0;
  Value init;
};

class Shared;  // one-statement window onto the register file (state.hpp)

// Deterministic per-process program. One machine per process lives for
// the whole run; invocations arrive via on_call and leave via on_ret.
// Statement granularity: local computation is folded into the following
// shared access, so step() performs at most one read or write.
class SmMachine {
 public:
  virtual ~SmMachine() = default;
  virtual std::unique_ptr<SmMachine> clone() const = 0;

  // Between invocations: accepts calls, has no enabled statement.
  virtual bool idle() const = 0;
  // Whether an invocation of method(arg) would be accepted right now;
  // schedulers only offer calls that pass.
  virtual bool accepts_call(const std::string& method, const Value& arg) const = 0;
  // Set once control reaches the return point; cleared by on_ret.
  virtual std::optional<Value> ret_value() const = 0;

  // Local bookkeeping for the visible call/return transitions.
  virtual void on_call(const Action& call) = 0;  // throws when the call is rejected
  virtual void on_ret() = 0;

  // Executes the next indivisible statement. Returns a monitor
  // annotation (nil when there is none).
  virtual Value step(Shared& sh) = 0;

  virtual std::uint64_t digest() const = 0;
};

// A shared-memory program: register declarations plus a machine factory.
// Registers may also be materialized lazily by name during execution.
struct SmProgram {
  std::string name;
  int processes = 0;  // m
  std::vector<RegisterDecl> registers;
  std::function<std::unique_ptr<SmMachine>(Pid)> make_machine;
};

}  // namespace sim::sm
