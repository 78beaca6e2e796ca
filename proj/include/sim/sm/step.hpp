#pragma once

#include <string>

#include "sim/sm/state.hpp"

namespace sim::sm {

// Record of one applied shared-memory transition. Tags: CALL/RET for the
// visible actions, SMR/SMW for statements whose shared access is a read
// or write, SML for pure-local statements.
struct SmStepRecord {
  enum class Tag { Call, Ret, Read, Write, Local };

  Tag tag = Tag::Local;
  Pid pid = 0;
  Action action;    // Call / Ret
  std::string reg;  // Read / Write
  Value note;       // program-supplied monitor annotation (not serialized)

  std::string tag_name() const;
  std::string label() const;  // action label, or "-" for statements

  static Tag parse_tag(const std::string& s);
};

// Visible call transition: hands the invocation to p's machine.
SmStepRecord sm_call(SmGlobalState& g, Pid p, const Action& call);

// Visible return transition; the machine must be at its return point.
SmStepRecord sm_return(SmGlobalState& g, Pid p);

// Executes the next indivisible statement of p's program.
SmStepRecord sm_step(SmGlobalState& g, Pid p);

// What the scheduler may do with process p right now. Call-enabledness
// additionally depends on the workload, which the caller knows.
enum class SmEnabled { None, Call, Ret, Stmt };
SmEnabled sm_enabled(const SmGlobalState& g, Pid p);

}  // namespace sim::sm
