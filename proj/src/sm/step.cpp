#include "sim/sm/step.hpp"

#include "sim/error.hpp"

namespace sim::sm {

std::string SmStepRecord::tag_name() const {
  switch (tag) {
    case Tag::Call: return "CALL";
    case Tag::Ret: return "RET";
    case Tag::Read: return "SMR";
    case Tag::Write: return "SMW";
    case Tag::Local: return "SML";
  }
  fail(Err::Internal, "bad tag");
}

SmStepRecord::Tag SmStepRecord::parse_tag(const std::string& s) {
  if (s == "CALL") return Tag::Call;
  if (s == "RET") return Tag::Ret;
  if (s == "SMR") return Tag::Read;
  if (s == "SMW") return Tag::Write;
  if (s == "SML") return Tag::Local;
  fail(Err::ParseError, "unknown step tag " + s);
}

std::string SmStepRecord::label() const {
  if (tag == Tag::Call || tag == Tag::Ret) return action.label();
  return "-";
}

static void require_alive(const SmGlobalState& g, Pid p) {
  if (g.crashed(p)) fail(Err::Crashed, "process " + std::to_string(p) + " has crashed");
}

SmStepRecord sm_call(SmGlobalState& g, Pid p, const Action& call) {
  require_alive(g, p);
  if (!call.is_call()) fail(Err::Internal, "sm_call needs a call action");
  if (g.pending(p))
    fail(Err::PendingInvocation, "process " + std::to_string(p) + " already has a pending call");
  SmMachine& m = g.machine(p);
  if (!m.idle()) fail(Err::PendingInvocation, "machine " + std::to_string(p) + " is mid-method");
  m.on_call(call);  // may reject
  g.set_pending(p, call.inv);
  SmStepRecord rec;
  rec.tag = SmStepRecord::Tag::Call;
  rec.pid = p;
  rec.action = call;
  return rec;
}

SmStepRecord sm_return(SmGlobalState& g, Pid p) {
  require_alive(g, p);
  SmMachine& m = g.machine(p);
  auto y = m.ret_value();
  if (!y) fail(Err::ReturnNotEnabled, "process " + std::to_string(p) + " is not at a return point");
  auto inv = g.pending(p);
  if (!inv) fail(Err::Internal, "return point without a pending invocation");
  m.on_ret();
  g.set_pending(p, std::nullopt);
  SmStepRecord rec;
  rec.tag = SmStepRecord::Tag::Ret;
  rec.pid = p;
  rec.action = Action::ret(*inv, *y);
  return rec;
}

SmStepRecord sm_step(SmGlobalState& g, Pid p) {
  require_alive(g, p);
  SmMachine& m = g.machine(p);
  if (m.idle() || m.ret_value())
    fail(Err::NoEnabledStatement, "process " + std::to_string(p) + " has no enabled statement");
  Shared sh(g.regs(), p);
  Value note = m.step(sh);
  SmStepRecord rec;
  rec.pid = p;
  rec.note = std::move(note);
  if (sh.accesses() == 0) {
    rec.tag = SmStepRecord::Tag::Local;
  } else {
    rec.tag = sh.wrote() ? SmStepRecord::Tag::Write : SmStepRecord::Tag::Read;
    rec.reg = g.regs().name(sh.touched());
  }
  return rec;
}

SmEnabled sm_enabled(const SmGlobalState& g, Pid p) {
  if (g.crashed(p)) return SmEnabled::None;
  const SmMachine& m = g.machine(p);
  if (m.ret_value()) return SmEnabled::Ret;
  if (m.idle()) return SmEnabled::Call;
  return SmEnabled::Stmt;
}

}  // namespace sim::sm
