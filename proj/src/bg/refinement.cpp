#include "sim/bg/refinement.hpp"

#include <utility>

#include "sim/error.hpp"
#include "sim/mp/step.hpp"

namespace sim::bg {

using mp::Message;
using mp::MpGlobalState;
using mp::MpImplementation;
using mp::MsgPool;
using mp::ProcEntry;
using mp::Uid;

namespace {

const BgMachine& bg_machine(const sm::SmGlobalState& g, sm::Pid p) {
  const auto* m = dynamic_cast<const BgMachine*>(&g.machine(p));
  if (!m) fail(Err::UnreachableShape, "process " + std::to_string(p) + " runs a foreign program");
  return *m;
}

const Value& reg_value(const sm::SmGlobalState& g, const std::string& name) {
  sm::RegId r = g.regs().find(name);
  if (r < 0) fail(Err::Internal, "missing register " + name);
  return g.regs().get(r);
}

// The [state, msgs] content determining client i's image.
Value client_image(const sm::SmGlobalState& g, const MpImplementation& impl, sm::Pid i) {
  const BgMachine& m = bg_machine(g, i);
  const Value& reg = reg_value(g, client_reg_name(i));
  if (m.before_loop()) return act_step(impl, i, reg, m.current_call());
  if (m.in_return_window()) return m.old_client();
  return reg;
}

// The [state, msgs, sn] content determining server j's image.
Value server_image(const sm::SmGlobalState& g, const MpImplementation& impl, mp::Pid j) {
  std::vector<Value> entries;
  entries.reserve(static_cast<std::size_t>(impl.clients));
  for (int i = 0; i < impl.clients; ++i) entries.push_back(reg_value(g, server_reg_name(i, j)));
  return most_recent(entries);
}

// Structural equality between a pool and a msgs register component,
// without rebuilding either.
bool pool_matches(const MsgPool& pool, const Value& msgs) {
  if (!msgs.is_list() || pool.size() != msgs.size()) return false;
  std::size_t idx = msgs.size();
  bool ok = true;
  pool.for_each([&](const Message& m) {
    if (!ok) return;
    const Value& e = msgs.at(--idx);
    ok = e.is_list() && e.size() == 4 && e.at(0).is_int() && e.at(1).is_int() &&
         e.at(2).is_int() && e.at(0).as_int() == m.src && e.at(1).as_int() == m.dst &&
         e.at(2).as_int() == static_cast<std::int64_t>(m.uid.seq) && e.at(3) == m.payload;
  });
  return ok;
}

bool client_entry_matches(const sm::SmGlobalState& g, const MpImplementation& impl, sm::Pid i,
                          const MpGlobalState& mp) {
  Value v = client_image(g, impl, i);
  const ProcEntry& e = mp.entry(i);
  return v.at(0) == e.state && pool_matches(e.pool, v.at(1)) && g.pending(i) == e.pending_inv;
}

bool server_entry_matches(const sm::SmGlobalState& g, const MpImplementation& impl, mp::Pid j,
                          const MpGlobalState& mp) {
  Value v = server_image(g, impl, j);
  const ProcEntry& e = mp.entry(j);
  return v.at(0) == e.state && pool_matches(e.pool, v.at(1)) && !e.pending_inv;
}

// Server id written by the step, if the step wrote a server register.
std::optional<mp::Pid> written_server(const sm::SmStepRecord& rec) {
  if (rec.tag != sm::SmStepRecord::Tag::Write) return std::nullopt;
  const std::string& r = rec.reg;
  if (r.rfind("server[", 0) != 0) return std::nullopt;
  std::size_t open = r.find("][");
  std::size_t close = r.rfind(']');
  if (open == std::string::npos || close <= open + 2) return std::nullopt;
  try {
    return std::stoi(r.substr(open + 2, close - open - 2));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::vector<Uid> decode_witness(const Value& note) {
  const Value& uids = note.at(2);
  if (!uids.is_list()) fail(Err::UnreachableShape, "malformed witness " + note.str());
  std::vector<Uid> out;
  out.reserve(uids.size());
  for (std::size_t k = 0; k < uids.size(); ++k) {
    out.push_back(Uid::unpack(static_cast<std::uint64_t>(uids.at(k).as_int())));
  }
  return out;
}

bool is_witness(const Value& note) {
  return note.is_list() && note.size() == 3 && note.at(0) == Value("int") &&
         note.at(1).is_int() && note.at(2).is_list();
}

}  // namespace

MpGlobalState fwd_sim_image(const sm::SmGlobalState& s, const MpImplementation& impl) {
  if (s.processes() != impl.clients) {
    fail(Err::UnreachableShape, "state has " + std::to_string(s.processes()) +
                                    " processes, implementation has " +
                                    std::to_string(impl.clients) + " clients");
  }
  MpGlobalState g(impl.clients, impl.servers, impl.initial_state);
  for (int i = 0; i < impl.clients; ++i) {
    Value v = client_image(s, impl, i);
    ProcEntry e;
    e.state = v.at(0);
    e.pool = decode_msgs(v.at(1));
    e.pending_inv = s.pending(i);
    g = g.with_entry(i, std::move(e));
  }
  for (int j = impl.clients; j < impl.total(); ++j) {
    Value v = server_image(s, impl, j);
    ProcEntry e;
    e.state = v.at(0);
    e.pool = decode_msgs(v.at(1));
    g = g.with_entry(j, std::move(e));
  }
  return g;
}

std::string RefinementVerdict::describe() const {
  if (ok) return "ok";
  return "step " + std::to_string(step_index) + ": " + violation;
}

RefinementVerdict monitor_refinement(const sm::SmExecutionTrace& trace,
                                     const MpImplementation& impl) {
  return monitor_refinement(trace, impl, build_sm(impl));
}

RefinementVerdict monitor_refinement(const sm::SmExecutionTrace& trace,
                                     const MpImplementation& impl,
                                     const sm::SmProgram& program) {
  RefinementVerdict verdict;
  verdict.induced.m = impl.clients;
  verdict.induced.n = impl.servers;
  verdict.induced.seed = trace.seed;
  verdict.induced.meta = trace.meta;
  // Crash scripts are in shared-memory step indices; they do not apply
  // to the induced run.
  verdict.induced.meta.erase("crash");

  MpGlobalState acc(impl.clients, impl.servers, impl.initial_state);

  auto flag = [&verdict](std::size_t idx, std::string what) {
    verdict.ok = false;
    verdict.step_index = idx;
    verdict.violation = std::move(what);
  };

  {
    sm::SmGlobalState g0(program);
    for (int i = 0; i < impl.clients && verdict.ok; ++i) {
      if (!client_entry_matches(g0, impl, i, acc)) flag(0, "initial image differs at client");
    }
    for (int j = impl.clients; j < impl.total() && verdict.ok; ++j) {
      if (!server_entry_matches(g0, impl, j, acc)) flag(0, "initial image differs at server");
    }
    if (!verdict.ok) return verdict;
  }

  auto observe = [&](const sm::SmGlobalState& g, const sm::SmStepRecord& rec, std::size_t idx) {
    if (!verdict.ok) return;
    try {
      switch (rec.tag) {
        case sm::SmStepRecord::Tag::Call: {
          MpGlobalState next = mp::step_call(impl, acc, rec.pid, rec.action);
          if (!client_entry_matches(g, impl, rec.pid, next)) {
            flag(idx, "call of " + rec.action.label() + " does not advance the image");
            return;
          }
          mp::MpStep step;
          step.rule = mp::MpStep::Rule::Call;
          step.pid = rec.pid;
          step.action = rec.action;
          verdict.induced.steps.push_back(mp::TraceStep{std::move(step), next.digest()});
          acc = std::move(next);
          return;
        }
        case sm::SmStepRecord::Tag::Ret: {
          auto [next, act] = mp::step_return(impl, acc, rec.pid);
          if (act != rec.action) {
            flag(idx, "return " + rec.action.label() + " but the image returns " + act.label());
            return;
          }
          if (!client_entry_matches(g, impl, rec.pid, next)) {
            flag(idx, "return of " + rec.action.label() + " does not advance the image");
            return;
          }
          mp::MpStep step;
          step.rule = mp::MpStep::Rule::Ret;
          step.pid = rec.pid;
          step.action = rec.action;
          verdict.induced.steps.push_back(mp::TraceStep{std::move(step), next.digest()});
          acc = std::move(next);
          return;
        }
        default:
          break;
      }
      // A statement by p can move the image only at p's client and at a
      // server register p wrote; everything else is untouched.
      std::optional<mp::Pid> srv = written_server(rec);
      const bool client_still = client_entry_matches(g, impl, rec.pid, acc);
      const bool server_still = !srv || server_entry_matches(g, impl, *srv, acc);
      if (client_still && server_still) return;  // stuttering step
      if (rec.tag != sm::SmStepRecord::Tag::Write) {
        flag(idx, "statement moved the image without writing a register");
        return;
      }
      if (!is_witness(rec.note)) {
        flag(idx, "write to " + rec.reg + " moved the image without a witness");
        return;
      }
      const auto target = static_cast<mp::Pid>(rec.note.at(1).as_int());
      const bool target_ok = srv ? target == *srv : target == rec.pid;
      if (!target_ok) {
        flag(idx, "witness targets process " + std::to_string(target) + " but the write is to " +
                      rec.reg);
        return;
      }
      MpGlobalState next = mp::step_internal(impl, acc, target, decode_witness(rec.note));
      if (!client_entry_matches(g, impl, rec.pid, next) ||
          (srv && !server_entry_matches(g, impl, *srv, next))) {
        flag(idx, "write to " + rec.reg + " is not the witnessed step of process " +
                      std::to_string(target));
        return;
      }
      mp::MpStep step;
      step.rule = mp::MpStep::Rule::Internal;
      step.pid = target;
      step.recv = decode_witness(rec.note);
      verdict.induced.steps.push_back(mp::TraceStep{std::move(step), next.digest()});
      acc = std::move(next);
    } catch (const SimError& e) {
      flag(idx, e.what());
    }
  };

  sm_replay(program, trace, true, observe);

  if (verdict.ok && verdict.induced.history() != trace.history()) {
    flag(trace.steps.size(), "induced history diverges from the shared-memory history");
  }
  return verdict;
}

std::vector<mp::Pid> bg_stalled_servers(const sm::SmGlobalState& g,
                                        const MpImplementation& impl) {
  std::vector<mp::Pid> out;
  for (int j = impl.clients; j < impl.total(); ++j) {
    bool stalled = false;
    for (int p = 0; p < g.processes() && !stalled; ++p) {
      if (g.crashed(p)) continue;
      const BgMachine& m = bg_machine(g, p);
      if (m.step_resolved(j)) continue;
      Value now = impls::sa_resolve_now(g.regs(), sa_prefix(j, m.step_index(j)), impl.clients);
      if (now.is_nil()) stalled = true;
    }
    if (stalled) out.push_back(j);
  }
  return out;
}

}  // namespace sim::bg
