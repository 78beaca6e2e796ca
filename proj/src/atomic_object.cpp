#include "sim/atomic_object.hpp"

#include <map>
#include <set>

#include "sim/error.hpp"

namespace sim {

std::string atomic_label_str(const AtomicLabel& l) {
  if (std::holds_alternative<Action>(l)) return std::get<Action>(l).label();
  return "lin[" + std::to_string(std::get<LinPoint>(l).inv) + "]";
}

std::uint64_t AtomicObjectState::digest() const {
  std::uint64_t d = hash_combine(history_hash(h), history_hash(hs));
  return hash_combine(d, abs.hash());
}

AtomicObjectState atomic_initial(const SeqSpec& spec) {
  AtomicObjectState s;
  s.abs = spec.init;
  return s;
}

namespace {

struct HsIndex {
  std::set<InvId> in_hs;
  std::map<InvId, Value> ret_of;
};

HsIndex index_hs(const History& hs) {
  HsIndex ix;
  for (std::size_t i = 0; i + 1 < hs.size(); i += 2) {
    ix.in_hs.insert(hs[i].inv);
    ix.ret_of[hs[i].inv] = hs[i + 1].value;
  }
  return ix;
}

}  // namespace

AtomicObjectState atomic_step(const AtomicObjectState& s, const AtomicLabel& label,
                              const SeqSpec& spec) {
  AtomicObjectState out = s;
  auto ops = [&] {
    std::map<InvId, std::pair<bool, Action>> m;  // (returned, call action)
    for (const Action& a : s.h) {
      if (a.is_call())
        m.emplace(a.inv, std::make_pair(false, a));
      else
        m.at(a.inv).first = true;
    }
    return m;
  }();
  HsIndex hs = index_hs(s.hs);

  if (std::holds_alternative<Action>(label)) {
    const Action& a = std::get<Action>(label);
    if (a.is_call()) {
      if (ops.count(a.inv))
        fail(Err::IllegalAtomicStep, "call case: invocation " + std::to_string(a.inv) + " already called");
      out.h.push_back(a);
      return out;
    }
    // Return case: the matching return must occur in hs.
    auto it = ops.find(a.inv);
    if (it == ops.end() || it->second.first)
      fail(Err::IllegalAtomicStep, "return case: invocation " + std::to_string(a.inv) + " not pending");
    auto rv = hs.ret_of.find(a.inv);
    if (rv == hs.ret_of.end() || rv->second != a.value)
      fail(Err::IllegalAtomicStep,
           "return case: ret " + a.value.str() + " for invocation " + std::to_string(a.inv) +
               " does not occur in the linearization");
    out.h.push_back(a);
    return out;
  }

  // Linearization point.
  InvId k = std::get<LinPoint>(label).inv;
  auto it = ops.find(k);
  if (it == ops.end())
    fail(Err::IllegalAtomicStep, "lin case: invocation " + std::to_string(k) + " not called");
  if (hs.in_hs.count(k))
    fail(Err::IllegalAtomicStep, "lin case: invocation " + std::to_string(k) + " already linearized");
  const Action& call = it->second.second;
  auto r = spec.apply(s.abs, call.method, call.arg);
  if (!r)
    fail(Err::IllegalAtomicStep, "lin case: spec rejects " + call.method + "(" + call.arg.str() + ")");
  out.hs.push_back(call);
  out.hs.push_back(Action::ret(k, r->first));
  out.abs = r->second;
  return out;
}

std::vector<AtomicLabel> enumerate_atomic_steps(const AtomicObjectState& s, const SeqSpec& spec,
                                                const AtomicEnumOptions& opts) {
  std::vector<AtomicLabel> out;
  std::map<InvId, Action> calls;
  std::set<InvId> returned;
  for (const Action& a : s.h) {
    if (a.is_call())
      calls.emplace(a.inv, a);
    else
      returned.insert(a.inv);
  }
  HsIndex hs = index_hs(s.hs);

  std::size_t pending = calls.size() - returned.size();

  // Fresh calls.
  if (calls.size() < opts.max_invocations && pending < opts.max_pending) {
    InvId next = static_cast<InvId>(calls.size()) + 1;
    for (const auto& [method, arg] : spec_call_alphabet(spec, opts.value_domain))
      out.push_back(Action::call(next, method, arg));
  }
  // Returns for linearized pending invocations.
  for (const auto& [inv, call] : calls) {
    if (returned.count(inv)) continue;
    auto rv = hs.ret_of.find(inv);
    if (rv != hs.ret_of.end()) out.push_back(Action::ret(inv, rv->second));
  }
  // Linearization points for called, not-yet-linearized invocations.
  for (const auto& [inv, call] : calls) {
    if (hs.in_hs.count(inv) || returned.count(inv)) continue;
    out.push_back(LinPoint{inv});
  }
  return out;
}

}  // namespace sim
