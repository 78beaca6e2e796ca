#include "support/lin_oracle.hpp"

#include <algorithm>
#include <map>

#include "sim/error.hpp"

namespace sim::testing {

namespace {

struct Op {
  InvId inv;
  std::string method;
  Value arg;
  bool complete = false;
  Value ret;
  std::size_t call_pos = 0;
  std::size_t ret_pos = 0;
};

}  // namespace

bool brute_linearizable(const History& h, const SeqSpec& spec) {
  if (!history_well_formed(h)) fail(Err::MalformedHistory, "oracle: ill-formed history");

  std::vector<Op> completed;
  std::vector<Op> pending;
  {
    std::map<InvId, Op> ops;
    for (std::size_t i = 0; i < h.size(); ++i) {
      const Action& a = h[i];
      if (a.is_call()) {
        ops[a.inv] = Op{a.inv, a.method, a.arg, false, Value(), i, 0};
      } else {
        ops[a.inv].complete = true;
        ops[a.inv].ret = a.value;
        ops[a.inv].ret_pos = i;
      }
    }
    for (auto& [inv, op] : ops) (op.complete ? completed : pending).push_back(op);
  }

  const std::size_t p = pending.size();
  for (std::uint32_t mask = 0; mask < (1u << p); ++mask) {
    std::vector<const Op*> ops;
    for (const Op& op : completed) ops.push_back(&op);
    for (std::size_t i = 0; i < p; ++i)
      if (mask & (1u << i)) ops.push_back(&pending[i]);

    std::sort(ops.begin(), ops.end());
    do {
      // Real-time order: if a returned before b was called, a comes first.
      bool order_ok = true;
      for (std::size_t i = 0; i < ops.size() && order_ok; ++i) {
        for (std::size_t j = i + 1; j < ops.size() && order_ok; ++j) {
          if (ops[j]->complete && ops[j]->ret_pos < ops[i]->call_pos) order_ok = false;
        }
      }
      if (!order_ok) continue;
      Value state = spec.init;
      bool replay_ok = true;
      for (const Op* op : ops) {
        auto r = spec.apply(state, op->method, op->arg);
        if (!r || (op->complete && r->first != op->ret)) {
          replay_ok = false;
          break;
        }
        state = r->second;
      }
      if (replay_ok) return true;
    } while (std::next_permutation(ops.begin(), ops.end()));
  }
  return false;
}

namespace {

struct HistGen {
  const SeqSpec* spec;
  std::vector<std::pair<std::string, Value>> alphabet;
  std::vector<Value> returns_for_read;
  int max_ops;
  std::size_t cap;
  std::vector<History>* out;

  void gen(History& cur, int started, const std::vector<std::size_t>& open) {
    if (out->size() >= cap) fail(Err::Internal, "history enumeration cap exceeded");
    out->push_back(cur);
    if (started < max_ops) {
      for (const auto& [method, arg] : alphabet) {
        InvId inv = started + 1;
        cur.push_back(Action::call(inv, method, arg));
        auto open2 = open;
        open2.push_back(cur.size() - 1);
        gen(cur, started + 1, open2);
        cur.pop_back();
      }
    }
    for (std::size_t oi = 0; oi < open.size(); ++oi) {
      const Action& call = cur[open[oi]];
      auto open2 = open;
      open2.erase(open2.begin() + static_cast<std::ptrdiff_t>(oi));
      // Writes return ok; reads may claim any domain value.
      bool is_mutator = call.method == "write" || call.method == "increment" ||
                        call.method == "update" || call.method == "writeMax";
      if (is_mutator) {
        cur.push_back(Action::ret(call.inv, Value("ok")));
        gen(cur, started, open2);
        cur.pop_back();
      } else {
        for (const Value& v : returns_for_read) {
          cur.push_back(Action::ret(call.inv, v));
          gen(cur, started, open2);
          cur.pop_back();
        }
      }
    }
  }
};

}  // namespace

std::vector<History> enumerate_histories(const SeqSpec& spec, int value_domain, int max_ops,
                                         std::size_t cap) {
  std::vector<History> out;
  HistGen g;
  g.spec = &spec;
  g.alphabet = spec_call_alphabet(spec, value_domain);
  for (int v = 0; v < value_domain; ++v) g.returns_for_read.push_back(Value(v));
  g.max_ops = max_ops;
  g.cap = cap;
  g.out = &out;
  History cur;
  g.gen(cur, 0, {});
  return out;
}

}  // namespace sim::testing
