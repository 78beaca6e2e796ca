#include "sim/impls/abd.hpp"

#include <algorithm>

namespace sim::impls {

using namespace sim::mp;

namespace {

// Client state: [phase, nonce, acks, val, ts, wseq]
//   phase: 0 idle, 1 read query, 2 read write-back, 3 write query,
//          4 write push, 5 read done, 6 write done
//   acks:  sorted list of server ids heard in the current phase
//   val:   adopted value (read) or argument being written (write)
//   ts:    adopted / chosen timestamp [seq, writer]
//   wseq:  local write sequence counter (single-writer variant)
// Server state: [val, ts]
enum { kPhase = 0, kNonce = 1, kAcks = 2, kVal = 3, kTs = 4, kWseq = 5 };

constexpr int kIdle = 0, kReadQuery = 1, kReadWb = 2, kWriteQuery = 3, kWritePush = 4,
              kReadDone = 5, kWriteDone = 6;

Value make_ts(std::int64_t seq, std::int64_t writer) {
  return Value(Value::List{Value(seq), Value(writer)});
}

bool ts_less(const Value& a, const Value& b) {
  if (a.at(0).as_int() != b.at(0).as_int()) return a.at(0).as_int() < b.at(0).as_int();
  return a.at(1).as_int() < b.at(1).as_int();
}

Value client_init() {
  return Value(Value::List{Value(kIdle), Value(0), Value(Value::List{}), Value(),
                           make_ts(-1, -1), Value(0)});
}

Value server_init(const Value& init) {
  return Value(Value::List{init, make_ts(0, -1)});
}

Value with_field(const Value& state, std::size_t idx, Value v) {
  Value::List l = state.as_list();
  l.at(idx) = std::move(v);
  return Value(std::move(l));
}

// Inserts into the sorted ack list; true if the ack was new.
bool add_ack(Value& acks, std::int64_t server) {
  Value::List l = acks.as_list();
  auto it = std::lower_bound(l.begin(), l.end(), Value(server));
  if (it != l.end() && *it == Value(server)) return false;
  l.insert(it, Value(server));
  acks = Value(std::move(l));
  return true;
}

std::vector<Send> broadcast(int clients, int servers, Value payload) {
  std::vector<Send> sends;
  sends.reserve(static_cast<std::size_t>(servers));
  for (int s = 0; s < servers; ++s) sends.push_back(Send{clients + s, payload});
  return sends;
}

MpImplementation make_abd(const std::string& name, int clients, int servers, Value init,
                          bool single_writer) {
  MpImplementation impl;
  impl.name = name;
  impl.clients = clients;
  impl.servers = servers;
  // A single shared initial-state value would force clients and servers
  // to share a shape; give clients their shape on first use instead.
  impl.initial_state = Value();  // replaced per process below

  auto client_delta = [clients, servers, single_writer](Pid pid, const Value& raw,
                                                        const DeltaInput& in) -> DeltaResult {
    Value state = raw.is_nil() ? client_init() : raw;
    const std::int64_t phase = state.at(kPhase).as_int();
    switch (in.kind) {
      case DeltaInput::Kind::Call: {
        if (phase != kIdle) return std::nullopt;
        const std::int64_t nonce = state.at(kNonce).as_int() + 1;
        if (in.action.method == "read" && in.action.arg.is_nil()) {
          Value next = state;
          next = with_field(next, kPhase, Value(kReadQuery));
          next = with_field(next, kNonce, Value(nonce));
          next = with_field(next, kAcks, Value(Value::List{}));
          next = with_field(next, kVal, Value());
          next = with_field(next, kTs, make_ts(-1, -1));
          return std::make_pair(next,
                                broadcast(clients, servers,
                                          Value(Value::List{Value("q"), Value(nonce)})));
        }
        if (in.action.method == "write") {
          if (single_writer) {
            if (pid != 0) return std::nullopt;
            const std::int64_t wseq = state.at(kWseq).as_int() + 1;
            Value ts = make_ts(wseq, 0);
            Value next = state;
            next = with_field(next, kPhase, Value(kWritePush));
            next = with_field(next, kNonce, Value(nonce));
            next = with_field(next, kAcks, Value(Value::List{}));
            next = with_field(next, kVal, in.action.arg);
            next = with_field(next, kTs, ts);
            next = with_field(next, kWseq, Value(wseq));
            return std::make_pair(
                next, broadcast(clients, servers,
                                Value(Value::List{Value("wb"), Value(nonce), in.action.arg, ts})));
          }
          Value next = state;
          next = with_field(next, kPhase, Value(kWriteQuery));
          next = with_field(next, kNonce, Value(nonce));
          next = with_field(next, kAcks, Value(Value::List{}));
          next = with_field(next, kVal, in.action.arg);
          next = with_field(next, kTs, make_ts(-1, -1));
          return std::make_pair(next,
                                broadcast(clients, servers,
                                          Value(Value::List{Value("q"), Value(nonce)})));
        }
        return std::nullopt;
      }
      case DeltaInput::Kind::Ret: {
        if (phase == kReadDone && in.action.value == state.at(kVal)) {
          Value next = state;
          next = with_field(next, kPhase, Value(kIdle));
          return std::make_pair(next, std::vector<Send>{});
        }
        if (phase == kWriteDone && in.action.value == Value("ok")) {
          Value next = state;
          next = with_field(next, kPhase, Value(kIdle));
          return std::make_pair(next, std::vector<Send>{});
        }
        return std::nullopt;
      }
      case DeltaInput::Kind::Recv: {
        const std::int64_t nonce = state.at(kNonce).as_int();
        Value::List l = state.as_list();
        bool changed = false;
        for (const Message* m : in.recv) {
          if (!m->payload.is_list() || m->payload.size() < 2) continue;
          const Value& tag = m->payload.at(0);
          if (m->payload.at(1) != Value(nonce)) continue;  // stale phase
          if ((phase == kReadQuery || phase == kWriteQuery) && tag == Value("qr") &&
              m->payload.size() == 4) {
            changed |= add_ack(l[kAcks], m->src);
            if (ts_less(l[kTs], m->payload.at(3))) {
              l[kTs] = m->payload.at(3);
              if (phase == kReadQuery) l[kVal] = m->payload.at(2);
              changed = true;
            }
          } else if ((phase == kReadWb || phase == kWritePush) && tag == Value("ack")) {
            changed |= add_ack(l[kAcks], m->src);
          }
        }
        std::vector<Send> sends;
        const bool majority = static_cast<int>(l[kAcks].size()) * 2 > servers;
        if (majority && phase == kReadQuery) {
          const std::int64_t nonce2 = nonce + 1;
          l[kPhase] = Value(kReadWb);
          l[kNonce] = Value(nonce2);
          l[kAcks] = Value(Value::List{});
          sends = broadcast(clients, servers,
                            Value(Value::List{Value("wb"), Value(nonce2), l[kVal], l[kTs]}));
          changed = true;
        } else if (majority && phase == kWriteQuery) {
          const std::int64_t nonce2 = nonce + 1;
          Value ts2 = make_ts(l[kTs].at(0).as_int() + 1, pid);
          l[kPhase] = Value(kWritePush);
          l[kNonce] = Value(nonce2);
          l[kAcks] = Value(Value::List{});
          l[kTs] = ts2;
          sends = broadcast(clients, servers,
                            Value(Value::List{Value("wb"), Value(nonce2), l[kVal], ts2}));
          changed = true;
        } else if (majority && phase == kReadWb) {
          l[kPhase] = Value(kReadDone);
          changed = true;
        } else if (majority && phase == kWritePush) {
          l[kPhase] = Value(kWriteDone);
          changed = true;
        }
        if (!changed) return std::make_pair(raw, std::vector<Send>{});
        return std::make_pair(Value(std::move(l)), std::move(sends));
      }
    }
    return std::nullopt;
  };

  auto server_delta = [init](const Value& raw, const DeltaInput& in) -> DeltaResult {
    if (in.kind != DeltaInput::Kind::Recv) return std::nullopt;
    Value state = raw.is_nil() ? server_init(init) : raw;
    bool stored = false;
    std::vector<Send> sends;
    for (const Message* m : in.recv) {
      if (!m->payload.is_list() || m->payload.size() < 2) continue;
      const Value& tag = m->payload.at(0);
      const Value& nonce = m->payload.at(1);
      if (tag == Value("q")) {
        sends.push_back(Send{m->src, Value(Value::List{Value("qr"), nonce, state.at(0),
                                                       state.at(1)})});
      } else if (tag == Value("wb") && m->payload.size() == 4) {
        if (ts_less(state.at(1), m->payload.at(3))) {
          state = Value(Value::List{m->payload.at(2), m->payload.at(3)});
          stored = true;
        }
        sends.push_back(Send{m->src, Value(Value::List{Value("ack"), nonce})});
      }
    }
    if (!stored && sends.empty()) return std::make_pair(raw, std::vector<Send>{});
    return std::make_pair(state, std::move(sends));
  };

  impl.delta = [clients, client_delta, server_delta](Pid pid, const Value& state,
                                                     const DeltaInput& in) -> DeltaResult {
    if (pid < clients) return client_delta(pid, state, in);
    return server_delta(state, in);
  };
  impl.pending = [](Pid, const Value& state) {
    return !state.is_nil() && state.at(kPhase).as_int() != kIdle;
  };
  impl.ret_enabled = [](Pid, const Value& state) -> std::optional<Value> {
    if (state.is_nil()) return std::nullopt;
    const std::int64_t phase = state.at(kPhase).as_int();
    if (phase == kReadDone) return state.at(kVal);
    if (phase == kWriteDone) return Value("ok");
    return std::nullopt;
  };
  return impl;
}

}  // namespace

MpImplementation abd_implementation(int clients, int servers, Value init) {
  return make_abd("abd", clients, servers, std::move(init), false);
}

MpImplementation abd_sw_implementation(int clients, int servers, Value init) {
  return make_abd("abd_sw", clients, servers, std::move(init), true);
}

}  // namespace sim::impls
