#include "sim/impls/ping.hpp"

namespace sim::impls {

using namespace sim::mp;

// Client state: 0 idle, 1 waiting for reply, 2 reply received.
// Server state: constant 0.
MpImplementation ping_implementation(int clients, int servers) {
  MpImplementation impl;
  impl.name = "ping";
  impl.clients = clients;
  impl.servers = servers;
  impl.initial_state = Value(0);

  impl.delta = [clients](Pid pid, const Value& state, const DeltaInput& in) -> DeltaResult {
    if (pid < clients) {
      switch (in.kind) {
        case DeltaInput::Kind::Call: {
          if (in.action.method != "ping" || state.as_int() != 0) return std::nullopt;
          std::vector<Send> sends;
          sends.push_back(Send{clients, Value("ping")});
          return std::make_pair(Value(1), std::move(sends));
        }
        case DeltaInput::Kind::Ret:
          if (state.as_int() != 2 || in.action.value != Value("pong")) return std::nullopt;
          return std::make_pair(Value(0), std::vector<Send>{});
        case DeltaInput::Kind::Recv: {
          Value next = state;
          for (const Message* m : in.recv) {
            if (m->payload == Value("pong") && state.as_int() == 1) next = Value(2);
          }
          return std::make_pair(next, std::vector<Send>{});
        }
      }
      return std::nullopt;
    }
    // Server: answer each ping with a pong.
    if (in.kind != DeltaInput::Kind::Recv) return std::nullopt;
    std::vector<Send> sends;
    for (const Message* m : in.recv) {
      if (m->payload == Value("ping")) sends.push_back(Send{m->src, Value("pong")});
    }
    return std::make_pair(state, std::move(sends));
  };

  impl.pending = [](Pid, const Value& state) { return state.as_int() != 0; };
  impl.ret_enabled = [](Pid, const Value& state) -> std::optional<Value> {
    if (state.as_int() == 2) return Value("pong");
    return std::nullopt;
  };
  return impl;
}

}  // namespace sim::impls
