#pragma once

#include "sim/mp/types.hpp"

namespace sim::impls {

// Toy round-trip protocol: ping() sends one message to server 0, which
// answers "pong"; the client returns "pong" once the reply arrives.
mp::MpImplementation ping_implementation(int clients = 1, int servers = 1);

}  // namespace sim::impls
