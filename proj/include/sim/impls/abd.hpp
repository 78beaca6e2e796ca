#pragma once

#include "sim/mp/types.hpp"

namespace sim::impls {

// Multi-writer ABD register over n replica servers.
//
// read():  query all servers, wait for a majority of replies, adopt the
//          value with the largest timestamp, write it back to a majority,
//          then return it.
// write(v): query a majority for the largest timestamp seq, pick
//          (maxseq+1, clientId), push (v, ts) to a majority, return "ok".
//
// Timestamps are (seq, writer) pairs ordered lexicographically. Every
// phase carries a fresh nonce so stale replies are ignored.
mp::MpImplementation abd_implementation(int clients, int servers, Value init = Value(0));

// Single-writer variant: only client 0 may write, and a write skips the
// query phase — the writer keeps a local sequence counter and pushes
// (v, (seq, 0)) directly. Reads are unchanged.
mp::MpImplementation abd_sw_implementation(int clients, int servers, Value init = Value(0));

}  // namespace sim::impls
