#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "sim/mp/types.hpp"

namespace sim::mp {

// Per-process component of a global state. Immutable and shared between
// successive global states; a step copies only the entries it touches.
struct ProcEntry {
  Value state;
  MsgPool pool;
  // Uids delivered to this process so far (bookkeeping for duplicate
  // suppression; the pool itself never shrinks). Sorted.
  std::shared_ptr<const std::vector<std::uint64_t>> delivered;
  // Invocation currently pending at a client, if the framework knows one.
  std::optional<InvId> pending_inv;
  bool crashed = false;

  std::uint64_t digest() const;
  // Like digest() but ignores the delivered bookkeeping: captures only what a
  // process can observe (state, pool, pending invocation, crash flag).
  std::uint64_t semantic_digest() const;
  bool was_delivered(const Uid& uid) const;
};

class MpGlobalState {
 public:
  MpGlobalState() = default;
  MpGlobalState(int clients, int servers, const Value& initial_state);

  int clients() const { return clients_; }
  int servers() const { return servers_; }
  int total() const { return clients_ + servers_; }
  bool is_client(Pid p) const { return p >= 0 && p < clients_; }
  bool is_server(Pid p) const { return p >= clients_ && p < total(); }

  const ProcEntry& entry(Pid p) const { return *entries_.at(static_cast<std::size_t>(p)); }
  const Value& local(Pid p) const { return entry(p).state; }
  const MsgPool& pool(Pid p) const { return entry(p).pool; }

  MpGlobalState with_entry(Pid p, ProcEntry e) const;

  // All messages with the given destination, in uid order, across pools.
  // Pointers stay valid as long as any state sharing the pools is alive.
  std::vector<const Message*> addressed_to(Pid dst) const;
  const Message* find_message(const Uid& uid) const;

  std::uint64_t digest() const;
  std::uint64_t semantic_digest() const;

 private:
  int clients_ = 0;
  int servers_ = 0;
  std::vector<std::shared_ptr<const ProcEntry>> entries_;
  // Per-entry digests, refreshed by with_entry; global digests fold these
  // instead of rehashing untouched entries.
  std::vector<std::uint64_t> entry_digests_;
  std::vector<std::uint64_t> entry_sem_digests_;
};

}  // namespace sim::mp
