#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sim/action.hpp"
#include "sim/value.hpp"

namespace sim::mp {

// Process ids: [0, m) are clients, [m, m+n) are servers.
using Pid = int;

// Unique message id: sending process plus per-sender sequence number.
struct Uid {
  Pid sender = 0;
  std::uint32_t seq = 0;

  std::uint64_t pack() const {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(sender)) << 32) | seq;
  }
  static Uid unpack(std::uint64_t v) {
    return Uid{static_cast<Pid>(v >> 32), static_cast<std::uint32_t>(v & 0xffffffffull)};
  }

  friend bool operator==(const Uid& a, const Uid& b) {
    return a.sender == b.sender && a.seq == b.seq;
  }
  friend bool operator<(const Uid& a, const Uid& b) { return a.pack() < b.pack(); }

  std::string str() const { return std::to_string(sender) + "." + std::to_string(seq); }
};

struct Message {
  Pid src = 0;
  Pid dst = 0;
  Value payload;
  Uid uid;

  friend bool operator==(const Message& a, const Message& b) {
    return a.src == b.src && a.dst == b.dst && a.uid == b.uid && a.payload == b.payload;
  }

  std::uint64_t hash() const {
    std::uint64_t h = hash_combine(0x6d7367ull, uid.pack());
    h = hash_combine(h, static_cast<std::uint64_t>(dst));
    return hash_combine(h, payload.hash());
  }
};

// Immutable message pool shared across states. Pools only grow, so a
// persistent cons list gives O(1) append and structural prefix sharing.
struct PoolNode {
  Message msg;
  std::shared_ptr<const PoolNode> prev;
  std::uint32_t count = 0;
  std::uint64_t hash = 0;
};

class MsgPool {
 public:
  MsgPool() = default;

  std::uint32_t size() const { return head_ ? head_->count : 0; }
  std::uint64_t hash() const { return head_ ? head_->hash : 0x706f6f6cull; }
  bool empty() const { return !head_; }

  MsgPool append(Message m) const {
    auto node = std::make_shared<PoolNode>();
    node->count = size() + 1;
    node->hash = hash_combine(hash(), m.hash());
    node->msg = std::move(m);
    node->prev = head_;
    MsgPool out;
    out.head_ = std::move(node);
    return out;
  }

  // Newest-to-oldest walk.
  template <typename F>
  void for_each(F&& f) const {
    for (const PoolNode* n = head_.get(); n; n = n->prev.get()) f(n->msg);
  }

  // Oldest-first copy.
  std::vector<Message> to_vector() const;

  const Message* find(const Uid& uid) const;

  // True iff this pool is a structural prefix of other (append-only growth).
  bool is_prefix_of(const MsgPool& other) const;

  friend bool operator==(const MsgPool& a, const MsgPool& b) {
    if (a.head_ == b.head_) return true;
    return a.size() == b.size() && a.hash() == b.hash();
  }

 private:
  std::shared_ptr<const PoolNode> head_;
};

// Messages to send, produced by a transition function; the framework
// assigns uids when the step is applied.
struct Send {
  Pid dst = 0;
  Value payload;
};

// Input to a client transition function: a call action, a return action,
// or a set of received messages (in canonical uid order). Servers only
// ever see Recv. Received messages are borrowed from the global state the
// step reads; they stay valid for the duration of the delta call.
struct DeltaInput {
  enum class Kind { Call, Ret, Recv };
  Kind kind = Kind::Recv;
  Action action;                       // Call / Ret
  std::vector<const Message*> recv;    // Recv, sorted by uid

  static DeltaInput call(Action a) { return DeltaInput{Kind::Call, std::move(a), {}}; }
  static DeltaInput ret(Action a) { return DeltaInput{Kind::Ret, std::move(a), {}}; }
  static DeltaInput recv_set(std::vector<const Message*> msgs) {
    return DeltaInput{Kind::Recv, {}, std::move(msgs)};
  }
};

using DeltaResult = std::optional<std::pair<Value, std::vector<Send>>>;

// A message-passing implementation: per-process deterministic partial
// transition functions plus the pending / return-enabled observers of
// client states.
struct MpImplementation {
  std::string name;
  int clients = 0;  // m
  int servers = 0;  // n
  Value initial_state;

  std::function<DeltaResult(Pid pid, const Value& state, const DeltaInput& in)> delta;
  std::function<bool(Pid pid, const Value& state)> pending;
  std::function<std::optional<Value>(Pid pid, const Value& state)> ret_enabled;

  int total() const { return clients + servers; }
  bool is_client(Pid p) const { return p >= 0 && p < clients; }
  bool is_server(Pid p) const { return p >= clients && p < total(); }
};

}  // namespace sim::mp
