#include "sim/mp/state.hpp"

#include <algorithm>

#include "sim/error.hpp"

namespace sim::mp {

std::vector<Message> MsgPool::to_vector() const {
  std::vector<Message> out;
  out.reserve(size());
  for_each([&](const Message& m) { out.push_back(m); });
  std::reverse(out.begin(), out.end());
  return out;
}

const Message* MsgPool::find(const Uid& uid) const {
  const Message* found = nullptr;
  for (const PoolNode* n = head_.get(); n; n = n->prev.get()) {
    if (n->msg.uid == uid) {
      found = &n->msg;
      break;
    }
  }
  return found;
}

bool MsgPool::is_prefix_of(const MsgPool& other) const {
  if (size() > other.size()) return false;
  const PoolNode* n = other.head_.get();
  while (n && n->count > size()) n = n->prev.get();
  if (!size()) return true;
  return n && n->count == size() && n->hash == hash();
}

std::uint64_t ProcEntry::digest() const {
  std::uint64_t h = semantic_digest();
  if (delivered) {
    for (std::uint64_t d : *delivered) h = hash_combine(h, d);
  }
  return h;
}

std::uint64_t ProcEntry::semantic_digest() const {
  std::uint64_t h = hash_combine(0x70726f63ull, state.hash());
  h = hash_combine(h, pool.hash());
  h = hash_combine(h, pending_inv ? static_cast<std::uint64_t>(*pending_inv) + 1 : 0);
  return hash_combine(h, crashed ? 2 : 1);
}

bool ProcEntry::was_delivered(const Uid& uid) const {
  if (!delivered) return false;
  return std::binary_search(delivered->begin(), delivered->end(), uid.pack());
}

MpGlobalState::MpGlobalState(int clients, int servers, const Value& initial_state)
    : clients_(clients), servers_(servers) {
  auto init = std::make_shared<const ProcEntry>(ProcEntry{initial_state, {}, nullptr, {}, false});
  entries_.assign(static_cast<std::size_t>(total()), init);
  entry_digests_.assign(entries_.size(), init->digest());
  entry_sem_digests_.assign(entries_.size(), init->semantic_digest());
}

MpGlobalState MpGlobalState::with_entry(Pid p, ProcEntry e) const {
  MpGlobalState out = *this;
  auto i = static_cast<std::size_t>(p);
  out.entry_digests_.at(i) = e.digest();
  out.entry_sem_digests_.at(i) = e.semantic_digest();
  out.entries_.at(i) = std::make_shared<const ProcEntry>(std::move(e));
  return out;
}

std::vector<const Message*> MpGlobalState::addressed_to(Pid dst) const {
  std::vector<const Message*> out;
  for (const auto& e : entries_) {
    e->pool.for_each([&](const Message& m) {
      if (m.dst == dst) out.push_back(&m);
    });
  }
  std::sort(out.begin(), out.end(),
            [](const Message* a, const Message* b) { return a->uid < b->uid; });
  return out;
}

const Message* MpGlobalState::find_message(const Uid& uid) const {
  if (uid.sender < 0 || uid.sender >= total()) return nullptr;
  return entries_[static_cast<std::size_t>(uid.sender)]->pool.find(uid);
}

std::uint64_t MpGlobalState::digest() const {
  std::uint64_t h = hash_combine(0x676c6f62ull, static_cast<std::uint64_t>(clients_));
  h = hash_combine(h, static_cast<std::uint64_t>(servers_));
  for (std::uint64_t d : entry_digests_) h = hash_combine(h, d);
  return h;
}

std::uint64_t MpGlobalState::semantic_digest() const {
  std::uint64_t h = hash_combine(0x73656d61ull, static_cast<std::uint64_t>(clients_));
  h = hash_combine(h, static_cast<std::uint64_t>(servers_));
  for (std::uint64_t d : entry_sem_digests_) h = hash_combine(h, d);
  return h;
}

}  // namespace sim::mp
