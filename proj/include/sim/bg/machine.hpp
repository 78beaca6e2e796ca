#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "sim/impls/safe_agreement.hpp"
#include "sim/mp/types.hpp"
#include "sim/sm/state.hpp"
#include "sim/sm/types.hpp"

namespace sim::bg {

// Shared-memory simulation of a message-passing implementation. Each
// shared-memory process drives one client of the inner implementation
// and cooperates on every server: server steps are agreed on through
// per-(server, step) safe-agreement objects, so all processes apply the
// same server step sequence.
//
// Register encodings (everything is a Value):
//   client[i]    = [state, msgs]      owned by process i
//   server[i][j] = [state, msgs, sn]  process i's copy of server j
//   msgs         = [[src, dst, seq, payload], ...] in send order
// A message's uid is (src, seq) with seq its position in the sender's
// pool, so a msgs list is also uid-sorted. Safe-agreement proposals are
// [state, msgs, recv] with recv the uids consumed by the proposed step.

std::string client_reg_name(int i);
std::string server_reg_name(int i, mp::Pid j);
// Register prefix of the safe-agreement object for step r of server j.
std::string sa_prefix(mp::Pid j, int r);

Value encode_msgs(const mp::MsgPool& pool);
mp::MsgPool decode_msgs(const Value& msgs);
std::vector<mp::Message> decode_msg_entries(const Value& msgs);

// Applies a call/return transition of client i to a [state, msgs]
// register value; new sends are appended with fresh uids.
Value act_step(const mp::MpImplementation& impl, mp::Pid i, const Value& client_reg,
               const Action& a);

// The server-register value with the largest step number. Entries that
// share a step number went through agreement and must be identical; a
// difference is UnreachableShape.
Value most_recent(const std::vector<Value>& entries);

// Everything currently addressed to `target` in a register-file
// snapshot: client pools plus, per server, the pool of its most recent
// entry. Deduped by uid and uid-sorted.
std::vector<mp::Message> collect_messages(const sm::RegFile& regs,
                                          const mp::MpImplementation& impl, mp::Pid target);

// One transition of `target` fed with collect_messages(target), applied
// to the stored content: client[target], or server[executor][target]
// for a server. Returns the new [state, msgs] and the consumed uids.
std::pair<Value, std::vector<mp::Uid>> internal_step(const sm::RegFile& regs,
                                                     const mp::MpImplementation& impl,
                                                     mp::Pid target, sm::Pid executor);

// Deliberate defects used to exercise the refinement monitor.
enum class BgFault {
  None,
  DropSend,       // the call-simulating write loses its last message
  UnagreedWrite,  // server steps skip agreement and write own proposals
};

// One simulated method execution: apply the call to the own client
// register, then loop { return if enabled; advance the own client; give
// each server one propose-or-resolve turn } until the return fires.
// Statements perform at most one shared access; local work and reads of
// own registers fold into the following access.
class BgMachine : public sm::SmMachine {
 public:
  BgMachine(std::shared_ptr<const mp::MpImplementation> impl, sm::Pid self,
            BgFault fault = BgFault::None);

  std::unique_ptr<sm::SmMachine> clone() const override;
  bool idle() const override { return phase_ == Phase::Idle; }
  bool accepts_call(const std::string& method, const Value& arg) const override;
  std::optional<Value> ret_value() const override;
  void on_call(const Action& call) override;
  void on_ret() override;
  Value step(sm::Shared& sh) override;
  std::uint64_t digest() const override;

  // Introspection for the simulation relation, liveness analysis and
  // instrumented tests.
  bool before_loop() const { return phase_ == Phase::CallWrite; }
  bool in_return_window() const {
    return phase_ == Phase::RetWrite || phase_ == Phase::RetDone;
  }
  const Action& current_call() const { return call_; }
  const Value& old_client() const { return old_client_; }
  int step_index(mp::Pid j) const { return r_[server_slot(j)]; }
  bool step_resolved(mp::Pid j) const { return resolved_[server_slot(j)] != 0; }
  // A proposal this process started for server j's current step and has
  // not finished publishing.
  bool mid_propose(mp::Pid j) const;
  // Target of an in-progress message collection, if any.
  std::optional<mp::Pid> collecting_for() const;
  // Server whose step this process is proposing right now, if any.
  std::optional<mp::Pid> proposing_to() const;

 private:
  enum class Phase {
    Idle,        // between invocations
    CallWrite,   // next: write client[self] with the call applied
    LoopHead,    // next: return check, then client step or server turn
    RetWrite,    // next: write client[self] with the return applied
    RetDone,     // next: the visible return transition
    Collect,     // reading registers for target_'s next step
    ClientWrite, // next: write client[self] with the collected step
    ServerScan,  // next: give server j_ its propose-or-resolve turn
    SaPropose,   // driving the safe-agreement propose for (j_, r[j_])
    SaResolve,   // driving a resolve for (j_, r[j_])
    ServerWrite, // next: publish the resolved step to server[self][j_]
  };

  struct ReadSlot {
    bool server = false;
    int owner = 0;    // i' for server slots, k for client slots
    mp::Pid proc = 0; // server id (server slots only)
  };

  BgMachine(const BgMachine&) = default;

  int server_slot(mp::Pid j) const;
  void bind_ids(sm::Shared& sh);
  void begin_collect(mp::Pid target);
  // Performs free reads until one counted read happens; false when the
  // read sequence is exhausted without a shared access.
  bool collect_reads(sm::Shared& sh);
  void consume_read(const ReadSlot& slot, const Value& v);
  void take_messages(const Value& msgs);
  // Applies target_'s transition to the collected messages.
  std::pair<Value, Value> finish_step(const Value& stored);  // [state,msgs], recv uids
  void advance_server();
  Value make_note(mp::Pid target, Value recv) const;

  std::shared_ptr<const mp::MpImplementation> impl_;
  sm::Pid self_ = 0;
  BgFault fault_ = BgFault::None;

  Phase phase_ = Phase::Idle;
  Action call_;
  Value ret_y_;
  Value old_client_;
  std::uint64_t old_client_hash_ = 0;
  // Mirror of the own client register (a single-writer register always
  // holds the owner's last write); lets accepts_call work without a
  // shared access. Excluded from the digest: the register carries it.
  Value client_val_;

  std::vector<int> r_;
  std::vector<char> resolved_;
  std::vector<impls::SaSession> sa_;

  mp::Pid j_ = 0;  // server being scanned

  // Collection state.
  mp::Pid target_ = 0;
  std::size_t read_idx_ = 0;
  std::vector<ReadSlot> reads_;
  Value::List group_;
  std::uint64_t group_hash_ = 0;
  std::vector<mp::Message> collected_;
  std::unordered_set<std::uint64_t> collected_uids_;
  std::uint64_t collected_hash_ = 0;

  Value proposal_;
  std::uint64_t proposal_hash_ = 0;
  Value pending_write_;  // resolved [state, msgs, recv] awaiting publication
  std::uint64_t pending_write_hash_ = 0;

  bool bound_ = false;
  sm::RegId client_id_ = -1;
  std::vector<sm::RegId> client_ids_;
  std::vector<sm::RegId> server_ids_;  // [i'][j] flattened as i' * n + (j - m)
};

// The m-process shared-memory program simulating `impl`. Declares the
// client and server registers up front; safe-agreement registers
// materialize on first use.
sm::SmProgram build_sm(const mp::MpImplementation& impl);
// Variant with an injected defect, for refinement-monitor tests.
sm::SmProgram build_sm_faulty(const mp::MpImplementation& impl, BgFault fault);

}  // namespace sim::bg
