#include "sim/bg/machine.hpp"

#include <algorithm>
#include <utility>

#include "sim/error.hpp"

namespace sim::bg {

using mp::DeltaInput;
using mp::Message;
using mp::MpImplementation;
using mp::MsgPool;
using mp::Uid;

std::string client_reg_name(int i) { return "client[" + std::to_string(i) + "]"; }

std::string server_reg_name(int i, mp::Pid j) {
  return "server[" + std::to_string(i) + "][" + std::to_string(j) + "]";
}

std::string sa_prefix(mp::Pid j, int r) {
  return "sa[" + std::to_string(j) + "][" + std::to_string(r) + "].";
}

Value encode_msgs(const MsgPool& pool) {
  Value::List out;
  out.reserve(pool.size());
  for (const Message& m : pool.to_vector()) {
    out.push_back(Value(Value::List{Value(m.src), Value(m.dst),
                                    Value(static_cast<std::int64_t>(m.uid.seq)), m.payload}));
  }
  return Value(std::move(out));
}

std::vector<Message> decode_msg_entries(const Value& msgs) {
  if (!msgs.is_list()) fail(Err::UnreachableShape, "message list is not a list");
  std::vector<Message> out;
  out.reserve(msgs.size());
  for (std::size_t k = 0; k < msgs.size(); ++k) {
    const Value& e = msgs.at(k);
    if (!e.is_list() || e.size() != 4 || !e.at(0).is_int() || !e.at(1).is_int() ||
        !e.at(2).is_int()) {
      fail(Err::UnreachableShape, "malformed message entry " + e.str());
    }
    Message m;
    m.src = static_cast<mp::Pid>(e.at(0).as_int());
    m.dst = static_cast<mp::Pid>(e.at(1).as_int());
    m.payload = e.at(3);
    m.uid = Uid{m.src, static_cast<std::uint32_t>(e.at(2).as_int())};
    if (m.uid.seq != k) fail(Err::UnreachableShape, "message list is not in send order");
    out.push_back(std::move(m));
  }
  return out;
}

MsgPool decode_msgs(const Value& msgs) {
  MsgPool pool;
  for (Message& m : decode_msg_entries(msgs)) pool = pool.append(std::move(m));
  return pool;
}

namespace {

void check_pair(const Value& v) {
  if (!v.is_list() || v.size() < 2) {
    fail(Err::UnreachableShape, "register does not hold [state, msgs]: " + v.str());
  }
}

// Appends sends to a msgs list, assigning position uids.
Value::List append_sends(const Value& msgs, mp::Pid src, const std::vector<mp::Send>& sends) {
  Value::List out = msgs.as_list();
  for (const mp::Send& s : sends) {
    out.push_back(Value(Value::List{Value(src), Value(s.dst),
                                    Value(static_cast<std::int64_t>(out.size())), s.payload}));
  }
  return out;
}

bool uid_less(const Message& a, const Message& b) { return a.uid < b.uid; }

}  // namespace

Value act_step(const MpImplementation& impl, mp::Pid i, const Value& client_reg,
               const Action& a) {
  check_pair(client_reg);
  DeltaInput in = a.is_call() ? DeltaInput::call(a) : DeltaInput::ret(a);
  mp::DeltaResult res = impl.delta(i, client_reg.at(0), in);
  if (!res) {
    fail(Err::UndefinedTransition,
         "client " + std::to_string(i) + " has no transition for " + a.label());
  }
  Value::List reg{res->first, Value(append_sends(client_reg.at(1), i, res->second))};
  return Value(std::move(reg));
}

Value most_recent(const std::vector<Value>& entries) {
  if (entries.empty()) fail(Err::UnreachableShape, "no server entries");
  const Value* best = nullptr;
  for (const Value& e : entries) {
    if (!e.is_list() || e.size() != 3 || !e.at(2).is_int()) {
      fail(Err::UnreachableShape, "register does not hold [state, msgs, sn]: " + e.str());
    }
    if (!best || e.at(2).as_int() > best->at(2).as_int()) {
      best = &e;
    } else if (e.at(2).as_int() == best->at(2).as_int() && e != *best) {
      fail(Err::UnreachableShape,
           "entries disagree at step " + e.at(2).str() + ": " + best->str() + " vs " + e.str());
    }
  }
  return *best;
}

std::vector<Message> collect_messages(const sm::RegFile& regs, const MpImplementation& impl,
                                      mp::Pid target) {
  const int m = impl.clients;
  const int n = impl.servers;
  auto value_of = [&regs](const std::string& name) {
    sm::RegId r = regs.find(name);
    if (r < 0) fail(Err::Internal, "missing register " + name);
    return regs.get(r);
  };
  std::vector<Message> out;
  std::unordered_set<std::uint64_t> seen;
  auto take = [&](const Value& msgs) {
    for (Message& msg : decode_msg_entries(msgs)) {
      if (msg.dst != target) continue;
      if (seen.insert(msg.uid.pack()).second) out.push_back(std::move(msg));
    }
  };
  for (int k = 0; k < m; ++k) take(value_of(client_reg_name(k)).at(1));
  for (int k = m; k < m + n; ++k) {
    std::vector<Value> group;
    group.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) group.push_back(value_of(server_reg_name(i, k)));
    take(most_recent(group).at(1));
  }
  std::sort(out.begin(), out.end(), uid_less);
  return out;
}

std::pair<Value, std::vector<Uid>> internal_step(const sm::RegFile& regs,
                                                 const MpImplementation& impl, mp::Pid target,
                                                 sm::Pid executor) {
  std::vector<Message> msgs = collect_messages(regs, impl, target);
  const std::string stored_name =
      target < impl.clients ? client_reg_name(target) : server_reg_name(executor, target);
  sm::RegId rid = regs.find(stored_name);
  if (rid < 0) fail(Err::Internal, "missing register " + stored_name);
  const Value& stored = regs.get(rid);
  check_pair(stored);
  std::vector<const Message*> ptrs;
  ptrs.reserve(msgs.size());
  for (const Message& m : msgs) ptrs.push_back(&m);
  mp::DeltaResult res = impl.delta(target, stored.at(0), DeltaInput::recv_set(std::move(ptrs)));
  if (!res) {
    fail(Err::UndefinedTransition,
         "process " + std::to_string(target) + " rejects the collected messages");
  }
  Value::List reg{res->first, Value(append_sends(stored.at(1), target, res->second))};
  std::vector<Uid> uids;
  uids.reserve(msgs.size());
  for (const Message& m : msgs) uids.push_back(m.uid);
  return {Value(std::move(reg)), std::move(uids)};
}

BgMachine::BgMachine(std::shared_ptr<const MpImplementation> impl, sm::Pid self, BgFault fault)
    : impl_(std::move(impl)), self_(self), fault_(fault) {
  const int m = impl_->clients;
  const int n = impl_->servers;
  client_val_ = Value(Value::List{impl_->initial_state, Value(Value::List{})});
  r_.assign(static_cast<std::size_t>(n), 0);
  resolved_.assign(static_cast<std::size_t>(n), 1);
  sa_.resize(static_cast<std::size_t>(n));
  reads_.reserve(static_cast<std::size_t>(m + m * n));
  for (int k = 0; k < m; ++k) reads_.push_back(ReadSlot{false, k, 0});
  for (int k = m; k < m + n; ++k) {
    for (int i = 0; i < m; ++i) reads_.push_back(ReadSlot{true, i, k});
  }
}

std::unique_ptr<sm::SmMachine> BgMachine::clone() const {
  return std::unique_ptr<sm::SmMachine>(new BgMachine(*this));
}

int BgMachine::server_slot(mp::Pid j) const {
  if (j < impl_->clients || j >= impl_->total()) {
    fail(Err::Internal, "not a server id: " + std::to_string(j));
  }
  return j - impl_->clients;
}

bool BgMachine::accepts_call(const std::string& method, const Value& arg) const {
  if (phase_ != Phase::Idle) return false;
  DeltaInput in = DeltaInput::call(Action::call(0, method, arg));
  return impl_->delta(self_, client_val_.at(0), in).has_value();
}

std::optional<Value> BgMachine::ret_value() const {
  if (phase_ == Phase::RetDone) return ret_y_;
  return std::nullopt;
}

void BgMachine::on_call(const Action& call) {
  if (phase_ != Phase::Idle) fail(Err::PendingInvocation, "machine is mid-invocation");
  call_ = call;
  phase_ = Phase::CallWrite;
}

void BgMachine::on_ret() {
  if (phase_ != Phase::RetDone) fail(Err::ReturnNotEnabled, "machine is not at its return point");
  phase_ = Phase::Idle;
  call_ = Action();
  ret_y_ = Value();
  old_client_ = Value();
  old_client_hash_ = 0;
}

void BgMachine::bind_ids(sm::Shared& sh) {
  if (bound_) return;
  const int m = impl_->clients;
  const int n = impl_->servers;
  auto id_of = [&sh](const std::string& name) {
    sm::RegId r = sh.find(name);
    if (r < 0) fail(Err::Internal, "missing register " + name);
    return r;
  };
  client_ids_.reserve(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) client_ids_.push_back(id_of(client_reg_name(k)));
  server_ids_.reserve(static_cast<std::size_t>(m * n));
  for (int i = 0; i < m; ++i) {
    for (int k = m; k < m + n; ++k) server_ids_.push_back(id_of(server_reg_name(i, k)));
  }
  client_id_ = client_ids_[static_cast<std::size_t>(self_)];
  bound_ = true;
}

void BgMachine::begin_collect(mp::Pid target) {
  target_ = target;
  read_idx_ = 0;
  group_.clear();
  group_hash_ = 0;
  collected_.clear();
  collected_uids_.clear();
  collected_hash_ = 0;
  phase_ = Phase::Collect;
}

void BgMachine::take_messages(const Value& msgs) {
  for (Message& msg : decode_msg_entries(msgs)) {
    if (msg.dst != target_) continue;
    if (!collected_uids_.insert(msg.uid.pack()).second) continue;
    collected_hash_ = hash_combine(collected_hash_, msg.hash());
    collected_.push_back(std::move(msg));
  }
}

void BgMachine::consume_read(const ReadSlot& slot, const Value& v) {
  if (!slot.server) {
    check_pair(v);
    take_messages(v.at(1));
    return;
  }
  group_.push_back(v);
  group_hash_ = hash_combine(group_hash_, v.hash());
  if (static_cast<int>(group_.size()) == impl_->clients) {
    take_messages(most_recent(group_).at(1));
    group_.clear();
    group_hash_ = 0;
  }
}

bool BgMachine::collect_reads(sm::Shared& sh) {
  const int n = impl_->servers;
  while (read_idx_ < reads_.size()) {
    const ReadSlot& slot = reads_[read_idx_];
    sm::RegId reg = slot.server
                        ? server_ids_[static_cast<std::size_t>(slot.owner * n +
                                                               server_slot(slot.proc))]
                        : client_ids_[static_cast<std::size_t>(slot.owner)];
    const bool foreign = slot.owner != self_;
    consume_read(slot, foreign ? sh.read(reg) : sh.own(reg));
    ++read_idx_;
    if (foreign) return true;
  }
  return false;
}

std::pair<Value, Value> BgMachine::finish_step(const Value& stored) {
  check_pair(stored);
  std::sort(collected_.begin(), collected_.end(), uid_less);
  std::vector<const Message*> ptrs;
  ptrs.reserve(collected_.size());
  for (const Message& m : collected_) ptrs.push_back(&m);
  mp::DeltaResult res =
      impl_->delta(target_, stored.at(0), DeltaInput::recv_set(std::move(ptrs)));
  if (!res) {
    fail(Err::UndefinedTransition,
         "process " + std::to_string(target_) + " rejects the collected messages");
  }
  Value::List reg{res->first, Value(append_sends(stored.at(1), target_, res->second))};
  Value::List recv;
  recv.reserve(collected_.size());
  for (const Message& m : collected_) {
    recv.push_back(Value(static_cast<std::int64_t>(m.uid.pack())));
  }
  collected_.clear();
  collected_uids_.clear();
  collected_hash_ = 0;
  return {Value(std::move(reg)), Value(std::move(recv))};
}

void BgMachine::advance_server() {
  ++j_;
  phase_ = Phase::ServerScan;
}

Value BgMachine::make_note(mp::Pid target, Value recv) const {
  return Value(Value::List{Value("int"), Value(target), std::move(recv)});
}

Value BgMachine::step(sm::Shared& sh) {
  bind_ids(sh);
  // Runs local work until one shared access completes the statement;
  // cases that perform the access return, cases that only prepare fall
  // through to the next phase within the same statement.
  while (true) {
    switch (phase_) {
      case Phase::Idle:
      case Phase::RetDone:
        fail(Err::NoEnabledStatement, "process " + std::to_string(self_) + " has no statement");
      case Phase::CallWrite: {
        Value v = act_step(*impl_, self_, sh.own(client_id_), call_);
        if (fault_ == BgFault::DropSend && v.at(1).size() > 0) {
          Value::List reg = v.as_list();
          Value::List msgs = reg[1].as_list();
          msgs.pop_back();
          reg[1] = Value(std::move(msgs));
          v = Value(std::move(reg));
        }
        client_val_ = v;
        sh.write(client_id_, std::move(v));
        phase_ = Phase::LoopHead;
        return Value();
      }
      case Phase::LoopHead: {
        Value cv = sh.own(client_id_);
        if (auto y = impl_->ret_enabled(self_, cv.at(0))) {
          // Pure-local statement: save the pre-return state.
          old_client_ = std::move(cv);
          old_client_hash_ = old_client_.hash();
          ret_y_ = *y;
          phase_ = Phase::RetWrite;
          return Value();
        }
        begin_collect(self_);
        break;
      }
      case Phase::RetWrite: {
        Value v = act_step(*impl_, self_, old_client_, Action::ret(call_.inv, ret_y_));
        client_val_ = v;
        sh.write(client_id_, std::move(v));
        phase_ = Phase::RetDone;
        return Value();
      }
      case Phase::Collect:
        if (collect_reads(sh)) return Value();
        phase_ = target_ == self_ ? Phase::ClientWrite : Phase::SaPropose;
        break;
      case Phase::ClientWrite: {
        auto [reg, recv] = finish_step(sh.own(client_id_));
        client_val_ = reg;
        sh.write(client_id_, std::move(reg));
        j_ = impl_->clients;
        phase_ = Phase::ServerScan;
        return make_note(self_, std::move(recv));
      }
      case Phase::ServerScan: {
        if (j_ == impl_->total()) {
          phase_ = Phase::LoopHead;
          break;
        }
        if (resolved_[static_cast<std::size_t>(server_slot(j_))]) {
          begin_collect(j_);
          break;
        }
        phase_ = Phase::SaResolve;
        break;
      }
      case Phase::SaPropose: {
        const auto slot = static_cast<std::size_t>(server_slot(j_));
        if (proposal_.is_nil()) {
          auto [reg, recv] =
              finish_step(sh.own(server_ids_[static_cast<std::size_t>(self_) * impl_->servers +
                                             slot]));
          Value::List prop{reg.at(0), reg.at(1), std::move(recv)};
          proposal_ = Value(std::move(prop));
          proposal_hash_ = proposal_.hash();
          r_[slot] += 1;
          if (fault_ == BgFault::UnagreedWrite) {
            // Skip agreement and publish the own proposal directly.
            pending_write_ = std::move(proposal_);
            pending_write_hash_ = proposal_hash_;
            proposal_ = Value();
            proposal_hash_ = 0;
            phase_ = Phase::ServerWrite;
            break;
          }
          resolved_[slot] = 0;
          sa_[slot] = impls::SaSession(sa_prefix(j_, r_[slot]), impl_->clients, self_);
        }
        if (sa_[slot].step_propose(sh, proposal_)) {
          proposal_ = Value();
          proposal_hash_ = 0;
          advance_server();
        }
        return Value();
      }
      case Phase::SaResolve: {
        const auto slot = static_cast<std::size_t>(server_slot(j_));
        Value out;
        if (!sa_[slot].step_resolve(sh, out)) return Value();
        if (out.is_nil()) {
          advance_server();
          return Value();
        }
        if (!out.is_list() || out.size() != 3) {
          fail(Err::UnreachableShape, "agreed value is not a step proposal: " + out.str());
        }
        resolved_[slot] = 1;
        pending_write_ = std::move(out);
        pending_write_hash_ = pending_write_.hash();
        phase_ = Phase::ServerWrite;
        return Value();
      }
      case Phase::ServerWrite: {
        const auto slot = static_cast<std::size_t>(server_slot(j_));
        Value note = make_note(j_, pending_write_.at(2));
        Value::List entry{pending_write_.at(0), pending_write_.at(1), Value(r_[slot])};
        sh.write(server_ids_[static_cast<std::size_t>(self_) * impl_->servers + slot],
                 Value(std::move(entry)));
        pending_write_ = Value();
        pending_write_hash_ = 0;
        advance_server();
        return note;
      }
    }
  }
}

bool BgMachine::mid_propose(mp::Pid j) const {
  const auto slot = static_cast<std::size_t>(server_slot(j));
  return sa_[slot].propose_started() && !sa_[slot].propose_done();
}

std::optional<mp::Pid> BgMachine::collecting_for() const {
  if (phase_ == Phase::Collect) return target_;
  return std::nullopt;
}

std::optional<mp::Pid> BgMachine::proposing_to() const {
  if (phase_ == Phase::SaPropose) return j_;
  return std::nullopt;
}

std::uint64_t BgMachine::digest() const {
  std::uint64_t h = fnv1a64("bg-machine");
  h = hash_combine(h, static_cast<std::uint64_t>(phase_));
  h = hash_combine(h, static_cast<std::uint64_t>(self_));
  h = hash_combine(h, static_cast<std::uint64_t>(fault_));
  h = hash_combine(h, call_.hash());
  h = hash_combine(h, ret_y_.hash());
  h = hash_combine(h, old_client_hash_);
  h = hash_combine(h, static_cast<std::uint64_t>(j_));
  for (int r : r_) h = hash_combine(h, static_cast<std::uint64_t>(r));
  for (char c : resolved_) h = hash_combine(h, c ? 1 : 2);
  for (const impls::SaSession& s : sa_) h = hash_combine(h, s.digest());
  h = hash_combine(h, static_cast<std::uint64_t>(target_));
  h = hash_combine(h, static_cast<std::uint64_t>(read_idx_));
  h = hash_combine(h, group_hash_);
  h = hash_combine(h, collected_hash_);
  h = hash_combine(h, proposal_hash_);
  return hash_combine(h, pending_write_hash_);
}

namespace {

sm::SmProgram build_program(const MpImplementation& impl, BgFault fault) {
  if (impl.clients < 1) fail(Err::ConfigError, "simulation needs at least one client");
  if (!impl.delta || !impl.pending || !impl.ret_enabled) {
    fail(Err::ConfigError, "implementation is missing transition functions");
  }
  auto shared = std::make_shared<const MpImplementation>(impl);
  sm::SmProgram prog;
  prog.name = "bg(" + impl.name + ")";
  if (fault == BgFault::DropSend) prog.name += "!drop";
  if (fault == BgFault::UnagreedWrite) prog.name += "!unagreed";
  prog.processes = impl.clients;
  const Value empty_msgs{Value::List{}};
  for (int i = 0; i < impl.clients; ++i) {
    prog.registers.push_back(sm::RegisterDecl{
        client_reg_name(i), i, Value(Value::List{impl.initial_state, empty_msgs})});
  }
  for (int i = 0; i < impl.clients; ++i) {
    for (int j = impl.clients; j < impl.total(); ++j) {
      prog.registers.push_back(sm::RegisterDecl{
          server_reg_name(i, j), i,
          Value(Value::List{impl.initial_state, empty_msgs, Value(0)})});
    }
  }
  prog.make_machine = [shared, fault](sm::Pid p) {
    return std::make_unique<BgMachine>(shared, p, fault);
  };
  return prog;
}

}  // namespace

sm::SmProgram build_sm(const MpImplementation& impl) {
  return build_program(impl, BgFault::None);
}

sm::SmProgram build_sm_faulty(const MpImplementation& impl, BgFault fault) {
  return build_program(impl, fault);
}

}  // namespace sim::bg
