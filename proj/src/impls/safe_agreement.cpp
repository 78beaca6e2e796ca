#include "sim/impls/safe_agreement.hpp"

#include <map>
#include <set>

#include "sim/error.hpp"
#include "sim/sm/step.hpp"

namespace sim::impls {

namespace {

std::string reg_name(const std::string& prefix, const char* base, int p) {
  return prefix + base + "[" + std::to_string(p) + "]";
}

bool is_id_set(const Value& v) { return v.is_list(); }

// Both sorted ascending id lists.
bool subset(const Value::List& a, const Value::List& b) {
  std::size_t j = 0;
  for (const Value& x : a) {
    while (j < b.size() && b[j] < x) ++j;
    if (j == b.size() || !(b[j] == x)) return false;
  }
  return true;
}

// Index of the smallest (by containment, hence by size) non-empty set;
// -1 when none is written. Ties broken by index for determinism.
int smallest_set(const Value::List& sets) {
  int best = -1;
  for (int j = 0; j < static_cast<int>(sets.size()); ++j) {
    const Value& s = sets[static_cast<std::size_t>(j)];
    if (!is_id_set(s) || s.as_list().empty()) continue;
    if (best < 0 || s.as_list().size() < sets[static_cast<std::size_t>(best)].as_list().size())
      best = j;
  }
  return best;
}

// Decision over a snapshot of the set registers: the smallest non-empty
// set C decides iff every member's set is written and covers C.
int decide_from_sets(const Value::List& sets) {
  int c = smallest_set(sets);
  if (c < 0) return -1;
  const Value::List& core = sets[static_cast<std::size_t>(c)].as_list();
  for (const Value& jv : core) {
    const Value& sj = sets[static_cast<std::size_t>(jv.as_int())];
    if (!is_id_set(sj) || sj.as_list().empty() || !subset(core, sj.as_list())) return -1;
  }
  return static_cast<int>(core.front().as_int());  // min id of the core
}

}  // namespace

SaSession::SaSession(std::string prefix, int m, sm::Pid self)
    : prefix_(std::move(prefix)), m_(m), self_(self) {}

void SaSession::bind(sm::Shared& sh) {
  if (bound_) return;
  val_.resize(static_cast<std::size_t>(m_));
  id_.resize(static_cast<std::size_t>(m_));
  set_.resize(static_cast<std::size_t>(m_));
  for (int p = 0; p < m_; ++p) {
    val_[static_cast<std::size_t>(p)] = sh.ensure(reg_name(prefix_, "val", p), p, Value::nil());
    id_[static_cast<std::size_t>(p)] = sh.ensure(reg_name(prefix_, "id", p), p, Value::nil());
    set_[static_cast<std::size_t>(p)] =
        sh.ensure(reg_name(prefix_, "set", p), p, Value(Value::List{}));
  }
  bound_ = true;
}

bool SaSession::step_propose(sm::Shared& sh, const Value& proposal) {
  bind(sh);
  if (pc_ == Pc::Idle) {
    pc_ = Pc::WriteVal;
    c1_.assign(static_cast<std::size_t>(m_), Value());
    c2_.assign(static_cast<std::size_t>(m_), Value());
  }
  while (true) {
    switch (pc_) {
      case Pc::WriteVal:
        sh.write(val_[static_cast<std::size_t>(self_)], proposal);
        pc_ = Pc::WriteId;
        return false;
      case Pc::WriteId:
        sh.write(id_[static_cast<std::size_t>(self_)], Value(self_));
        pc_ = Pc::Collect1;
        k_ = 0;
        iters_ = 1;
        return false;
      case Pc::Collect1:
        if (k_ == m_) {
          pc_ = Pc::Collect2;
          k_ = 0;
          break;
        }
        if (k_ == self_) {
          c1_[static_cast<std::size_t>(k_)] = sh.own(id_[static_cast<std::size_t>(k_)]);
          ++k_;
          break;  // free read, keep hunting for the shared access
        }
        c1_[static_cast<std::size_t>(k_)] = sh.read(id_[static_cast<std::size_t>(k_)]);
        ++k_;
        return false;
      case Pc::Collect2:
        if (k_ == m_) {
          pc_ = Pc::Compare;
          break;
        }
        if (k_ == self_) {
          c2_[static_cast<std::size_t>(k_)] = sh.own(id_[static_cast<std::size_t>(k_)]);
          ++k_;
          break;
        }
        c2_[static_cast<std::size_t>(k_)] = sh.read(id_[static_cast<std::size_t>(k_)]);
        ++k_;
        return false;
      case Pc::Compare:
        if (c1_ == c2_) {
          pc_ = Pc::WriteSet;
          break;
        }
        if (++iters_ > m_)
          fail(Err::UnreachableShape, "double collect past " + std::to_string(m_) + " iterations");
        pc_ = Pc::Collect1;
        k_ = 0;
        break;
      case Pc::WriteSet: {
        Value::List ids;
        for (int j = 0; j < m_; ++j) {
          if (!c1_[static_cast<std::size_t>(j)].is_nil()) ids.push_back(Value(j));
        }
        sh.write(set_[static_cast<std::size_t>(self_)], Value(std::move(ids)));
        pc_ = Pc::Done;
        return true;
      }
      case Pc::Done:
        fail(Err::DoublePropose, "propose already completed");
      case Pc::Idle:
        fail(Err::Internal, "unreachable");
    }
  }
}

bool SaSession::step_resolve(sm::Shared& sh, Value& out) {
  bind(sh);
  if (rpc_ == Rpc::Idle) {
    rpc_ = Rpc::ReadSets;
    rk_ = 0;
    min_ = -1;
    sets_.assign(static_cast<std::size_t>(m_), Value());
  }
  while (true) {
    switch (rpc_) {
      case Rpc::ReadSets:
        if (rk_ == m_) {
          rpc_ = Rpc::Decide;
          break;
        }
        if (rk_ == self_) {
          sets_[static_cast<std::size_t>(rk_)] = sh.own(set_[static_cast<std::size_t>(rk_)]);
          ++rk_;
          break;
        }
        sets_[static_cast<std::size_t>(rk_)] = sh.read(set_[static_cast<std::size_t>(rk_)]);
        ++rk_;
        return false;
      case Rpc::Decide:
        min_ = decide_from_sets(sets_);
        if (min_ < 0) {
          out = Value::nil();
          rpc_ = Rpc::Idle;
          return true;
        }
        if (min_ == self_) {
          out = sh.own(val_[static_cast<std::size_t>(min_)]);
          rpc_ = Rpc::Idle;
          return true;
        }
        rpc_ = Rpc::ReadVal;
        break;
      case Rpc::ReadVal:
        out = sh.read(val_[static_cast<std::size_t>(min_)]);
        rpc_ = Rpc::Idle;
        return true;
      case Rpc::Idle:
        fail(Err::Internal, "unreachable");
    }
  }
}

std::uint64_t SaSession::digest() const {
  std::uint64_t h = fnv1a64("sa-session");
  h = hash_combine(h, static_cast<std::uint64_t>(pc_));
  h = hash_combine(h, static_cast<std::uint64_t>(rpc_));
  h = hash_combine(h, static_cast<std::uint64_t>(k_));
  h = hash_combine(h, static_cast<std::uint64_t>(rk_));
  h = hash_combine(h, static_cast<std::uint64_t>(iters_));
  h = hash_combine(h, static_cast<std::uint64_t>(min_ + 1));
  h = hash_combine(h, Value(c1_).hash());
  h = hash_combine(h, Value(c2_).hash());
  return hash_combine(h, Value(sets_).hash());
}

Value sa_resolve_now(const sm::RegFile& regs, const std::string& prefix, int m) {
  Value::List sets;
  for (int j = 0; j < m; ++j) {
    sm::RegId r = regs.find(reg_name(prefix, "set", j));
    sets.push_back(r < 0 ? Value(Value::List{}) : regs.get(r));
  }
  int min = decide_from_sets(sets);
  if (min < 0) return Value::nil();
  sm::RegId v = regs.find(reg_name(prefix, "val", min));
  return v < 0 ? Value::nil() : regs.get(v);
}

bool sa_sets_comparable(const sm::RegFile& regs, const std::string& prefix, int m) {
  std::vector<Value::List> written;
  for (int j = 0; j < m; ++j) {
    sm::RegId r = regs.find(reg_name(prefix, "set", j));
    if (r < 0) continue;
    const Value& v = regs.get(r);
    if (v.is_list() && !v.as_list().empty()) written.push_back(v.as_list());
  }
  for (std::size_t a = 0; a < written.size(); ++a) {
    for (std::size_t b = a + 1; b < written.size(); ++b) {
      if (!subset(written[a], written[b]) && !subset(written[b], written[a])) return false;
    }
  }
  return true;
}

namespace {

class SaMachine final : public sm::SmMachine {
 public:
  SaMachine(sm::Pid self, int m) : self_(self), m_(m), sess_("", m, self) {}

  std::unique_ptr<sm::SmMachine> clone() const override {
    return std::make_unique<SaMachine>(*this);
  }

  bool idle() const override { return mode_ == Mode::Idle; }

  bool accepts_call(const std::string& method, const Value&) const override {
    if (mode_ != Mode::Idle) return false;
    if (method == "propose") return !sess_.propose_started();
    if (method == "resolve") return sess_.propose_done();
    return false;
  }

  std::optional<Value> ret_value() const override { return ret_; }

  void on_call(const Action& call) override {
    if (mode_ != Mode::Idle) fail(Err::PendingInvocation, "machine is mid-method");
    if (call.method == "propose") {
      if (sess_.propose_started())
        fail(Err::DoublePropose, "process " + std::to_string(self_) + " proposed twice");
      mode_ = Mode::Propose;
      arg_ = call.arg;
    } else if (call.method == "resolve") {
      if (!sess_.propose_done())
        fail(Err::UndefinedTransition, "resolve before this process completed its propose");
      mode_ = Mode::Resolve;
    } else {
      fail(Err::UndefinedTransition, "unknown method " + call.method);
    }
  }

  void on_ret() override {
    mode_ = Mode::Idle;
    ret_.reset();
  }

  Value step(sm::Shared& sh) override {
    switch (mode_) {
      case Mode::Propose:
        if (sess_.step_propose(sh, arg_)) {
          ret_ = Value("done");
          return Value(sess_.iterations());  // annotation on the set write
        }
        return {};
      case Mode::Resolve: {
        Value out;
        if (sess_.step_resolve(sh, out)) ret_ = out;
        return {};
      }
      case Mode::Idle:
        break;
    }
    fail(Err::Internal, "step on an idle machine");
  }

  std::uint64_t digest() const override {
    std::uint64_t h = hash_combine(fnv1a64("sa-machine"), static_cast<std::uint64_t>(self_));
    h = hash_combine(h, static_cast<std::uint64_t>(mode_));
    h = hash_combine(h, arg_.hash());
    h = hash_combine(h, ret_ ? ret_->hash() + 1 : 0);
    return hash_combine(h, sess_.digest());
  }

 private:
  enum class Mode { Idle, Propose, Resolve };

  sm::Pid self_;
  int m_;
  SaSession sess_;
  Mode mode_ = Mode::Idle;
  Value arg_;
  std::optional<Value> ret_;
};

class SaExploreMonitor final : public sm::SmMonitor {
 public:
  explicit SaExploreMonitor(int m) : m_(m) {}

  std::unique_ptr<sm::SmMonitor> clone() const override {
    return std::make_unique<SaExploreMonitor>(*this);
  }

  std::uint64_t digest() const override {
    std::uint64_t h = decided_ ? splitmix64(decided_->hash() + 1) : 0;
    for (const Value& v : proposals_) h ^= splitmix64(v.hash() ^ 0x70726f70ull);
    return h;
  }

  bool on_step(const sm::SmGlobalState& g, const sm::SmStepRecord& rec) override {
    using Tag = sm::SmStepRecord::Tag;
    switch (rec.tag) {
      case Tag::Call:
        open_[rec.action.inv] = rec.action.method;
        if (rec.action.method == "propose") proposals_.insert(rec.action.arg);
        break;
      case Tag::Ret: {
        auto it = open_.find(rec.action.inv);
        std::string method = it == open_.end() ? "" : it->second;
        if (it != open_.end()) open_.erase(it);
        if (method == "resolve" && !rec.action.value.is_nil()) {
          const Value& v = rec.action.value;
          if (!proposals_.count(v)) {
            violation_ = "resolve returned " + v.str() + " which nobody proposed";
          } else if (decided_ && *decided_ != v) {
            violation_ = "resolve returned " + v.str() + " after " + decided_->str();
          } else {
            decided_ = v;
          }
        }
        break;
      }
      case Tag::Write:
        if (rec.reg.rfind("set[", 0) == 0) {
          if (!sa_sets_comparable(g.regs(), "", m_))
            violation_ = "incomparable participant sets after writing " + rec.reg;
          else if (rec.note.is_int() && rec.note.as_int() > m_)
            violation_ = "double collect ran " + rec.note.str() + " iterations";
        }
        break;
      default:
        break;
    }
    return violation_.empty();
  }

  std::string describe_violation() const override { return violation_; }

 private:
  int m_;
  std::optional<Value> decided_;
  std::set<Value> proposals_;
  std::map<InvId, std::string> open_;
  std::string violation_;
};

}  // namespace

sm::SmProgram make_sa_program(int m) {
  if (m < 1) fail(Err::ConfigError, "safe agreement needs at least one process");
  sm::SmProgram prog;
  prog.name = "safe_agreement";
  prog.processes = m;
  for (int p = 0; p < m; ++p) {
    prog.registers.push_back({reg_name("", "val", p), p, Value::nil()});
    prog.registers.push_back({reg_name("", "id", p), p, Value::nil()});
    prog.registers.push_back({reg_name("", "set", p), p, Value(Value::List{})});
  }
  prog.make_machine = [m](sm::Pid p) { return std::make_unique<SaMachine>(p, m); };
  return prog;
}

std::unique_ptr<sm::SmMonitor> make_sa_monitor(int m) {
  return std::make_unique<SaExploreMonitor>(m);
}

std::optional<std::string> sa_check_terminal_liveness(const sm::SmGlobalState& g, int m) {
  const sm::RegFile& regs = g.regs();
  auto reg_val = [&](const char* base, int p) {
    sm::RegId r = regs.find(reg_name("", base, p));
    return r < 0 ? Value::nil() : regs.get(r);
  };
  auto set_written = [&](int p) {
    Value s = reg_val("set", p);
    return s.is_list() && !s.as_list().empty();
  };
  // A propose that advertised its id but never published a set may still
  // be pending (or died); resolves are then allowed to stay unresolved.
  bool maybe_pending = false;
  for (int p = 0; p < m; ++p) {
    if (!reg_val("id", p).is_nil() && !set_written(p)) maybe_pending = true;
  }
  Value reg_decision = sa_resolve_now(regs, "", m);
  std::optional<Value> seen;
  for (sm::Pid p = 0; p < m; ++p) {
    if (g.crashed(p) || !set_written(p)) continue;
    sm::SmGlobalState probe = g.clone();
    if (!probe.machine(p).idle())
      return "terminal state leaves live process " + std::to_string(p) + " mid-method";
    sm_call(probe, p, Action::call(7000 + p, "resolve", Value::nil()));
    // Resolve is loop-free: m-1 set reads, a decision, at most one value read.
    std::optional<Value> got;
    for (int s = 0; s < m + 3 && !got; ++s) {
      got = probe.machine(p).ret_value();
      if (!got) sm_step(probe, p);
    }
    if (!got) got = probe.machine(p).ret_value();
    if (!got) return "resolve by " + std::to_string(p) + " exceeded its loop-free bound";
    if (!maybe_pending && got->is_nil())
      return "resolve by " + std::to_string(p) + " unresolved with no pending propose";
    if (!got->is_nil()) {
      if (seen && *seen != *got)
        return "resolves disagree: " + seen->str() + " vs " + got->str();
      if (!reg_decision.is_nil() && *got != reg_decision)
        return "resolve " + got->str() + " contradicts register decision " + reg_decision.str();
      seen = *got;
    }
  }
  return std::nullopt;
}

}  // namespace sim::impls
