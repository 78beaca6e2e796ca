#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sim/sm/types.hpp"

namespace sim::sm {

// The shared register file. Registers hold Values; a register still at
// its declared initial value contributes nothing to the digest, so lazy
// materialization never changes it.
class RegFile {
 public:
  RegId declare(const std::string& name, Pid owner, Value init);
  // Create-or-get; an existing register must agree on owner and init.
  RegId ensure(const std::string& name, Pid owner, const Value& init);
  RegId find(const std::string& name) const;  // -1 when absent

  int count() const { return static_cast<int>(regs_.size()); }
  const std::string& name(RegId r) const { return regs_[check(r)].name; }
  Pid owner(RegId r) const { return regs_[check(r)].owner; }
  const Value& get(RegId r) const { return regs_[check(r)].value; }
  void set(RegId r, Value v);

  // XOR-fold over registers holding non-initial values; independent of
  // declaration order.
  std::uint64_t digest() const { return digest_; }

 private:
  struct Reg {
    std::string name;
    Pid owner = 0;
    Value init;
    Value value;
    std::uint64_t contrib = 0;  // 0 while value == init
  };

  RegId check(RegId r) const;

  std::vector<Reg> regs_;
  std::unordered_map<std::string, RegId> index_;
  std::uint64_t digest_ = 0;
};

// One-statement window onto the register file, handed to SmMachine::step.
// Enforces the single-writer discipline and the one-shared-access-per-
// statement granularity; the runtime reads back what the statement did.
class Shared {
 public:
  Shared(RegFile& regs, Pid self) : regs_(regs), self_(self) {}

  // Counted shared read of any register.
  Value read(RegId r);
  // Free read of an own register: a single-writer register always holds
  // the owner's last write, so no shared access is modeled.
  Value own(RegId r) const;
  // Counted shared write; owner-only.
  void write(RegId r, Value v);

  // Local bookkeeping, not shared accesses.
  RegId ensure(const std::string& name, Pid owner, const Value& init);
  RegId find(const std::string& name) const { return regs_.find(name); }

  int accesses() const { return accesses_; }
  bool wrote() const { return wrote_; }
  RegId touched() const { return touched_; }

 private:
  RegFile& regs_;
  Pid self_;
  int accesses_ = 0;
  bool wrote_ = false;
  RegId touched_ = -1;
};

// Global state of a shared-memory program: the machines, the register
// file, per-process pending invocations and crash flags. Move-only;
// copying goes through clone() because machines are polymorphic.
class SmGlobalState {
 public:
  SmGlobalState() = default;
  explicit SmGlobalState(const SmProgram& program);
  SmGlobalState(SmGlobalState&&) = default;
  SmGlobalState& operator=(SmGlobalState&&) = default;

  SmGlobalState clone() const;

  int processes() const { return static_cast<int>(machines_.size()); }
  bool crashed(Pid p) const { return crashed_[checked(p)] != 0; }
  void crash(Pid p) { crashed_[checked(p)] = 1; }

  RegFile& regs() { return regs_; }
  const RegFile& regs() const { return regs_; }

  SmMachine& machine(Pid p) { return *machines_[checked(p)]; }
  const SmMachine& machine(Pid p) const { return *machines_[checked(p)]; }

  std::optional<InvId> pending(Pid p) const { return pending_[checked(p)]; }
  void set_pending(Pid p, std::optional<InvId> inv) { pending_[checked(p)] = inv; }

  std::uint64_t digest() const;

 private:
  int checked(Pid p) const;

  std::vector<std::unique_ptr<SmMachine>> machines_;
  std::vector<std::optional<InvId>> pending_;
  std::vector<char> crashed_;
  RegFile regs_;
};

}  // namespace sim::sm
