#include "sim/sm/state.hpp"

#include "sim/error.hpp"

namespace sim::sm {

namespace {

std::uint64_t reg_contrib(const std::string& name, const Value& value, const Value& init) {
  if (value == init) return 0;
  return splitmix64(hash_combine(fnv1a64(name), value.hash()));
}

}  // namespace

RegId RegFile::check(RegId r) const {
  if (r < 0 || r >= count()) fail(Err::Internal, "register id out of range");
  return r;
}

RegId RegFile::declare(const std::string& name, Pid owner, Value init) {
  if (index_.count(name)) fail(Err::ConfigError, "duplicate register " + name);
  if (name.empty() || name.find(' ') != std::string::npos)
    fail(Err::ConfigError, "register names must be non-empty space-free tokens: '" + name + "'");
  Reg reg;
  reg.name = name;
  reg.owner = owner;
  reg.init = init;
  reg.value = std::move(init);
  regs_.push_back(std::move(reg));
  RegId id = count() - 1;
  index_.emplace(name, id);
  return id;
}

RegId RegFile::ensure(const std::string& name, Pid owner, const Value& init) {
  auto it = index_.find(name);
  if (it == index_.end()) return declare(name, owner, init);
  const Reg& reg = regs_[static_cast<std::size_t>(it->second)];
  if (reg.owner != owner || reg.init != init)
    fail(Err::ConfigError, "register " + name + " re-declared with different owner or init");
  return it->second;
}

RegId RegFile::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

void RegFile::set(RegId r, Value v) {
  Reg& reg = regs_[static_cast<std::size_t>(check(r))];
  std::uint64_t contrib = reg_contrib(reg.name, v, reg.init);
  digest_ ^= reg.contrib ^ contrib;
  reg.contrib = contrib;
  reg.value = std::move(v);
}

Value Shared::read(RegId r) {
  if (accesses_ >= 1)
    fail(Err::Internal, "statement makes a second shared access (read " + regs_.name(r) + ")");
  ++accesses_;
  touched_ = r;
  return regs_.get(r);
}

Value Shared::own(RegId r) const {
  if (regs_.owner(r) != self_)
    fail(Err::Internal, "free read of foreign register " + regs_.name(r));
  return regs_.get(r);
}

void Shared::write(RegId r, Value v) {
  if (regs_.owner(r) != self_)
    fail(Err::SingleWriterViolation, "process " + std::to_string(self_) + " writing " +
                                         regs_.name(r) + " owned by process " +
                                         std::to_string(regs_.owner(r)));
  if (accesses_ >= 1)
    fail(Err::Internal, "statement makes a second shared access (write " + regs_.name(r) + ")");
  ++accesses_;
  wrote_ = true;
  touched_ = r;
  regs_.set(r, std::move(v));
}

RegId Shared::ensure(const std::string& name, Pid owner, const Value& init) {
  return regs_.ensure(name, owner, init);
}

SmGlobalState::SmGlobalState(const SmProgram& program) {
  if (program.processes <= 0) fail(Err::ConfigError, "program needs at least one process");
  if (!program.make_machine) fail(Err::ConfigError, "program has no machine factory");
  for (const auto& decl : program.registers) regs_.declare(decl.name, decl.owner, decl.init);
  machines_.reserve(static_cast<std::size_t>(program.processes));
  for (Pid p = 0; p < program.processes; ++p) {
    auto m = program.make_machine(p);
    if (!m) fail(Err::ConfigError, "machine factory returned null for process " + std::to_string(p));
    machines_.push_back(std::move(m));
  }
  pending_.resize(machines_.size());
  crashed_.assign(machines_.size(), 0);
}

SmGlobalState SmGlobalState::clone() const {
  SmGlobalState g;
  g.machines_.reserve(machines_.size());
  for (const auto& m : machines_) g.machines_.push_back(m->clone());
  g.pending_ = pending_;
  g.crashed_ = crashed_;
  g.regs_ = regs_;
  return g;
}

int SmGlobalState::checked(Pid p) const {
  if (p < 0 || p >= processes()) fail(Err::Internal, "pid out of range");
  return p;
}

std::uint64_t SmGlobalState::digest() const {
  std::uint64_t h = fnv1a64("sm");
  for (std::size_t p = 0; p < machines_.size(); ++p) {
    h = hash_combine(h, machines_[p]->digest());
    h = hash_combine(h, pending_[p] ? static_cast<std::uint64_t>(*pending_[p]) + 1 : 0);
    h = hash_combine(h, static_cast<std::uint64_t>(crashed_[p]));
  }
  return hash_combine(h, regs_.digest());
}

}  // namespace sim::sm
