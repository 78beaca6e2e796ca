#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sim/value.hpp"

namespace sim {

using InvId = std::int64_t;

// Call or return event of an object history.
struct Action {
  enum class Kind { Call, Ret };

  Kind kind = Kind::Call;
  InvId inv = 0;
  std::string method;  // calls only
  Value arg;           // calls only
  Value value;         // returns only

  static Action call(InvId inv, std::string method, Value arg) {
    Action a;
    a.kind = Kind::Call;
    a.inv = inv;
    a.method = std::move(method);
    a.arg = std::move(arg);
    return a;
  }

  static Action ret(InvId inv, Value v) {
    Action a;
    a.kind = Kind::Ret;
    a.inv = inv;
    a.value = std::move(v);
    return a;
  }

  bool is_call() const { return kind == Kind::Call; }
  bool is_ret() const { return kind == Kind::Ret; }

  friend bool operator==(const Action& a, const Action& b) {
    return a.kind == b.kind && a.inv == b.inv && a.method == b.method && a.arg == b.arg &&
           a.value == b.value;
  }
  friend bool operator!=(const Action& a, const Action& b) { return !(a == b); }

  std::uint64_t hash() const;

  // Space-free token used in trace files: call[3]write(1) / ret[3]ok
  std::string label() const;
  static std::optional<Action> parse_label(const std::string& text);
};

using History = std::vector<Action>;

// True iff every return matches an earlier unmatched call with the same
// invocation id, and no id is called twice.
bool history_well_formed(const History& h);

// Sequential: call immediately followed by its matching return.
bool history_sequential(const History& h);

std::uint64_t history_hash(const History& h);

// One action per line: `CALL <inv-id> <method> <arg>` / `RET <inv-id> <value>`.
std::string history_to_text(const History& h);
History history_from_text(const std::string& text);  // throws ParseError

std::ostream& operator<<(std::ostream& os, const Action& a);

}  // namespace sim
