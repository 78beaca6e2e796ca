#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sim/digest.hpp"

namespace sim {

// Universal value type for local states, message payloads, register
// contents and method arguments. Canonical printing is space-free so
// values can appear as single tokens in trace files.
class Value {
 public:
  using List = std::vector<Value>;

  Value() : rep_(std::monostate{}) {}
  Value(std::int64_t v) : rep_(v) {}
  Value(int v) : rep_(static_cast<std::int64_t>(v)) {}
  Value(const char* s) : rep_(std::string(s)) {}
  Value(std::string s) : rep_(std::move(s)) {}
  Value(List l) : rep_(std::move(l)) {}

  static Value nil() { return Value(); }
  static Value list(List l) { return Value(std::move(l)); }

  bool is_nil() const { return std::holds_alternative<std::monostate>(rep_); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(rep_); }
  bool is_str() const { return std::holds_alternative<std::string>(rep_); }
  bool is_list() const { return std::holds_alternative<List>(rep_); }

  std::int64_t as_int() const;
  const std::string& as_str() const;
  const List& as_list() const;

  // List element access with bounds checking.
  const Value& at(std::size_t i) const;
  std::size_t size() const;

  friend bool operator==(const Value& a, const Value& b) { return a.rep_ == b.rep_; }
  friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }
  friend bool operator<(const Value& a, const Value& b);

  std::uint64_t hash() const;

  // Canonical form: `_` for nil, decimal for ints, bare or quoted strings,
  // `[a,b,c]` for lists. Contains no spaces.
  std::string str() const;

  static std::optional<Value> parse(std::string_view s);

 private:
  std::variant<std::monostate, std::int64_t, std::string, List> rep_;
};

}  // namespace sim
