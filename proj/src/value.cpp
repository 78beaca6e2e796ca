#include "sim/value.hpp"

#include <cstdio>

#include "sim/error.hpp"

namespace sim {

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf, 16);
}

bool parse_hex16(std::string_view s, std::uint64_t& out) {
  if (s.size() != 16) return false;
  std::uint64_t v = 0;
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9')
      v |= static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f')
      v |= static_cast<std::uint64_t>(c - 'a' + 10);
    else
      return false;
  }
  out = v;
  return true;
}

const char* err_name(Err e) {
  switch (e) {
    case Err::PendingInvocation: return "PendingInvocation";
    case Err::UndefinedTransition: return "UndefinedTransition";
    case Err::ReturnNotEnabled: return "ReturnNotEnabled";
    case Err::ForeignMessage: return "ForeignMessage";
    case Err::MalformedHistory: return "MalformedHistory";
    case Err::IllegalAtomicStep: return "IllegalAtomicStep";
    case Err::DoublePropose: return "DoublePropose";
    case Err::Crashed: return "Crashed";
    case Err::NoEnabledStatement: return "NoEnabledStatement";
    case Err::SingleWriterViolation: return "SingleWriterViolation";
    case Err::UnreachableShape: return "UnreachableShape";
    case Err::RefinementViolation: return "RefinementViolation";
    case Err::DigestMismatch: return "DigestMismatch";
    case Err::ConfigError: return "ConfigError";
    case Err::ParseError: return "ParseError";
    case Err::Internal: return "Internal";
  }
  return "Unknown";
}

std::int64_t Value::as_int() const {
  if (!is_int()) fail(Err::Internal, "value is not an int: " + str());
  return std::get<std::int64_t>(rep_);
}

const std::string& Value::as_str() const {
  if (!is_str()) fail(Err::Internal, "value is not a string: " + str());
  return std::get<std::string>(rep_);
}

const Value::List& Value::as_list() const {
  if (!is_list()) fail(Err::Internal, "value is not a list: " + str());
  return std::get<List>(rep_);
}

const Value& Value::at(std::size_t i) const {
  const List& l = as_list();
  if (i >= l.size()) fail(Err::Internal, "list index out of range: " + str());
  return l[i];
}

std::size_t Value::size() const { return as_list().size(); }

bool operator<(const Value& a, const Value& b) {
  // Order across kinds: nil < int < string < list.
  if (a.rep_.index() != b.rep_.index()) return a.rep_.index() < b.rep_.index();
  return a.rep_ < b.rep_;
}

std::uint64_t Value::hash() const {
  switch (rep_.index()) {
    case 0: return 0x6e696cull;
    case 1: return hash_combine(0x1, splitmix64(static_cast<std::uint64_t>(std::get<std::int64_t>(rep_))));
    case 2: return hash_combine(0x2, fnv1a64(std::get<std::string>(rep_)));
    default: {
      std::uint64_t h = 0x4;
      for (const Value& v : std::get<List>(rep_)) h = hash_combine(h, v.hash());
      return h;
    }
  }
}

namespace {

bool bare_ok(const std::string& s) {
  if (s.empty()) return false;
  auto head = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  auto tail = [&](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '.' || c == '-';
  };
  if (!head(s[0])) return false;
  for (char c : s)
    if (!tail(c)) return false;
  return true;
}

void quote_into(const std::string& s, std::string& out) {
  out.push_back('"');
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
}

}  // namespace

std::string Value::str() const {
  switch (rep_.index()) {
    case 0: return "_";
    case 1: return std::to_string(std::get<std::int64_t>(rep_));
    case 2: {
      const std::string& s = std::get<std::string>(rep_);
      if (bare_ok(s) && s != "_") return s;
      std::string out;
      quote_into(s, out);
      return out;
    }
    default: {
      std::string out = "[";
      bool first = true;
      for (const Value& v : std::get<List>(rep_)) {
        if (!first) out.push_back(',');
        first = false;
        out += v.str();
      }
      out.push_back(']');
      return out;
    }
  }
}

namespace {

// Recursive-descent parser over the canonical form.
struct Parser {
  std::string_view s;
  std::size_t pos = 0;

  bool eof() const { return pos >= s.size(); }
  char peek() const { return s[pos]; }

  std::optional<Value> value() {
    if (eof()) return std::nullopt;
    char c = peek();
    if (c == '_') {
      ++pos;
      return Value::nil();
    }
    if (c == '[') return list();
    if (c == '"') return quoted();
    if (c == '-' || (c >= '0' && c <= '9')) return number();
    return bare();
  }

  std::optional<Value> list() {
    ++pos;  // '['
    Value::List items;
    if (!eof() && peek() == ']') {
      ++pos;
      return Value::list(std::move(items));
    }
    while (true) {
      auto v = value();
      if (!v) return std::nullopt;
      items.push_back(std::move(*v));
      if (eof()) return std::nullopt;
      char c = s[pos++];
      if (c == ']') return Value::list(std::move(items));
      if (c != ',') return std::nullopt;
    }
  }

  std::optional<Value> quoted() {
    ++pos;  // '"'
    std::string out;
    while (!eof()) {
      char c = s[pos++];
      if (c == '"') return Value(std::move(out));
      if (c == '\\') {
        if (eof()) return std::nullopt;
        c = s[pos++];
      }
      out.push_back(c);
    }
    return std::nullopt;
  }

  std::optional<Value> number() {
    std::size_t start = pos;
    if (peek() == '-') ++pos;
    std::size_t digits = 0;
    while (!eof() && peek() >= '0' && peek() <= '9') {
      ++pos;
      ++digits;
    }
    if (digits == 0) return std::nullopt;
    return Value(static_cast<std::int64_t>(std::stoll(std::string(s.substr(start, pos - start)))));
  }

  std::optional<Value> bare() {
    std::size_t start = pos;
    auto tail = [](char c) {
      return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
             c == '_' || c == '.' || c == '-';
    };
    while (!eof() && tail(peek())) ++pos;
    if (pos == start) return std::nullopt;
    return Value(std::string(s.substr(start, pos - start)));
  }
};

}  // namespace

std::optional<Value> Value::parse(std::string_view s) {
  Parser p{s};
  auto v = p.value();
  if (!v || p.pos != s.size()) return std::nullopt;
  return v;
}

}  // namespace sim
