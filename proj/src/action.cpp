#include "sim/action.hpp"

#include <ostream>
#include <set>
#include <sstream>

#include "sim/error.hpp"

namespace sim {

std::uint64_t Action::hash() const {
  std::uint64_t h = kind == Kind::Call ? 0xc411ull : 0x4e7ull;
  h = hash_combine(h, static_cast<std::uint64_t>(inv));
  h = hash_combine(h, fnv1a64(method));
  h = hash_combine(h, arg.hash());
  h = hash_combine(h, value.hash());
  return h;
}

std::string Action::label() const {
  std::string out;
  if (is_call()) {
    out = "call[" + std::to_string(inv) + "]" + method + "(" + arg.str() + ")";
  } else {
    out = "ret[" + std::to_string(inv) + "]" + value.str();
  }
  return out;
}

std::optional<Action> Action::parse_label(const std::string& text) {
  auto parse_inv = [](const std::string& s, std::size_t& pos) -> std::optional<InvId> {
    if (pos >= s.size() || s[pos] != '[') return std::nullopt;
    std::size_t close = s.find(']', pos);
    if (close == std::string::npos) return std::nullopt;
    try {
      InvId inv = std::stoll(s.substr(pos + 1, close - pos - 1));
      pos = close + 1;
      return inv;
    } catch (...) {
      return std::nullopt;
    }
  };
  if (text.rfind("call", 0) == 0) {
    std::size_t pos = 4;
    auto inv = parse_inv(text, pos);
    if (!inv) return std::nullopt;
    std::size_t open = text.find('(', pos);
    if (open == std::string::npos || text.back() != ')') return std::nullopt;
    std::string method = text.substr(pos, open - pos);
    auto arg = Value::parse(text.substr(open + 1, text.size() - open - 2));
    if (method.empty() || !arg) return std::nullopt;
    return Action::call(*inv, method, *arg);
  }
  if (text.rfind("ret", 0) == 0) {
    std::size_t pos = 3;
    auto inv = parse_inv(text, pos);
    if (!inv) return std::nullopt;
    auto v = Value::parse(text.substr(pos));
    if (!v) return std::nullopt;
    return Action::ret(*inv, *v);
  }
  return std::nullopt;
}

bool history_well_formed(const History& h) {
  std::set<InvId> called;
  std::set<InvId> returned;
  for (const Action& a : h) {
    if (a.is_call()) {
      if (called.count(a.inv)) return false;
      called.insert(a.inv);
    } else {
      if (!called.count(a.inv) || returned.count(a.inv)) return false;
      returned.insert(a.inv);
    }
  }
  return true;
}

bool history_sequential(const History& h) {
  if (h.size() % 2 != 0) return false;
  for (std::size_t i = 0; i + 1 < h.size(); i += 2) {
    if (!h[i].is_call() || !h[i + 1].is_ret() || h[i].inv != h[i + 1].inv) return false;
  }
  return true;
}

std::uint64_t history_hash(const History& h) {
  std::uint64_t d = 0x4153ull;
  for (const Action& a : h) d = hash_combine(d, a.hash());
  return d;
}

std::string history_to_text(const History& h) {
  std::string out;
  for (const Action& a : h) {
    if (a.is_call()) {
      out += "CALL " + std::to_string(a.inv) + " " + a.method + " " + a.arg.str() + "\n";
    } else {
      out += "RET " + std::to_string(a.inv) + " " + a.value.str() + "\n";
    }
  }
  return out;
}

History history_from_text(const std::string& text) {
  History h;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    auto bad = [&](const std::string& why) {
      fail(Err::ParseError, "history line " + std::to_string(lineno) + ": " + why);
    };
    if (tag == "CALL") {
      long long inv;
      std::string method, argtok;
      if (!(ls >> inv >> method >> argtok)) bad("expected CALL <inv> <method> <arg>");
      auto arg = Value::parse(argtok);
      if (!arg) bad("bad argument value");
      h.push_back(Action::call(inv, method, *arg));
    } else if (tag == "RET") {
      long long inv;
      std::string rtok;
      if (!(ls >> inv >> rtok)) bad("expected RET <inv> <value>");
      auto rv = Value::parse(rtok);
      if (!rv) bad("bad return value");
      h.push_back(Action::ret(inv, *rv));
    } else {
      bad("unknown tag '" + tag + "'");
    }
  }
  return h;
}

std::ostream& operator<<(std::ostream& os, const Action& a) { return os << a.label(); }

}  // namespace sim
