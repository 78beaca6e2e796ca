#include "sim/seq_spec.hpp"

#include <map>

#include "sim/error.hpp"

namespace sim {

std::pair<Value, Value> SeqSpec::apply_or_throw(const Value& state, const std::string& method,
                                                const Value& arg) const {
  auto r = apply(state, method, arg);
  if (!r) fail(Err::UndefinedTransition, name + " has no transition for " + method + "(" + arg.str() + ")");
  return *r;
}

bool SeqSpec::accepts(const History& h) const {
  if (!history_sequential(h)) return false;
  Value state = init;
  for (std::size_t i = 0; i + 1 < h.size(); i += 2) {
    auto r = apply(state, h[i].method, h[i].arg);
    if (!r) return false;
    if (r->first != h[i + 1].value) return false;
    state = r->second;
  }
  return true;
}

SeqSpec make_mw_register(Value init) {
  SeqSpec s;
  s.name = "mw_register(" + init.str() + ")";
  s.init = std::move(init);
  s.methods = {{"write", true}, {"read", false}};
  s.apply = [](const Value& st, const std::string& m,
               const Value& a) -> std::optional<std::pair<Value, Value>> {
    if (m == "write") return std::make_pair(Value("ok"), a);
    if (m == "read") return std::make_pair(st, st);
    return std::nullopt;
  };
  return s;
}

SeqSpec make_max_register(std::int64_t init) {
  SeqSpec s;
  s.name = "max_register(" + std::to_string(init) + ")";
  s.init = Value(init);
  s.methods = {{"writeMax", true}, {"readMax", false}};
  s.apply = [](const Value& st, const std::string& m,
               const Value& a) -> std::optional<std::pair<Value, Value>> {
    if (m == "writeMax") {
      if (!a.is_int() || !st.is_int()) return std::nullopt;
      return std::make_pair(Value("ok"), a.as_int() > st.as_int() ? a : st);
    }
    if (m == "readMax") return std::make_pair(st, st);
    return std::nullopt;
  };
  return s;
}

SeqSpec make_counter() {
  SeqSpec s;
  s.name = "counter";
  s.init = Value(std::int64_t{0});
  s.methods = {{"increment", false}, {"read", false}};
  s.apply = [](const Value& st, const std::string& m,
               const Value& a) -> std::optional<std::pair<Value, Value>> {
    (void)a;
    if (!st.is_int()) return std::nullopt;
    if (m == "increment") return std::make_pair(Value("ok"), Value(st.as_int() + 1));
    if (m == "read") return std::make_pair(st, st);
    return std::nullopt;
  };
  return s;
}

SeqSpec make_snapshot(int width, Value init) {
  SeqSpec s;
  s.name = "snapshot(" + std::to_string(width) + "," + init.str() + ")";
  Value::List comps(static_cast<std::size_t>(width), init);
  s.init = Value::list(std::move(comps));
  s.methods = {{"update", true}, {"scan", false}};
  s.apply = [width](const Value& st, const std::string& m,
                    const Value& a) -> std::optional<std::pair<Value, Value>> {
    if (m == "scan") return std::make_pair(st, st);
    if (m == "update") {
      // arg is [component, value]
      if (!a.is_list() || a.size() != 2 || !a.at(0).is_int()) return std::nullopt;
      std::int64_t i = a.at(0).as_int();
      if (i < 0 || i >= width) return std::nullopt;
      Value::List next = st.as_list();
      next[static_cast<std::size_t>(i)] = a.at(1);
      return std::make_pair(Value("ok"), Value::list(std::move(next)));
    }
    return std::nullopt;
  };
  return s;
}

SeqSpec make_spec(const std::string& kind) {
  auto args_of = [&](const std::string& head) -> std::optional<std::vector<std::string>> {
    if (kind.rfind(head + "(", 0) != 0 || kind.back() != ')') return std::nullopt;
    std::string inner = kind.substr(head.size() + 1, kind.size() - head.size() - 2);
    std::vector<std::string> out;
    std::string cur;
    for (char c : inner) {
      if (c == ',') {
        out.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty() || !inner.empty()) out.push_back(cur);
    return out;
  };

  if (kind == "counter") return make_counter();
  if (auto a = args_of("mw_register")) {
    if (a->size() != 1) fail(Err::ConfigError, "mw_register takes one init value");
    auto v = Value::parse((*a)[0]);
    if (!v) fail(Err::ConfigError, "bad mw_register init: " + (*a)[0]);
    return make_mw_register(*v);
  }
  if (auto a = args_of("max_register")) {
    if (a->size() != 1) fail(Err::ConfigError, "max_register takes one init value");
    return make_max_register(std::stoll((*a)[0]));
  }
  if (auto a = args_of("snapshot")) {
    if (a->size() != 2) fail(Err::ConfigError, "snapshot takes (width, init)");
    auto v = Value::parse((*a)[1]);
    if (!v) fail(Err::ConfigError, "bad snapshot init: " + (*a)[1]);
    return make_snapshot(std::stoi((*a)[0]), *v);
  }
  fail(Err::ConfigError, "unknown spec kind: " + kind);
}

std::vector<std::pair<std::string, Value>> spec_call_alphabet(const SeqSpec& spec,
                                                              int value_domain) {
  std::vector<std::pair<std::string, Value>> out;
  for (const auto& m : spec.methods) {
    if (!m.takes_arg) {
      out.emplace_back(m.name, Value::nil());
    } else if (spec.name.rfind("snapshot", 0) == 0) {
      // snapshot updates take [component, value]
      int width = static_cast<int>(spec.init.size());
      for (int i = 0; i < width; ++i)
        for (int v = 0; v < value_domain; ++v)
          out.emplace_back(m.name, Value::list({Value(i), Value(v)}));
    } else {
      for (int v = 0; v < value_domain; ++v) out.emplace_back(m.name, Value(v));
    }
  }
  return out;
}

}  // namespace sim
