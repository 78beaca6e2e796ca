#include "sim/mp/run.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "sim/error.hpp"

namespace sim::mp {

namespace {

// Splits on `sep` at bracket depth zero, respecting (), [] and quotes.
std::vector<std::string> split_top(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (quoted) {
      cur += c;
      if (c == '\\' && i + 1 < s.size()) cur += s[++i];
      else if (c == '"') quoted = false;
      continue;
    }
    if (c == '"') quoted = true;
    if (c == '(' || c == '[') ++depth;
    if (c == ')' || c == ']') --depth;
    if (c == sep && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

std::string Workload::str() const {
  std::string out;
  for (std::size_t i = 0; i < scripts.size(); ++i) {
    if (scripts[i].empty()) continue;
    if (!out.empty()) out += ';';
    out += std::to_string(i) + ":";
    for (std::size_t k = 0; k < scripts[i].size(); ++k) {
      if (k) out += ',';
      out += scripts[i][k].first + "(" +
             (scripts[i][k].second.is_nil() ? "" : scripts[i][k].second.str()) + ")";
    }
  }
  return out.empty() ? "-" : out;
}

Workload Workload::parse(const std::string& text, int m) {
  Workload w = Workload::for_clients(m);
  if (text.empty() || text == "-") return w;
  for (const std::string& part : split_top(text, ';')) {
    std::size_t colon = part.find(':');
    if (colon == std::string::npos)
      fail(Err::ParseError, "workload entry '" + part + "' lacks 'client:'");
    int client = 0;
    try {
      client = std::stoi(part.substr(0, colon));
    } catch (...) {
      fail(Err::ParseError, "bad client index in workload entry '" + part + "'");
    }
    if (client < 0 || client >= m)
      fail(Err::ParseError, "workload client " + std::to_string(client) + " out of range");
    for (const std::string& item : split_top(part.substr(colon + 1), ',')) {
      std::size_t open = item.find('(');
      if (open == std::string::npos || item.back() != ')')
        fail(Err::ParseError, "bad workload item '" + item + "'");
      std::string method = item.substr(0, open);
      std::string argtok = item.substr(open + 1, item.size() - open - 2);
      Value arg;
      if (!argtok.empty()) {
        auto v = Value::parse(argtok);
        if (!v) fail(Err::ParseError, "bad argument in workload item '" + item + "'");
        arg = *v;
      }
      w.add(client, method, arg);
    }
  }
  return w;
}

namespace {

class FairRandomScheduler final : public MpScheduler {
 public:
  std::string name() const override { return "fair_random"; }
  std::optional<std::size_t> pick(const MpGlobalState&, const std::vector<MpStep>& choices,
                                  const std::vector<std::size_t>& forced, Rng& rng) override {
    if (choices.empty()) return std::nullopt;
    if (!forced.empty()) return forced[rng.below(forced.size())];
    return rng.below(choices.size());
  }
};

class RoundRobinScheduler final : public MpScheduler {
 public:
  std::string name() const override { return "round_robin"; }
  std::optional<std::size_t> pick(const MpGlobalState& g, const std::vector<MpStep>& choices,
                                  const std::vector<std::size_t>&, Rng&) override {
    if (choices.empty()) return std::nullopt;
    int total = g.total();
    for (int off = 0; off < total; ++off) {
      Pid p = (cursor_ + off) % total;
      std::optional<std::size_t> best;
      auto rank = [](const MpStep& s) {
        return s.rule == MpStep::Rule::Ret ? 0 : s.rule == MpStep::Rule::Call ? 1 : 2;
      };
      for (std::size_t i = 0; i < choices.size(); ++i) {
        if (choices[i].pid != p) continue;
        if (!best || rank(choices[i]) < rank(choices[*best])) best = i;
      }
      if (best) {
        cursor_ = (p + 1) % total;
        return best;
      }
    }
    return std::nullopt;
  }

 private:
  Pid cursor_ = 0;
};

std::string crashes_str(const std::vector<CrashEvent>& crashes) {
  std::string out;
  for (const auto& c : crashes) {
    if (!out.empty()) out += ',';
    out += std::to_string(c.pid) + "@" + std::to_string(c.at_step);
  }
  return out;
}

}  // namespace

std::unique_ptr<MpScheduler> make_fair_random_scheduler() {
  return std::make_unique<FairRandomScheduler>();
}
std::unique_ptr<MpScheduler> make_round_robin_scheduler() {
  return std::make_unique<RoundRobinScheduler>();
}

RunResult run(const MpImplementation& impl, MpScheduler& sched, const Workload& workload,
              const RunOptions& opts) {
  if (opts.budget <= 0) fail(Err::ConfigError, "step budget must be positive");
  if (static_cast<int>(workload.scripts.size()) > impl.clients)
    fail(Err::ConfigError, "workload refers to more clients than the implementation has");

  const int deadline = opts.deadline > 0 ? opts.deadline : 4 * impl.total();
  MpGlobalState g(impl.clients, impl.servers, impl.initial_state);
  Rng rng(opts.seed);

  RunResult result;
  result.trace.m = impl.clients;
  result.trace.n = impl.servers;
  result.trace.seed = opts.seed;
  result.trace.meta["impl"] = impl.name;
  result.trace.meta["sched"] = sched.name();
  result.trace.meta["workload"] = workload.str();
  result.trace.meta["deadline"] = std::to_string(deadline);
  if (!opts.crashes.empty()) result.trace.meta["crash"] = crashes_str(opts.crashes);

  std::vector<std::size_t> cursor(static_cast<std::size_t>(impl.clients), 0);
  std::vector<bool> awaiting(static_cast<std::size_t>(impl.clients), false);
  std::set<std::uint64_t> delivered;
  // Per message: destination-step count when sent (for deadline tracking).
  std::map<std::uint64_t, std::pair<Pid, int>> sent_mark;
  std::vector<int> proc_steps(static_cast<std::size_t>(impl.total()), 0);

  auto track_new_sends = [&](Pid p, std::uint32_t pool_before) {
    g.pool(p).for_each([&](const Message& m) {
      if (m.uid.seq >= pool_before)
        sent_mark[m.uid.pack()] = {m.dst, proc_steps[static_cast<std::size_t>(m.dst)]};
    });
  };

  auto workload_done = [&] {
    for (Pid p = 0; p < impl.clients; ++p) {
      auto ci = static_cast<std::size_t>(p);
      if (ci < workload.scripts.size() &&
          (cursor[ci] < workload.scripts[ci].size() || awaiting[ci]))
        return false;
    }
    return true;
  };

  int steps = 0;
  while (steps < opts.budget) {
    if (workload_done()) {
      result.completed = true;
      break;
    }
    for (const CrashEvent& c : opts.crashes) {
      if (c.at_step == steps && !g.entry(c.pid).crashed) {
        ProcEntry e = g.entry(c.pid);
        e.crashed = true;
        g = g.with_entry(c.pid, std::move(e));
      }
    }

    std::vector<MpStep> choices;
    std::vector<std::vector<Uid>> undelivered(static_cast<std::size_t>(impl.total()));
    for (Pid p = 0; p < impl.total(); ++p) {
      const ProcEntry& e = g.entry(p);
      if (e.crashed) continue;
      if (g.is_client(p)) {
        auto ci = static_cast<std::size_t>(p);
        if (e.pending_inv && impl.ret_enabled(p, e.state)) {
          MpStep s;
          s.rule = MpStep::Rule::Ret;
          s.pid = p;
          choices.push_back(std::move(s));
        }
        if (!e.pending_inv && ci < workload.scripts.size() &&
            cursor[ci] < workload.scripts[ci].size() && !impl.pending(p, e.state)) {
          const auto& [method, arg] = workload.scripts[ci][cursor[ci]];
          MpStep s;
          s.rule = MpStep::Rule::Call;
          s.pid = p;
          s.action = Action::call(static_cast<InvId>(p) * 100 + static_cast<InvId>(cursor[ci]) + 1,
                                  method, arg);
          if (impl.delta(p, e.state, DeltaInput::call(s.action))) choices.push_back(std::move(s));
        }
      }
      for (const Message* m : g.addressed_to(p)) {
        if (!delivered.count(m->uid.pack()))
          undelivered[static_cast<std::size_t>(p)].push_back(m->uid);
      }
      const auto& und = undelivered[static_cast<std::size_t>(p)];
      if (!und.empty()) {
        MpStep s;
        s.rule = MpStep::Rule::Internal;
        s.pid = p;
        s.recv = und;
        choices.push_back(std::move(s));
        if (und.size() >= 2 && rng.chance(0.5)) {
          // A random proper subset adds schedule variety.
          std::vector<Uid> sub;
          for (const Uid& u : und)
            if (rng.chance(0.5)) sub.push_back(u);
          if (!sub.empty() && sub.size() < und.size()) {
            MpStep s2;
            s2.rule = MpStep::Rule::Internal;
            s2.pid = p;
            s2.recv = std::move(sub);
            choices.push_back(std::move(s2));
          }
        }
      }
    }
    if (choices.empty()) break;

    std::vector<std::size_t> forced;
    if (sched.respects_deadline()) {
      std::vector<std::vector<std::uint64_t>> overdue(static_cast<std::size_t>(impl.total()));
      for (Pid p = 0; p < impl.total(); ++p) {
        if (g.entry(p).crashed) continue;
        for (const Uid& u : undelivered[static_cast<std::size_t>(p)]) {
          auto it = sent_mark.find(u.pack());
          if (it != sent_mark.end() &&
              proc_steps[static_cast<std::size_t>(p)] - it->second.second >= deadline)
            overdue[static_cast<std::size_t>(p)].push_back(u.pack());
        }
      }
      for (std::size_t i = 0; i < choices.size(); ++i) {
        const MpStep& s = choices[i];
        if (s.rule != MpStep::Rule::Internal) continue;
        const auto& od = overdue[static_cast<std::size_t>(s.pid)];
        if (od.empty()) continue;
        std::set<std::uint64_t> in;
        for (const Uid& u : s.recv) in.insert(u.pack());
        bool all = std::all_of(od.begin(), od.end(),
                               [&](std::uint64_t u) { return in.count(u) > 0; });
        if (all) forced.push_back(i);
      }
    }

    auto idx = sched.pick(g, choices, forced, rng);
    if (!idx) break;
    const MpStep chosen = choices[*idx];

    std::uint32_t pool_before = g.pool(chosen.pid).size();
    MpStep recorded = chosen;
    if (chosen.rule == MpStep::Rule::Ret) {
      auto [g2, ret] = step_return(impl, g, chosen.pid);
      g = std::move(g2);
      recorded.action = ret;
    } else {
      g = apply_step(impl, g, chosen, opts.dedupe);
    }
    track_new_sends(chosen.pid, pool_before);
    for (const Uid& u : chosen.recv) delivered.insert(u.pack());
    if (chosen.rule == MpStep::Rule::Call) {
      cursor[static_cast<std::size_t>(chosen.pid)]++;
      awaiting[static_cast<std::size_t>(chosen.pid)] = true;
    }
    if (chosen.rule == MpStep::Rule::Ret) awaiting[static_cast<std::size_t>(chosen.pid)] = false;
    proc_steps[static_cast<std::size_t>(chosen.pid)]++;

    result.trace.steps.push_back(TraceStep{recorded, g.digest()});
    ++steps;
  }
  if (workload_done()) result.completed = true;

  result.final_state = std::move(g);
  result.steps_taken = steps;
  return result;
}

RunResult run_scripted(const MpImplementation& impl, const std::vector<MpStep>& steps,
                       const std::vector<CrashEvent>& crashes, bool dedupe) {
  MpGlobalState g(impl.clients, impl.servers, impl.initial_state);
  RunResult result;
  result.trace.m = impl.clients;
  result.trace.n = impl.servers;
  result.trace.meta["impl"] = impl.name;
  result.trace.meta["sched"] = "scripted";
  if (!crashes.empty()) result.trace.meta["crash"] = crashes_str(crashes);
  for (std::size_t idx = 0; idx < steps.size(); ++idx) {
    for (const CrashEvent& c : crashes) {
      if (c.at_step == static_cast<int>(idx) && !g.entry(c.pid).crashed) {
        ProcEntry e = g.entry(c.pid);
        e.crashed = true;
        g = g.with_entry(c.pid, std::move(e));
      }
    }
    MpStep recorded = steps[idx];
    if (recorded.rule == MpStep::Rule::Ret) {
      auto [g2, ret] = step_return(impl, g, recorded.pid);
      g = std::move(g2);
      recorded.action = ret;
    } else {
      g = apply_step(impl, g, recorded, dedupe);
    }
    result.trace.steps.push_back(TraceStep{recorded, g.digest()});
  }
  result.final_state = std::move(g);
  result.steps_taken = static_cast<int>(steps.size());
  return result;
}

}  // namespace sim::mp
