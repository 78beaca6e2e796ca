#include "sim/sm/run.hpp"

#include <algorithm>

#include "sim/error.hpp"

namespace sim::sm {

namespace {

class FairScheduler final : public SmScheduler {
 public:
  std::string name() const override { return "fair"; }
  std::optional<std::size_t> pick(const SmGlobalState&, const std::vector<SmChoice>& choices,
                                  Rng& rng) override {
    if (choices.empty()) return std::nullopt;
    return static_cast<std::size_t>(rng.below(choices.size()));
  }
};

class RoundRobinScheduler final : public SmScheduler {
 public:
  std::string name() const override { return "rr"; }
  std::optional<std::size_t> pick(const SmGlobalState& g, const std::vector<SmChoice>& choices,
                                  Rng&) override {
    if (choices.empty()) return std::nullopt;
    int m = g.processes();
    for (int off = 0; off < m; ++off) {
      Pid p = (next_ + off) % m;
      for (std::size_t i = 0; i < choices.size(); ++i) {
        if (choices[i].pid == p) {
          next_ = (p + 1) % m;
          return i;
        }
      }
    }
    return std::nullopt;
  }

 private:
  Pid next_ = 0;
};

struct Cursors {
  std::vector<std::size_t> next;      // workload position per process
  std::vector<std::size_t> returned;  // completed invocations per process

  explicit Cursors(int m)
      : next(static_cast<std::size_t>(m), 0), returned(static_cast<std::size_t>(m), 0) {}
};

Action next_call(const Workload& w, Pid p, std::size_t cursor) {
  const auto& [method, arg] = w.scripts[static_cast<std::size_t>(p)][cursor];
  InvId inv = static_cast<InvId>(p) * 100 + static_cast<InvId>(cursor) + 1;
  return Action::call(inv, method, arg);
}

bool live_completed(const SmGlobalState& g, const Workload& w, const Cursors& c) {
  for (Pid p = 0; p < g.processes(); ++p) {
    if (g.crashed(p)) continue;
    if (c.returned[static_cast<std::size_t>(p)] != w.scripts[static_cast<std::size_t>(p)].size())
      return false;
  }
  return true;
}

std::string crash_meta(const std::vector<CrashEvent>& crashes) {
  std::string s;
  for (const CrashEvent& c : crashes) {
    if (!s.empty()) s += ",";
    s += std::to_string(c.pid) + "@" + std::to_string(c.at_step);
  }
  return s;
}

}  // namespace

std::unique_ptr<SmScheduler> make_sm_fair_scheduler() { return std::make_unique<FairScheduler>(); }

std::unique_ptr<SmScheduler> make_sm_round_robin_scheduler() {
  return std::make_unique<RoundRobinScheduler>();
}

SmRunResult sm_run(const SmProgram& program, SmScheduler& sched, const Workload& workload,
                   const SmRunOptions& opts) {
  if (static_cast<int>(workload.scripts.size()) != program.processes)
    fail(Err::ConfigError, "workload process count does not match the program");
  SmRunResult res;
  res.final_state = SmGlobalState(program);
  SmGlobalState& g = res.final_state;
  res.trace.m = program.processes;
  res.trace.seed = opts.seed;
  res.trace.meta["impl"] = program.name;
  res.trace.meta["sched"] = sched.name();
  res.trace.meta["workload"] = workload.str();
  if (!opts.crashes.empty()) res.trace.meta["crash"] = crash_meta(opts.crashes);
  Rng rng(opts.seed);
  Cursors cur(program.processes);
  while (res.steps_taken < opts.budget) {
    int now = static_cast<int>(res.trace.steps.size());
    for (const CrashEvent& c : opts.crashes) {
      if (c.at_step == now && !g.crashed(c.pid)) g.crash(c.pid);
    }
    std::vector<SmChoice> choices;
    for (Pid p = 0; p < g.processes(); ++p) {
      SmEnabled e = sm_enabled(g, p);
      if (e == SmEnabled::None) continue;
      if (e == SmEnabled::Call) {
        std::size_t c = cur.next[static_cast<std::size_t>(p)];
        if (c >= workload.scripts[static_cast<std::size_t>(p)].size()) continue;
        const auto& [method, arg] = workload.scripts[static_cast<std::size_t>(p)][c];
        if (!g.machine(p).accepts_call(method, arg)) continue;
      }
      choices.push_back({p, e});
    }
    auto picked = sched.pick(g, choices, rng);
    if (!picked) break;
    const SmChoice& ch = choices.at(*picked);
    SmStepRecord rec;
    switch (ch.kind) {
      case SmEnabled::Call: {
        std::size_t& c = cur.next[static_cast<std::size_t>(ch.pid)];
        rec = sm_call(g, ch.pid, next_call(workload, ch.pid, c));
        ++c;
        break;
      }
      case SmEnabled::Ret:
        rec = sm_return(g, ch.pid);
        ++cur.returned[static_cast<std::size_t>(ch.pid)];
        break;
      default:
        rec = sm_step(g, ch.pid);
        break;
    }
    res.trace.steps.push_back({std::move(rec), g.digest()});
    ++res.steps_taken;
    if (live_completed(g, workload, cur)) break;
  }
  res.completed = live_completed(g, workload, cur);
  return res;
}

SmRunResult sm_run_scripted(const SmProgram& program, const std::vector<Pid>& schedule,
                            const Workload& workload, const std::vector<CrashEvent>& crashes) {
  if (static_cast<int>(workload.scripts.size()) != program.processes)
    fail(Err::ConfigError, "workload process count does not match the program");
  SmRunResult res;
  res.final_state = SmGlobalState(program);
  SmGlobalState& g = res.final_state;
  res.trace.m = program.processes;
  res.trace.meta["impl"] = program.name;
  res.trace.meta["sched"] = "scripted";
  res.trace.meta["workload"] = workload.str();
  if (!crashes.empty()) res.trace.meta["crash"] = crash_meta(crashes);
  Cursors cur(program.processes);
  for (Pid p : schedule) {
    int now = static_cast<int>(res.trace.steps.size());
    for (const CrashEvent& c : crashes) {
      if (c.at_step == now && !g.crashed(c.pid)) g.crash(c.pid);
    }
    SmStepRecord rec;
    switch (sm_enabled(g, p)) {
      case SmEnabled::None:
        fail(Err::Crashed, "scripted schedule steps crashed process " + std::to_string(p));
      case SmEnabled::Ret:
        rec = sm_return(g, p);
        ++cur.returned[static_cast<std::size_t>(p)];
        break;
      case SmEnabled::Call: {
        std::size_t& c = cur.next[static_cast<std::size_t>(p)];
        if (c >= workload.scripts[static_cast<std::size_t>(p)].size())
          fail(Err::ConfigError,
               "scripted schedule calls process " + std::to_string(p) + " past its workload");
        rec = sm_call(g, p, next_call(workload, p, c));
        ++c;
        break;
      }
      default:
        rec = sm_step(g, p);
        break;
    }
    res.trace.steps.push_back({std::move(rec), g.digest()});
    ++res.steps_taken;
  }
  res.completed = live_completed(g, workload, cur);
  return res;
}

}  // namespace sim::sm
