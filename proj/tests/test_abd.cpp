#include <doctest.h>

#include "sim/error.hpp"
#include "sim/impls/abd.hpp"
#include "sim/linearization.hpp"
#include "sim/mp/explore.hpp"
#include "sim/mp/liveness.hpp"
#include "sim/mp/run.hpp"
#include "support/lin_oracle.hpp"

using namespace sim;
using namespace sim::mp;
using sim::impls::abd_implementation;
using sim::impls::abd_sw_implementation;

TEST_CASE("write starts with a query broadcast") {
  MpImplementation impl = abd_implementation(1, 3);
  MpGlobalState g0(impl.clients, impl.servers, impl.initial_state);
  MpGlobalState g1 = step_call(impl, g0, 0, Action::call(1, "write", Value(5)));
  // One query message per server.
  CHECK(g1.pool(0).size() == 3);
  for (const Message& m : g1.pool(0).to_vector()) {
    CHECK(m.payload.at(0) == Value("q"));
  }
  CHECK(impl.pending(0, g1.local(0)));
}

TEST_CASE("server applies fresher writes and acks") {
  MpImplementation impl = abd_implementation(1, 3);
  MpGlobalState g(impl.clients, impl.servers, impl.initial_state);
  // Inject a write push by running the write's first phase.
  g = step_call(impl, g, 0, Action::call(1, "write", Value(5)));
  auto queries = g.pool(0).to_vector();
  // Answer from servers 1 and 2 (majority).
  g = step_internal(impl, g, 1, {queries[0].uid});
  g = step_internal(impl, g, 2, {queries[1].uid});
  g = step_internal(impl, g, 0, {g.pool(1).to_vector()[0].uid, g.pool(2).to_vector()[0].uid});
  // The client advanced to the push phase: three push messages.
  auto pushes = g.pool(0).to_vector();
  REQUIRE(pushes.size() == 6);
  CHECK(pushes[3].payload.at(0) == Value("wb"));
  CHECK(pushes[3].payload.at(2) == Value(5));

  // A server receiving the push stores the fresher value and acks.
  const Value before = g.local(1);
  g = step_internal(impl, g, 1, {pushes[3].uid});
  CHECK(g.local(1).at(0) == Value(5));
  CHECK(g.local(1).at(1).at(0).as_int() == 1);  // seq advanced past init
  CHECK(before.at(0) == Value(0));
  auto acks = g.pool(1).to_vector();
  CHECK(acks.back().payload.at(0) == Value("ack"));

  // A stale push (smaller timestamp) does not overwrite.
  MpImplementation impl2 = abd_implementation(2, 3);
  (void)impl2;
  const Value after = g.local(1);
  g = step_internal(impl, g, 1, {pushes[3].uid}, false);  // same push again
  CHECK(g.local(1).at(0) == after.at(0));
  CHECK(g.local(1).at(1) == after.at(1));
}

TEST_CASE("writer returns ok after majority acks") {
  MpImplementation impl = abd_implementation(1, 3);
  MpGlobalState g(impl.clients, impl.servers, impl.initial_state);
  g = step_call(impl, g, 0, Action::call(1, "write", Value(5)));
  auto queries = g.pool(0).to_vector();
  g = step_internal(impl, g, 1, {queries[0].uid});
  g = step_internal(impl, g, 2, {queries[1].uid});
  g = step_internal(impl, g, 0, {g.pool(1).to_vector()[0].uid, g.pool(2).to_vector()[0].uid});
  auto pushes = g.pool(0).to_vector();
  g = step_internal(impl, g, 1, {pushes[3].uid});
  g = step_internal(impl, g, 2, {pushes[4].uid});
  CHECK(!impl.ret_enabled(0, g.local(0)).has_value());  // no acks consumed yet
  g = step_internal(impl, g, 0,
                    {g.pool(1).to_vector()[1].uid, g.pool(2).to_vector()[1].uid});
  auto [g2, ret] = step_return(impl, g, 0);
  CHECK(ret == Action::ret(1, Value("ok")));
}

TEST_CASE("solo write then read returns the written value") {
  MpImplementation impl = abd_implementation(1, 3);
  Workload w = Workload::for_clients(1).add(0, "write", Value(5)).add(0, "read");

  // Fair runs across seeds.
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    RunOptions opts;
    opts.seed = seed;
    opts.budget = 2000;
    auto sched = make_fair_random_scheduler();
    RunResult r = run(impl, *sched, w, opts);
    REQUIRE(r.completed);
    History h = r.trace.history();
    REQUIRE(h.size() == 4);
    CHECK(h[3] == Action::ret(2, Value(5)));
  }

  // Exhaustively: every schedule linearizes and reads return only 5.
  SeqSpec spec = make_mw_register(Value(0));
  ExploreOptions eo;
  eo.max_depth = 40;
  eo.spec = &spec;
  ExploreResult er = explore(impl, w, eo);
  CHECK(er.complete);
  CHECK(er.all_linearizable);
  REQUIRE(er.returns_seen.count(2));
  CHECK(er.returns_seen.at(2) == std::set<Value>{Value(5)});
}

TEST_CASE("read racing a write sees either old or new value, always linearizably") {
  MpImplementation impl = abd_implementation(2, 3);
  Workload w = Workload::for_clients(2).add(0, "read").add(1, "write", Value(2));
  SeqSpec spec = make_mw_register(Value(0));
  ExploreOptions eo;
  eo.max_depth = 18;  // enough for both outcomes; bigger bounds live elsewhere
  eo.spec = &spec;
  ExploreResult er = explore(impl, w, eo);
  CHECK(er.all_linearizable);
  CHECK(!er.state_budget_hit);
  REQUIRE(er.returns_seen.count(1));
  CHECK(er.returns_seen.at(1) == std::set<Value>{Value(0), Value(2)});
}

TEST_CASE("one crashed server of three is tolerated") {
  MpImplementation impl = abd_implementation(2, 3);
  Workload w = Workload::for_clients(2).add(0, "write", Value(7)).add(1, "read");
  RunOptions base;
  base.budget = 4000;
  auto rep = check_fair_completion(impl, w, server_crash_subsets(impl, 1), 10, base);
  CHECK(rep.runs == 40);  // 4 crash patterns (none + 3 singletons) x 10 seeds
  CHECK(rep.all_completed());
}

TEST_CASE("majority crashed blocks every return") {
  MpImplementation impl = abd_implementation(1, 3);
  Workload w = Workload::for_clients(1).add(0, "write", Value(1));
  ExploreOptions eo;
  eo.max_depth = 20;
  eo.crashed = {1, 2};  // two of three servers
  ExploreResult er = explore(impl, w, eo);
  CHECK(er.complete);
  CHECK(!er.any_return_enabled);
  CHECK(er.returns_seen.empty());
}

TEST_CASE("timestamps never decrease at servers") {
  MpImplementation impl = abd_implementation(2, 3);
  Workload w = Workload::for_clients(2).add(0, "write", Value(1)).add(1, "write", Value(2));
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RunOptions opts;
    opts.seed = seed;
    opts.budget = 3000;
    auto sched = make_fair_random_scheduler();
    RunResult r = run(impl, *sched, w, opts);
    REQUIRE(r.completed);
    // Replay, watching each server's timestamp.
    MpGlobalState g(impl.clients, impl.servers, impl.initial_state);
    std::vector<std::pair<std::int64_t, std::int64_t>> ts(
        static_cast<std::size_t>(impl.servers), {0, -1});
    for (const TraceStep& tstep : r.trace.steps) {
      g = apply_step(impl, g, tstep.step);
      for (int s = 0; s < impl.servers; ++s) {
        const Value& st = g.local(impl.clients + s);
        if (st.is_nil()) continue;
        std::pair<std::int64_t, std::int64_t> cur{st.at(1).at(0).as_int(),
                                                  st.at(1).at(1).as_int()};
        CHECK(cur >= ts[static_cast<std::size_t>(s)]);
        ts[static_cast<std::size_t>(s)] = cur;
      }
    }
  }
}

TEST_CASE("pool monotonicity along traces") {
  MpImplementation impl = abd_implementation(2, 3);
  Workload w = Workload::for_clients(2).add(0, "write", Value(1)).add(1, "read");
  RunOptions opts;
  opts.seed = 3;
  auto sched = make_fair_random_scheduler();
  RunResult r = run(impl, *sched, w, opts);
  REQUIRE(r.completed);
  MpGlobalState g(impl.clients, impl.servers, impl.initial_state);
  for (const TraceStep& tstep : r.trace.steps) {
    MpGlobalState g2 = apply_step(impl, g, tstep.step);
    for (Pid p = 0; p < impl.total(); ++p) {
      CHECK(g.pool(p).is_prefix_of(g2.pool(p)));
    }
    g = g2;
  }
}

TEST_CASE("histories from fair runs linearize") {
  MpImplementation impl = abd_implementation(2, 3);
  SeqSpec spec = make_mw_register(Value(0));
  Workload w = Workload::for_clients(2)
                   .add(0, "write", Value(1))
                   .add(0, "read")
                   .add(1, "write", Value(2))
                   .add(1, "read");
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    RunOptions opts;
    opts.seed = seed;
    opts.budget = 4000;
    auto sched = make_fair_random_scheduler();
    RunResult r = run(impl, *sched, w, opts);
    REQUIRE(r.completed);
    History h = r.trace.history();
    LinVerdict v = check_linearizable(h, spec);
    CHECK(v.status == LinVerdict::Status::Linearizable);
    CHECK(is_linearization(h, v.witness, spec));
    CHECK(testing::brute_linearizable(h, spec));
  }
}

TEST_CASE("single-writer variant skips the write query phase") {
  MpImplementation impl = abd_sw_implementation(3, 3);
  MpGlobalState g0(impl.clients, impl.servers, impl.initial_state);
  MpGlobalState g1 = step_call(impl, g0, 0, Action::call(1, "write", Value(1)));
  auto msgs = g1.pool(0).to_vector();
  REQUIRE(msgs.size() == 3);
  CHECK(msgs[0].payload.at(0) == Value("wb"));  // direct push, no query
  CHECK(msgs[0].payload.at(3) == Value(Value::List{Value(1), Value(0)}));

  // Only client 0 may write.
  try {
    step_call(impl, g0, 1, Action::call(5, "write", Value(9)));
    CHECK(false);
  } catch (const SimError& e) {
    CHECK(e.code() == Err::UndefinedTransition);
  }

  // Reads still work and the register linearizes.
  Workload w = Workload::for_clients(3).add(0, "write", Value(1)).add(1, "read").add(2, "read");
  SeqSpec spec = make_mw_register(Value(0));
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    RunOptions opts;
    opts.seed = seed;
    opts.budget = 4000;
    auto sched = make_fair_random_scheduler();
    RunResult r = run(impl, *sched, w, opts);
    REQUIRE(r.completed);
    CHECK(check_linearizable(r.trace.history(), spec).status ==
          LinVerdict::Status::Linearizable);
  }
}

TEST_CASE("sequential writes accumulate timestamps in the single-writer variant") {
  MpImplementation impl = abd_sw_implementation(1, 3);
  Workload w = Workload::for_clients(1)
                   .add(0, "write", Value(1))
                   .add(0, "write", Value(2))
                   .add(0, "read");
  RunOptions opts;
  opts.seed = 11;
  opts.budget = 3000;
  auto sched = make_fair_random_scheduler();
  RunResult r = run(impl, *sched, w, opts);
  REQUIRE(r.completed);
  History h = r.trace.history();
  CHECK(h.back() == Action::ret(3, Value(2)));
}
