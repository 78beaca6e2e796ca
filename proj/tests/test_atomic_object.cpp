#include <doctest.h>

#include <deque>
#include <set>
#include <unordered_set>

#include "sim/atomic_object.hpp"
#include "sim/error.hpp"
#include "support/lin_oracle.hpp"

using namespace sim;

TEST_CASE("atomic object step cases") {
  SeqSpec spec = make_mw_register(Value(0));
  AtomicObjectState s0 = atomic_initial(spec);
  CHECK(s0.h.empty());
  CHECK(s0.hs.empty());
  CHECK(s0.abs == Value(0));

  Action cw = Action::call(1, "write", Value(5));
  AtomicObjectState s1 = atomic_step(s0, cw, spec);
  CHECK(s1.h.size() == 1);
  CHECK(s1.hs.empty());

  // Same invocation id cannot be called twice.
  CHECK_THROWS_AS(atomic_step(s1, AtomicLabel{cw}, spec), SimError);

  // Returning before the linearization point is illegal.
  CHECK_THROWS_AS(atomic_step(s1, AtomicLabel{Action::ret(1, Value("ok"))}, spec), SimError);

  AtomicObjectState s2 = atomic_step(s1, LinPoint{1}, spec);
  CHECK(s2.hs.size() == 2);
  CHECK(s2.abs == Value(5));

  // Double linearization is illegal; a wrong return value is illegal.
  CHECK_THROWS_AS(atomic_step(s2, AtomicLabel{LinPoint{1}}, spec), SimError);
  CHECK_THROWS_AS(atomic_step(s2, AtomicLabel{Action::ret(1, Value("nope"))}, spec), SimError);

  AtomicObjectState s3 = atomic_step(s2, Action::ret(1, Value("ok")), spec);
  CHECK(s3.h.size() == 2);

  // Linearizing an invocation that was never called is illegal.
  CHECK_THROWS_AS(atomic_step(s3, AtomicLabel{LinPoint{9}}, spec), SimError);
}

TEST_CASE("atomic label strings") {
  CHECK(atomic_label_str(Action::call(2, "read", Value())) == "call[2]read(_)");
  CHECK(atomic_label_str(LinPoint{4}) == "lin[4]");
}

namespace {

// All histories reachable as traces of the atomic object, keyed by hash.
std::set<std::uint64_t> reachable_histories(const SeqSpec& spec, const AtomicEnumOptions& opts,
                                            int depth) {
  std::set<std::uint64_t> seen_h;
  std::unordered_set<std::uint64_t> visited;
  std::deque<std::pair<AtomicObjectState, int>> queue;
  AtomicObjectState init = atomic_initial(spec);
  visited.insert(init.digest());
  seen_h.insert(history_hash(init.h));
  queue.emplace_back(std::move(init), 0);
  while (!queue.empty()) {
    auto [s, d] = std::move(queue.front());
    queue.pop_front();
    if (d >= depth) continue;
    for (const AtomicLabel& l : enumerate_atomic_steps(s, spec, opts)) {
      AtomicObjectState nx = atomic_step(s, l, spec);
      seen_h.insert(history_hash(nx.h));
      if (visited.insert(nx.digest()).second) queue.emplace_back(std::move(nx), d + 1);
    }
  }
  return seen_h;
}

}  // namespace

TEST_CASE("atomic object traces are exactly the linearizable histories") {
  SeqSpec spec = make_mw_register(Value(0));
  AtomicEnumOptions opts;
  opts.value_domain = 2;
  opts.max_invocations = 3;
  opts.max_pending = 3;
  auto reachable = reachable_histories(spec, opts, 9);

  // Enumerate candidate histories independently and compare membership
  // with the brute-force linearizability oracle.
  auto histories = testing::enumerate_histories(spec, 2, 3, 2000000);
  std::size_t linearizable = 0, total = 0;
  for (const History& h : histories) {
    ++total;
    bool in_atomic = reachable.count(history_hash(h)) > 0;
    bool lin = testing::brute_linearizable(h, spec);
    if (lin) ++linearizable;
    CAPTURE(history_to_text(h));
    CHECK(in_atomic == lin);
  }
  CHECK(total > 1000);        // the enumeration is not trivially empty
  CHECK(linearizable > 100);  // and both outcomes occur
  CHECK(linearizable < total);
}

TEST_CASE("enumeration bounds are honored") {
  SeqSpec spec = make_mw_register(Value(0));
  AtomicEnumOptions opts;
  opts.value_domain = 2;
  opts.max_invocations = 1;
  opts.max_pending = 1;
  AtomicObjectState s0 = atomic_initial(spec);
  auto steps = enumerate_atomic_steps(s0, spec, opts);
  CHECK(steps.size() == 3);  // write(0), write(1), read — no returns or lin yet

  AtomicObjectState s1 = atomic_step(s0, Action::call(1, "read", Value()), spec);
  steps = enumerate_atomic_steps(s1, spec, opts);
  // max_invocations reached: only lin[1] remains enabled.
  REQUIRE(steps.size() == 1);
  CHECK(atomic_label_str(steps[0]) == "lin[1]");
}
