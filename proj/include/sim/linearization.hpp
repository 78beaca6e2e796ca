#pragma once

#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "sim/action.hpp"
#include "sim/seq_spec.hpp"

namespace sim {

// Checks that h2 is a linearization of h1 w.r.t. spec: some completion of
// h1 (append returns for some pending calls, delete the rest) permutes
// into h2 while preserving return-before-call order, and h2 replays
// through the spec. Throws MalformedHistory on ill-formed inputs.
bool is_linearization(const History& h1, const History& h2, const SeqSpec& spec);

// One linearized operation, in linearization order.
struct LinOp {
  InvId inv = 0;
  std::string method;
  Value arg;
  Value ret;
};

History lin_ops_to_history(const std::vector<LinOp>& ops);

// Online linearizability monitor: maintains the set of abstract states
// consistent with the history consumed so far. Linearization points are
// committed lazily, at returns. The candidate set becoming empty is
// exactly "this history prefix is not linearizable".
class LinMonitor {
 public:
  explicit LinMonitor(const SeqSpec* spec);

  // Returns alive() after consuming the action.
  bool on_action(const Action& a);

  bool alive() const { return !cands_.empty(); }

  // Canonical digest of the candidate set; safe for memoization keys.
  std::uint64_t digest() const;

  // A linearization witness for the consumed history, if one exists.
  std::optional<std::vector<LinOp>> witness() const;

  std::size_t candidate_count() const { return cands_.size(); }

 private:
  struct WitNode {
    LinOp op;
    std::shared_ptr<const WitNode> prev;
  };

  struct Cand {
    Value state;
    std::map<InvId, std::pair<std::string, Value>> pending;  // called, not linearized
    std::map<InvId, Value> awaiting;                         // linearized, not returned
    std::shared_ptr<const WitNode> wit;                      // not part of identity

    std::uint64_t key() const;
  };

  void dedup();

  const SeqSpec* spec_;
  std::vector<Cand> cands_;
};

struct LinVerdict {
  enum class Status { Linearizable, NotLinearizable, BoundExceeded };
  Status status = Status::Linearizable;
  History witness;             // sequential witness when linearizable
  std::size_t refuted_at = 0;  // history index where the candidate set died
};

// Decision procedure for a single history. Sound and complete for
// histories with at most max_invocations invocations.
LinVerdict check_linearizable(const History& h, const SeqSpec& spec,
                              std::size_t max_invocations = 6);

}  // namespace sim
