// Sequential specifications (bag, b-bounded bag, FIFO queue) and a
// black-box linearizability checker for recorded operation histories.
//
// The bag's Take is nondeterministic: on a non-empty multiset it may remove
// any element, so spec_apply returns one branch per distinct element.  The
// checker explores all insertion orders consistent with the happens-before
// partial order, all inclusion/exclusion choices for pending operations, and
// all Take branches, with memoization of failed (placed-set, state) pairs.
#pragma once

#include "slbag/common.hpp"
#include "slbag/trace.hpp"
#include "slbag/workload.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace slbag {

enum class SpecKind : uint8_t {
  Bag,         // unbounded multiset
  BoundedBag,  // multiset with capacity b; Insert at capacity returns FULL
  Queue,       // FIFO; Insert enqueues, Take dequeues
};

std::string spec_token(SpecKind kind);

// Maps the distinct values a workload may insert to small dense ids so spec
// states pack into a few machine words.  At most 16 distinct values are
// supported, which is ample for exhaustively explorable workloads.
struct SpecUniverse {
  std::vector<Value> values;  // id -> value; ids are 0-based

  int id_of(Value v) const;  // -1 when v was never declared
  static SpecUniverse from_workload(const Workload& wl);
  static SpecUniverse from_values(std::vector<Value> vals);
};

// Packed sequential-object state.  Bags use a bitmask of present value ids
// (the no-value-repetition assumption makes the multiset a set); queues pack
// value ids into 4-bit nibbles, front at the low end.
struct SpecState {
  uint32_t bag = 0;
  uint64_t queue = 0;
  uint8_t queue_len = 0;

  bool operator==(const SpecState&) const = default;
  int size() const;  // number of stored elements
};

// One nondeterministic branch of a specification transition.
struct SpecBranch {
  OpResponse resp;
  SpecState next;
};

// All (response, next-state) branches for `req` from `state`.  `capacity`
// is only consulted for BoundedBag.  A bag Take on a non-empty state yields
// one branch per present element and no EMPTY branch; on an empty state it
// yields exactly the EMPTY branch.  Queue transitions are deterministic.
std::vector<SpecBranch> spec_apply(SpecKind kind, int capacity, const SpecUniverse& uni,
                                   const SpecState& state, const OpRequest& req);

// True iff some branch path through spec_apply reproduces every response in
// order, starting from the empty state.
bool is_legal(SpecKind kind, int capacity, const SpecUniverse& uni,
              const std::vector<std::pair<OpRequest, OpResponse>>& seq);

// One linearization: operation indices into the checked history, in
// linearization order, each with the response the spec produced for it.
// Pending operations that were excluded simply do not appear.
struct LinOrder {
  std::vector<int> order;
  std::vector<OpResponse> resps;
};

enum class LinVerdict : uint8_t {
  Yes,           // witness found
  No,            // exhaustive search found no linearization
  Inconclusive,  // search-node ceiling hit before an answer
};

struct LinResult {
  LinVerdict verdict = LinVerdict::Inconclusive;
  LinOrder witness;        // populated when verdict == Yes
  uint64_t nodes = 0;      // search nodes visited
};

// Wing & Gong style backtracking check of a recorded history.  Completed
// operations must be placed with their observed response; pending operations
// (complete_seq < 0) may be placed with any spec-consistent response or left
// out.  `node_ceiling` < 0 means unlimited.  `initial` lets callers check a
// window that starts from a known quiescent object value rather than empty.
LinResult linearizable(SpecKind kind, int capacity, const SpecUniverse& uni,
                       const std::vector<OpRecord>& ops, int64_t node_ceiling = -1,
                       const SpecState& initial = {});

// Enumerates every linearization of the history (same search space as
// `linearizable`, without memoization so no witness is missed).  Intended for
// fixture-scale histories only; the callback returns false to stop early.
// `include_pending` = false restricts the search to completed operations.
void linearize_all(SpecKind kind, int capacity, const SpecUniverse& uni,
                   const std::vector<OpRecord>& ops, bool include_pending,
                   const std::function<bool(const LinOrder&)>& visit);

}  // namespace slbag
