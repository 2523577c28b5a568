// Per-algorithm linearization-point assignment and the trace validator.
//
// Each algorithm comes with rules mapping an execution to a total order of
// its operations: an operation's point is an event of the trace — sometimes
// an event of another process (a coupled Insert linearizes immediately
// before the Take that claimed its cell).  assign_lin_points computes that
// order for a finished or partial trace; validate_trace then checks interval
// containment, legality of the ordered sequence under the matching
// sequential spec, and — for the algorithms whose rules are prefix-stable —
// that every event-prefix of the trace is assigned a prefix of the full
// order.
#pragma once

#include <string>
#include <vector>

#include "slbag/specs.hpp"
#include "slbag/trace.hpp"

namespace slbag {

/// One placed operation.  Sorting is lexicographic over (point_seq, bucket,
/// cell, pid, sub): bucket 0 holds successful Takes and their coupled
/// Inserts (the Insert directly before its Take via `sub`), bucket 1 holds
/// EMPTY Takes placed at a foreign event, bucket 2 the operation whose own
/// event anchors the point.
struct LinPoint {
  int op = -1;         // index into trace.ops
  OpResponse resp;     // response the assignment commits to
  int point_seq = -1;  // anchoring event's seq
  int bucket = 2;
  int cell = 0;  // tie key within bucket 0: the taken cell
  int pid = 0;   // tie key: owning process (bucket 0: the Take's process)
  int sub = 0;   // coupled Insert = 0, its Take = 1

  bool same_op_as(const LinPoint& o) const { return op == o.op; }
};

struct LinAssignment {
  std::vector<LinPoint> seq;  // sorted by the composite key
  std::string error;          // rule-coverage failure; empty means assigned

  bool ok() const { return error.empty(); }
};

/// Applies the algorithm's linearization rules to a trace.  Completed
/// operations must all receive a point (otherwise `error` reports the rule
/// gap); pending operations are placed exactly when a rule fires for them
/// (successful t&s performed, coupling established, ...).
LinAssignment assign_lin_points(AlgorithmId algo, const Trace& tr);

struct ValidateReport {
  bool ok = true;
  std::string error;  // first failed check, with the offending seq/op
};

/// Checks an assignment end to end: (a) every point lies inside its
/// operation's interval, (b) the ordered (request, response) sequence is
/// legal under `spec` (capacity taken from the trace's workload), and
/// (c) for the prefix-stable rule sets (the Done-counter bag, the ABA
/// 1-bounded bag, and the b-bounded bag) every event-prefix is assigned a
/// prefix of the full order.  The wait-free 1-bounded bag is checked for
/// (a) and (b) only.  The growable-array queue's points also get (a) and
/// (b) only: they place an EMPTY Take at its final array-bound read, which
/// is consistent per trace but not prefix-stable — a pending Take can land
/// retroactively before inserts that completed earlier, so (c) would fail
/// by design rather than by implementation error.
ValidateReport validate_trace(AlgorithmId algo, const Trace& tr, SpecKind spec);

}  // namespace slbag
