#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slbag/common.hpp"
#include "slbag/workload.hpp"

namespace slbag {

/// Native-parallel stress backend.
///
/// Unlike the virtual scheduler, this backend runs the algorithms on real
/// threads over std::atomic base objects (sequentially consistent accesses,
/// matching the atomic-base-object model the interpreted machine uses).  One
/// executor thread plays one process; the only inter-thread synchronization
/// is the algorithms' own primitives.  Each operation is stamped with a
/// global monotonic clock at invocation and completion, giving the standard
/// coarse happens-before order: a response precedes an invocation iff its
/// completion timestamp is smaller; otherwise the operations overlap.
///
/// Offline, the recorded history is checked three ways:
///   - accounting: no value is taken twice, every taken value was inserted
///     by a successful Insert, and no Take completes before its source
///     Insert was invoked;
///   - windows: executors pace themselves against shared wall-clock epoch
///     boundaries (pure clock reads; no inter-thread waiting), performing a
///     fixed quota of operations per epoch.  A boundary that no operation
///     straddles is a quiescent cut; the bag content there is known exactly
///     from the completed responses.  Operation windows between adjacent
///     quiescent cuts are fed to linearizable() with that content as the
///     initial state;
///   - capacity: for the b-bounded bag, the window check also validates that
///     FULL responses only occur where a linearization holds b elements.
///
/// Only the two algorithms named by the acceptance suite have native
/// implementations: the growable-array bag (UNBOUNDED_SL) and the b-bounded
/// single-producer bag (SL_BB).

/// Seeded workload-generator parameters for one stress call.
struct StressGen {
  int n = 4;             // algorithm's n: processes (multi-role) or consumers
  int b = 0;             // capacity; b-bounded bag only
  int ops_per_process = 1000;
  std::uint64_t seed = 1;
  int insert_percent = 40;  // multi-role mix: chance a generated op inserts
  std::uint64_t epoch_ns = 2'000'000;  // epoch length for window pacing
  bool jitter = true;    // seeded sched-yields between primitive accesses
};

/// One completed operation in a recorded history.
struct StressOp {
  int pid = 0;
  OpRequest req;
  OpResponse resp;
  std::uint64_t invoke_ns = 0;
  std::uint64_t complete_ns = 0;
};

/// Completed-history summary for one iteration.
struct StressSummary {
  AlgorithmId algorithm{};
  int iteration = 0;
  std::uint64_t seed = 0;   // per-iteration seed derived from StressGen::seed
  std::uint64_t t0_ns = 0;  // epoch-grid origin on the global clock

  std::vector<StressOp> history;  // merged, sorted by invocation time

  // Response tallies.
  std::int64_t ops = 0;
  std::int64_t inserts_ok = 0;
  std::int64_t fulls = 0;
  std::int64_t takes = 0;
  std::int64_t empties = 0;

  // Whole-history accounting violations (all must be zero).
  std::int64_t duplicate_takes = 0;  // value taken more than once
  std::int64_t unsourced_takes = 0;  // taken value never inserted OK
  std::int64_t acausal_takes = 0;    // take completed before its insert began

  // Window sampling between quiescent epoch cuts.
  std::int64_t epochs = 0;
  std::int64_t cuts_valid = 0;
  std::int64_t windows_checked = 0;
  std::int64_t windows_passed = 0;
  std::int64_t windows_skipped = 0;  // wrong size, oversized universe, or unquiet

  double wall_seconds = 0;
  std::string note;  // first failure, when any

  bool ok() const {
    return duplicate_takes == 0 && unsourced_takes == 0 && acausal_takes == 0 &&
           windows_checked == windows_passed;
  }
};

/// Per-process request streams for one iteration; a pure function of
/// (algorithm, gen, iteration), so a fixed seed reproduces the workload
/// exactly even though thread schedules differ between runs.  Multi-role
/// algorithms draw an Insert with probability insert_percent per slot;
/// single-producer algorithms give process 0 all Inserts and the consumers
/// all Takes.  Every insert value is distinct.
std::vector<std::vector<OpRequest>> stress_workload(AlgorithmId alg, const StressGen& gen,
                                                    int iteration);

/// Runs `iterations` independent stress rounds and returns one summary per
/// round.  `executors` must equal the algorithm's process count for gen.n
/// (one executor per process).
std::vector<StressSummary> stress(AlgorithmId alg, const StressGen& gen, int executors,
                                  int iterations);

/// Recomputes every tally and check field of `s` from its history and epoch
/// grid (t0_ns).  stress() runs this same audit on each fresh history;
/// having it separate lets a test tamper with a recorded history and watch
/// the verdict flip.
void stress_audit(StressSummary& s, const StressGen& gen, int executors);

}  // namespace slbag
