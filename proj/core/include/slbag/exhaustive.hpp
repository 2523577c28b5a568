#pragma once

#include <string>

#include "slbag/monitors.hpp"
#include "slbag/sim.hpp"
#include "slbag/workload.hpp"

namespace slbag {

/// Result of a merged-state exploration (explore_merged).
struct MergedStats {
  bool ok = true;             ///< no monitor violation on any reachable schedule
  bool inconclusive = false;  ///< node ceiling hit before the state space closed
  std::string error;          ///< first violation message
  std::string failing_trace;  ///< schedule exhibiting it, in trace text form
  /// Number of complete traces (maximal quiescent schedules), as a decimal
  /// string; a trailing '+' marks a saturated 128-bit count (lower bound).
  std::string leaves = "0";
  unsigned long long leaves_u64 = 0;  ///< same, clamped to 64 bits
  bool leaves_saturated = false;
  unsigned long long nodes = 0;      ///< distinct (machine, monitor) states
  unsigned long long edges = 0;      ///< expanded transitions
  unsigned long long dead_ends = 0;  ///< distinct capped states with no enabled step
  int max_op_steps = 0;  ///< largest per-operation shared-step count at any completion
};

/// Runs the online step monitor over every reachable schedule of the
/// workload. Schedules that land in the same combined (machine, monitor)
/// state are merged: the subtree is explored once and its trace count reused,
/// so the full schedule *tree* (all interleavings) is covered while the work
/// is proportional to the state *graph*. Possible because the monitor's
/// verdicts depend only on that combined state, never on the schedule prefix
/// that reached it; explore() with a per-trace validator checks the same
/// property literally and is the cross-check at small scales.
///
/// Stops at the first violation and reports the concrete schedule that hit
/// it. `lim.node_ceiling` (< 0 = unlimited) bounds the distinct states
/// visited; exceeding it aborts the run as inconclusive.
MergedStats explore_merged(const Workload& wl, const RunLimits& lim,
                           const MonitorConfig& cfg);

}  // namespace slbag
