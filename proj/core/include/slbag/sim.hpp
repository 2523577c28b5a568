#pragma once

#include <functional>
#include <string>
#include <vector>

#include "slbag/machine.hpp"
#include "slbag/trace.hpp"
#include "slbag/workload.hpp"

namespace slbag {

/// Exploration bounds. max_loop_iters disables a process at a repeat-loop
/// head once the next iteration would exceed the cap; max_steps cuts whole
/// schedules. Cut runs are reported as non-quiescent and make the
/// exploration's completeness flag false.
struct RunLimits {
  int max_steps = 10000;
  int max_loop_iters = 8;
  long long node_ceiling = -1;  // -1 = unlimited
};

/// Deterministic single-threaded executor: one process steps at a time,
/// each step is one shared-memory access. Operations auto-begin from the
/// workload's request list when a process is stepped while idle.
class Runner {
 public:
  explicit Runner(const Workload& wl);

  /// True if pid can take a step: it has a pending operation or an unstarted
  /// request, and is not disabled by the loop-iteration cap.
  bool enabled(int pid, const RunLimits& lim) const;
  /// True once every request ran to completion.
  bool quiescent() const;

  const Event& step(int pid);

  /// Undo token for one step; records restore everything step() changed.
  struct Undo {
    int pid = -1;
    ProcState proc;
    int slot = -1;
    ObjectState obj;
    bool op_pushed = false;
    int completed_op = -1;  // index into trace ops, -1 if none completed
    int cells_before = 0;   // growable-array length before the step
    int slots_before = 0;   // memory slot count before the step
  };
  Undo step_undoable(int pid);
  void undo(const Undo& u);

  /// Hash key over memory and process states (not the trace): two runs with
  /// equal keys behave identically under every future schedule.
  std::string state_key() const;

  const Trace& trace() const { return tr_; }
  const Workload& workload() const { return tr_.wl; }
  const SimMemory& memory() const { return mem_; }
  const Layout& layout() const { return lay_; }
  const std::vector<ProcState>& procs() const { return procs_; }
  int steps() const { return static_cast<int>(tr_.events.size()); }

 private:
  SimMemory mem_;
  Layout lay_;
  std::vector<ProcState> procs_;
  Trace tr_;
};

/// Runs a fixed schedule (sequence of pids); throws UsageError if an entry
/// is not enabled. Used by fixtures and tests.
Trace run_schedule(const Workload& wl, const std::vector<int>& schedule,
                   const RunLimits& lim = RunLimits{});

/// Re-executes a recorded trace and returns the enriched re-run (slots and
/// snapshot fields filled in). Throws UsageError at the first divergence:
/// any mismatch of line, object, action, argument, response, or operation
/// boundaries marks the file as not a run of the named algorithm.
Trace replay(const Trace& recorded);

/// Statistics of one exploration. complete means no cut was applied: every
/// maximal schedule within the limits ended quiescent and none was truncated.
struct ExploreStats {
  long long traces = 0;
  long long nodes = 0;
  bool complete = true;
};

/// Visits every maximal trace of the schedule tree in depth-first order
/// (processes tried in pid order). The visitor's second argument tells
/// whether the run ended quiescent or was cut by a bound; returning false
/// aborts the exploration (stats.complete turns false).
using TraceVisitor = std::function<bool(const Trace&, bool quiescent)>;
ExploreStats explore(const Workload& wl, const RunLimits& lim, const TraceVisitor& visit);

}  // namespace slbag
