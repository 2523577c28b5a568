#pragma once

#include <array>
#include <string>
#include <vector>

#include "slbag/linrules.hpp"
#include "slbag/machine.hpp"
#include "slbag/specs.hpp"
#include "slbag/trace.hpp"
#include "slbag/workload.hpp"

namespace slbag {

/// One executed step as the monitors consume it: the fields of the recorded
/// event plus the operation context. `seq` is only used to label recorded
/// points (pass -1 when recording is off); no monitor decision depends on it,
/// which is what makes monitor state mergeable across schedules of different
/// lengths.
struct StepView {
  int seq = -1;
  int pid = -1;
  int op_seq = 0;  // per-process operation ordinal of the stepping process
  Line line = Line::None;
  int cell = 0;  // 1-based array index for Items/TS/Hazards events, else 0
  PrimValue arg, resp;
  bool invoked = false;
  bool completed = false;
  OpRequest req;      // the stepping process's current request
  OpResponse result;  // meaningful when completed
  int extra_n = 0;
  std::array<std::pair<int, PrimValue>, 2> extra{};
};

struct MonitorConfig {
  /// Sequential spec the placements are folded under. Default is chosen from
  /// the algorithm (bag for the growable-array bag, bounded bag otherwise).
  SpecKind spec = SpecKind::Bag;
  int capacity = 0;  // 0 = derive from the algorithm / workload
  /// Additionally fold the same placement order under the FIFO queue spec;
  /// a trace whose order passes is thereby witnessed queue-linearizable.
  bool fold_queue = false;
  /// Machine-state invariants (array population, TS=0 on write, used-cells
  /// emptiness, allocation bounds) and the loop-progress checks.
  bool lemmas = true;
  /// Keep the emitted placement list (tree mode; off for merged traversals).
  bool record = false;
};

/// Online checker driven one shared-memory step at a time. It fires the
/// linearization rules of the four bag algorithms as their events occur,
/// folds the resulting operation order against the sequential spec, and
/// checks the machine-state invariants. All decisions are functions of
/// (machine state, monitor state, current step), never of the schedule
/// position, so a StepMonitor travels inside merged-state exploration keys:
/// append_key() contributes exactly the fields that are not already
/// determined by the machine-state key.
///
/// Not available for the growable-array queue: its points place a pending
/// Take retroactively, which no online never-revised engine can express.
class StepMonitor {
 public:
  StepMonitor(const Workload& wl, const MonitorConfig& cfg);

  /// Processes one step. `lay`, `mem` and `procs` must reflect the state
  /// *after* the step. Returns false on the first violation; the monitor
  /// stays failed from then on.
  bool on_step(const StepView& sv, const Layout& lay, const SimMemory& mem,
               const std::vector<ProcState>& procs);

  bool ok() const { return err_.empty(); }
  const std::string& error() const { return err_; }

  /// Current bag/bounded-bag fold state (the multiset as a value mask).
  const SpecState& fold() const { return bag_; }

  /// Placements emitted so far, in applied order (cfg.record only).
  const std::vector<LinPoint>& recorded() const { return rec_; }
  /// Largest per-operation shared-step count seen at a completion.
  int max_op_steps() const { return max_op_steps_; }

  /// Monitor contribution to a merged-state key.
  void append_key(std::string& out) const;

 private:
  struct PerProc {
    bool placed = false;
    OpResponse presp;
    // wait-free 1-bounded EMPTY provisioning
    std::uint8_t mode = 0;  // 0 none, 1 at-read ok, 2 at-read bad, 3 armed,
                            // 4 anchored ok, 5 anchored bad
    std::uint8_t a_cell = 0;     // announced cell (consumers)
    std::int8_t take_val = -1;   // last Items value read (-1 = bottom)
    // b-bounded consumers
    bool awaiting = false;  // successful t&s waiting for its anchor event
    bool poised = false;    // reread of InsertDone returned false
    // producers: coupling window
    bool win_open = false;
    std::uint8_t win_cell = 0;
    std::uint8_t win_tas = 0;       // successful t&s count inside the window
    std::int8_t win_take = -1;      // pid of the prospective coupled Take
    // ABA mirrors: (ever-dread, stale) per register
    std::uint8_t aba1 = 0, aba2 = 0;
    // Bookkeeping excluded from the key (derivable from machine state or
    // meaningful only in record mode).
    std::uint16_t op_seq = 0;  // current operation's per-process ordinal
    int anchor_seq = -1;
  };

  void fail(const std::string& msg);
  bool place(int pid, const OpResponse& resp, int value, int seq, int bucket,
             int cell, int sub);
  bool fold_insert(int pid, int value, int seq, int bucket, int cell, int sub);
  bool fold_take(int pid, int value, int seq, int bucket, int cell, int sub);
  bool fold_empty(int pid, int seq, int bucket, int cell);
  bool fold_full(int pid, int value, int seq, int bucket);
  bool lemma_checks(const StepView& sv, const Layout& lay, const SimMemory& mem,
                    const std::vector<ProcState>& procs);
  bool aba_note(PerProc& pp, std::uint8_t PerProc::* reg, bool is_dread,
                const StepView& sv);
  bool on_completion(const StepView& sv);

  bool step_f2(const StepView& sv);
  bool step_f3(const StepView& sv);
  bool step_f4(const StepView& sv);
  bool step_f5(const StepView& sv);

  Workload wl_;
  MonitorConfig cfg_;
  SpecKind spec_;
  int cap_ = 1;
  SpecUniverse uni_;
  SpecState bag_;    // fold under cfg.spec
  SpecState queue_;  // fold under the FIFO queue (cfg.fold_queue)
  std::vector<PerProc> pp_;
  std::string err_;
  std::vector<LinPoint> rec_;
  int max_op_steps_ = 0;
};

/// Converts a recorded/replayed trace event to the monitor's step view.
StepView step_view(const Trace& tr, int seq);

/// Runs a StepMonitor over a complete trace (record mode on) and returns the
/// emitted placement order, sorted with the same composite order the offline
/// rules use. Used to cross-check the online engine against
/// assign_lin_points.
struct MonitorRun {
  bool ok = true;
  std::string error;
  std::vector<LinPoint> seq;
  int max_op_steps = 0;
};
MonitorRun monitor_run_trace(const Trace& tr, const MonitorConfig& cfg);

}  // namespace slbag
