#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "slbag/objects.hpp"
#include "slbag/workload.hpp"

namespace slbag {

/// Pseudocode line labels; serialized into trace files. Labels are unique per
/// algorithm (parsing is done in algorithm context), and map 1:1 onto the
/// numbered lines that perform shared-memory accesses.
enum class Line : std::uint8_t {
  None,
  // growable-array queue (LiQueue)
  F1InsIncMax, F1InsWriteItem,
  F1TakeReadMax, F1TakeReadItem, F1TakeTas,
  // growable-array bag with Done counter (UnboundedSl)
  F2InsIncAlloc, F2InsWriteItem, F2InsIncDone,
  F2TakeReadDone, F2TakeReadAlloc, F2TakeReadItem, F2TakeTas, F2TakeRereadDone,
  // wait-free 1-bounded bag (Wf1Bounded)
  F3InsCheckTs, F3InsClearItem, F3InsCollect, F3InsWriteAlloc, F3InsResetTs, F3InsWriteItem,
  F3TakeReadAlloc, F3TakeWriteHazard, F3TakeReadItem, F3TakeTas,
  F3TakeClearHazard1, F3TakeClearHazard2,
  // 1-bounded bag with ABA-detecting Done (Sl1Bounded)
  F4InsCheckTs, F4InsClearItem, F4InsCollect, F4InsWriteAlloc, F4InsResetTs, F4InsWriteItem,
  F4InsDwriteDone,
  F4TakeDreadDone, F4TakeReadAlloc, F4TakeWriteHazard, F4TakeReadItem, F4TakeTas,
  F4TakeClearHazard1, F4TakeClearHazard2, F4TakeRereadDone,
  // b-bounded bag (SlBounded)
  F5InsDreadTakeDone, F5InsCheckTs, F5InsClearItem, F5InsCollect, F5InsWriteAlloc,
  F5InsResetTs, F5InsWriteItem, F5InsDwriteInsertDone, F5InsRereadTakeDone,
  F5TakeDreadInsertDone, F5TakeReadAlloc, F5TakeWriteHazard, F5TakeReadItem, F5TakeTas,
  F5TakeClearHazard1, F5TakeDwriteTakeDone, F5TakeClearHazard2, F5TakeRereadInsertDone,
  F5TakeDwriteTakeDoneEmpty,
};

const char* line_token(Line l);
Line line_from_token(AlgorithmId algo, const std::string& tok);

/// Slot map from logical object names to SimMemory/LockedMemory slots.
/// Arrays are 1-based: Items[i] lives at items[i-1].
struct Layout {
  std::vector<int> items, ts, hazards;
  int max_slot = -1;
  int allocated_slot = -1;
  int done_slot = -1;
  int insert_done_slot = -1;
  int take_done_slot = -1;
};

/// Control phase = the line whose shared access the next step() performs.
enum class Phase : std::uint8_t {
  Idle,
  F1InsIncMax, F1InsWriteItem,
  F1TakeReadMax, F1TakeReadItem, F1TakeTas,
  F2InsIncAlloc, F2InsWriteItem, F2InsIncDone,
  F2TakeReadDone, F2TakeReadAlloc, F2TakeReadItem, F2TakeTas, F2TakeRereadDone,
  F3InsCheckTs, F3InsClearItem, F3InsCollect, F3InsWriteAlloc, F3InsResetTs, F3InsWriteItem,
  F3TakeReadAlloc, F3TakeWriteHazard, F3TakeReadItem, F3TakeTas,
  F3TakeClearHazard1, F3TakeClearHazard2,
  F4InsCheckTs, F4InsClearItem, F4InsCollect, F4InsWriteAlloc, F4InsResetTs, F4InsWriteItem,
  F4InsDwriteDone,
  F4TakeDreadDone, F4TakeReadAlloc, F4TakeWriteHazard, F4TakeReadItem, F4TakeTas,
  F4TakeClearHazard1, F4TakeClearHazard2, F4TakeRereadDone,
  F5InsDreadTakeDone, F5InsCheckTs, F5InsClearItem, F5InsCollect, F5InsWriteAlloc,
  F5InsResetTs, F5InsWriteItem, F5InsDwriteInsertDone, F5InsRereadTakeDone,
  F5TakeDreadInsertDone, F5TakeReadAlloc, F5TakeWriteHazard, F5TakeReadItem, F5TakeTas,
  F5TakeClearHazard1, F5TakeDwriteTakeDone, F5TakeClearHazard2, F5TakeRereadInsertDone,
  F5TakeDwriteTakeDoneEmpty,
};

/// Per-process machine state. Plain data: cloned, undone, and hashed by value.
/// Producer-persistent fields (m, used, alloc, choose_count) survive across
/// operations; the rest is per-operation scratch.
struct ProcState {
  std::uint16_t next_req = 0;   // next workload request index
  std::uint16_t ops_begun = 0;  // operations begun by this process
  bool active = false;
  bool at_loop_head = false;    // next step starts a new repeat-loop iteration
  OpRequest req;
  std::uint16_t op_steps = 0;
  std::uint16_t loop_iter = 0;
  Phase phase = Phase::Idle;
  // scratch / persistent locals
  Value x = kBottom;
  Value d = 0;
  std::int32_t m = 0;
  std::int32_t a = 0;
  std::int32_t i = 0;
  std::int32_t max_new = 0, max_old = 0, taken_new = 0, taken_old = 0;
  CellMask used = 0, alloc = 0, hazardous = 0, allocated = 0, check_list = 0, reset_list = 0;
  std::uint16_t choose_count = 0;
};

/// What one shared-memory step did.
struct StepResult {
  Line line = Line::None;
  int slot = -1;
  PrimAction action = PrimAction::Read;
  PrimValue arg, resp;
  ObjectState pre;  // touched slot's state before the access (simulator backend only)
  bool completed = false;
  OpResponse result;
  // Post-step snapshots of cells the validator rules need (recorded at the
  // announced-cell read of the wait-free 1-bounded bag): (slot, state token).
  int extra_n = 0;
  std::array<std::pair<int, PrimValue>, 2> extra{};
};

/// Builds the initial object population for a workload into mem/lay.
/// prealloc_cells pre-grows the growable arrays (required for the locked
/// backend, which must not grow while executors run).
template <class Mem>
void build_memory(const Workload& wl, Mem& mem, Layout& lay, int prealloc_cells = 0);

/// Initial per-process machine states (producer locals set per algorithm).
std::vector<ProcState> initial_procs(const Workload& wl);

/// Begins an operation: role and pending checks, then arms the first phase.
void machine_begin(const Workload& wl, ProcState& ps, int pid, const OpRequest& req);

/// Performs exactly one shared-memory access for process pid and advances its
/// local state to just before the next shared access (or completion).
StepResult machine_step_sim(const Workload& wl, Layout& lay, SimMemory& mem,
                            ProcState& ps, int pid);
StepResult machine_step_locked(const Workload& wl, Layout& lay, LockedMemory& mem,
                               ProcState& ps, int pid);

/// Appends the fields of ps that determine future behavior to a hash key.
void proc_key(const ProcState& ps, std::string& out);
/// Appends an object's future-relevant state (ABA registers collapse to
/// per-process staleness bits) to a hash key.
void object_key(const ObjectState& st, std::string& out);

extern template void build_memory<SimMemory>(const Workload&, SimMemory&, Layout&, int);
extern template void build_memory<LockedMemory>(const Workload&, LockedMemory&, Layout&, int);

}  // namespace slbag
