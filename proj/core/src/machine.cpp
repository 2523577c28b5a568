#include "slbag/machine.hpp"

#include <stdexcept>
#include <type_traits>
#include <unordered_map>

namespace slbag {

namespace {

/// Mask of all cell indices 1..k.
CellMask cells_upto(int k) {
  return k >= 32 ? ~CellMask{0} : (CellMask{1} << k) - 1;
}

struct LineName {
  Line line;
  const char* tok;
};

constexpr LineName kLineNames[] = {
    {Line::F1InsIncMax, "ins:inc_max"},
    {Line::F1InsWriteItem, "ins:write_item"},
    {Line::F1TakeReadMax, "take:read_max"},
    {Line::F1TakeReadItem, "take:read_item"},
    {Line::F1TakeTas, "take:tas"},
    {Line::F2InsIncAlloc, "ins:inc_alloc"},
    {Line::F2InsWriteItem, "ins:write_item"},
    {Line::F2InsIncDone, "ins:inc_done"},
    {Line::F2TakeReadDone, "take:read_done"},
    {Line::F2TakeReadAlloc, "take:read_alloc"},
    {Line::F2TakeReadItem, "take:read_item"},
    {Line::F2TakeTas, "take:tas"},
    {Line::F2TakeRereadDone, "take:reread_done"},
    {Line::F3InsCheckTs, "ins:check_ts"},
    {Line::F3InsClearItem, "ins:clear_item"},
    {Line::F3InsCollect, "ins:collect"},
    {Line::F3InsWriteAlloc, "ins:write_alloc"},
    {Line::F3InsResetTs, "ins:reset_ts"},
    {Line::F3InsWriteItem, "ins:write_item"},
    {Line::F3TakeReadAlloc, "take:read_alloc"},
    {Line::F3TakeWriteHazard, "take:write_hazard"},
    {Line::F3TakeReadItem, "take:read_item"},
    {Line::F3TakeTas, "take:tas"},
    {Line::F3TakeClearHazard1, "take:clear_hazard_taken"},
    {Line::F3TakeClearHazard2, "take:clear_hazard_empty"},
    {Line::F4InsCheckTs, "ins:check_ts"},
    {Line::F4InsClearItem, "ins:clear_item"},
    {Line::F4InsCollect, "ins:collect"},
    {Line::F4InsWriteAlloc, "ins:write_alloc"},
    {Line::F4InsResetTs, "ins:reset_ts"},
    {Line::F4InsWriteItem, "ins:write_item"},
    {Line::F4InsDwriteDone, "ins:dwrite_done"},
    {Line::F4TakeDreadDone, "take:dread_done"},
    {Line::F4TakeReadAlloc, "take:read_alloc"},
    {Line::F4TakeWriteHazard, "take:write_hazard"},
    {Line::F4TakeReadItem, "take:read_item"},
    {Line::F4TakeTas, "take:tas"},
    {Line::F4TakeClearHazard1, "take:clear_hazard_taken"},
    {Line::F4TakeClearHazard2, "take:clear_hazard_empty"},
    {Line::F4TakeRereadDone, "take:reread_done"},
    {Line::F5InsDreadTakeDone, "ins:dread_takedone"},
    {Line::F5InsCheckTs, "ins:check_ts"},
    {Line::F5InsClearItem, "ins:clear_item"},
    {Line::F5InsCollect, "ins:collect"},
    {Line::F5InsWriteAlloc, "ins:write_alloc"},
    {Line::F5InsResetTs, "ins:reset_ts"},
    {Line::F5InsWriteItem, "ins:write_item"},
    {Line::F5InsDwriteInsertDone, "ins:dwrite_insertdone"},
    {Line::F5InsRereadTakeDone, "ins:reread_takedone"},
    {Line::F5TakeDreadInsertDone, "take:dread_insertdone"},
    {Line::F5TakeReadAlloc, "take:read_alloc"},
    {Line::F5TakeWriteHazard, "take:write_hazard"},
    {Line::F5TakeReadItem, "take:read_item"},
    {Line::F5TakeTas, "take:tas"},
    {Line::F5TakeClearHazard1, "take:clear_hazard_taken"},
    {Line::F5TakeDwriteTakeDone, "take:dwrite_takedone"},
    {Line::F5TakeClearHazard2, "take:clear_hazard_empty"},
    {Line::F5TakeRereadInsertDone, "take:reread_insertdone"},
    {Line::F5TakeDwriteTakeDoneEmpty, "take:dwrite_takedone_empty"},
};

/// Line ranges per algorithm, for context-sensitive token parsing.
bool line_belongs(AlgorithmId algo, Line l) {
  auto in = [&](Line lo, Line hi) {
    return static_cast<int>(l) >= static_cast<int>(lo) &&
           static_cast<int>(l) <= static_cast<int>(hi);
  };
  switch (algo) {
    case AlgorithmId::LiQueue: return in(Line::F1InsIncMax, Line::F1TakeTas);
    case AlgorithmId::UnboundedSl: return in(Line::F2InsIncAlloc, Line::F2TakeRereadDone);
    case AlgorithmId::Wf1Bounded: return in(Line::F3InsCheckTs, Line::F3TakeClearHazard2);
    case AlgorithmId::Sl1Bounded: return in(Line::F4InsCheckTs, Line::F4TakeRereadDone);
    case AlgorithmId::SlBounded: return in(Line::F5InsDreadTakeDone, Line::F5TakeDwriteTakeDoneEmpty);
  }
  return false;
}

}  // namespace

const char* line_token(Line l) {
  for (const auto& ln : kLineNames)
    if (ln.line == l) return ln.tok;
  return "?";
}

Line line_from_token(AlgorithmId algo, const std::string& tok) {
  for (const auto& ln : kLineNames)
    if (line_belongs(algo, ln.line) && tok == ln.tok) return ln.line;
  throw UsageError("unknown line label for " + std::string(algorithm_token(algo)) + ": " + tok);
}

namespace {

/// Appends one growable cell pair (Items[k], TS[k]) to the instance.
template <class Mem>
void grow_one_cell(Mem& mem, Layout& lay) {
  auto k = static_cast<std::int16_t>(lay.items.size() + 1);
  lay.items.push_back(mem.add({ObjName::Items, k}, ObjectState::make_register(kBottom)));
  lay.ts.push_back(mem.add({ObjName::TS, k}, ObjectState::make_tas(0, false)));
}

/// Makes sure growable cells 1..upto exist. The simulator backend grows on
/// demand; the locked backend must be fully preallocated before executors
/// start, because growing the slot vectors would race with concurrent reads.
template <class Mem>
void ensure_cells(Mem& mem, Layout& lay, int upto) {
  if (static_cast<int>(lay.items.size()) >= upto) return;
  if constexpr (std::is_same_v<Mem, SimMemory>) {
    while (static_cast<int>(lay.items.size()) < upto) grow_one_cell(mem, lay);
  } else {
    throw std::logic_error("growable arrays must be preallocated for the locked backend");
  }
}

}  // namespace

template <class Mem>
void build_memory(const Workload& wl, Mem& mem, Layout& lay, int prealloc_cells) {
  lay = Layout{};
  const int n = wl.n;
  switch (wl.algorithm) {
    case AlgorithmId::LiQueue:
      lay.max_slot = mem.add({ObjName::Max, 0}, ObjectState::make_fai(1));
      break;
    case AlgorithmId::UnboundedSl:
      lay.allocated_slot = mem.add({ObjName::Allocated, 0}, ObjectState::make_fai(0));
      lay.done_slot = mem.add({ObjName::Done, 0}, ObjectState::make_fai(0));
      break;
    case AlgorithmId::Wf1Bounded:
    case AlgorithmId::Sl1Bounded: {
      for (int k = 1; k <= n + 1; ++k) {
        auto kk = static_cast<std::int16_t>(k);
        lay.items.push_back(mem.add({ObjName::Items, kk}, ObjectState::make_register(kBottom)));
        lay.ts.push_back(mem.add({ObjName::TS, kk}, ObjectState::make_tas(k == 1 ? 1 : 0, true)));
      }
      lay.allocated_slot = mem.add({ObjName::Allocated, 0}, ObjectState::make_register(1));
      for (int k = 1; k <= n; ++k)
        lay.hazards.push_back(
            mem.add({ObjName::Hazards, static_cast<std::int16_t>(k)}, ObjectState::make_register(kBottom)));
      if (wl.algorithm == AlgorithmId::Sl1Bounded)
        lay.done_slot = mem.add({ObjName::Done, 0}, ObjectState::make_aba());
      break;
    }
    case AlgorithmId::SlBounded: {
      if (n + wl.b > 32)
        throw UsageError("cell masks support at most 32 cells (n + b too large)");
      for (int k = 1; k <= n + wl.b; ++k) {
        auto kk = static_cast<std::int16_t>(k);
        lay.items.push_back(mem.add({ObjName::Items, kk}, ObjectState::make_register(kBottom)));
        lay.ts.push_back(mem.add({ObjName::TS, kk}, ObjectState::make_tas(0, true)));
      }
      lay.allocated_slot = mem.add({ObjName::Allocated, 0}, ObjectState::make_set_register(0));
      for (int k = 1; k <= n; ++k)
        lay.hazards.push_back(
            mem.add({ObjName::Hazards, static_cast<std::int16_t>(k)}, ObjectState::make_register(kBottom)));
      lay.insert_done_slot = mem.add({ObjName::InsertDone, 0}, ObjectState::make_aba());
      lay.take_done_slot = mem.add({ObjName::TakeDone, 0}, ObjectState::make_aba());
      break;
    }
  }
  for (int k = static_cast<int>(lay.items.size()); k < prealloc_cells; ++k) grow_one_cell(mem, lay);
}

template void build_memory<SimMemory>(const Workload&, SimMemory&, Layout&, int);
template void build_memory<LockedMemory>(const Workload&, LockedMemory&, Layout&, int);

std::vector<ProcState> initial_procs(const Workload& wl) {
  std::vector<ProcState> procs(wl.num_processes());
  if (wl.algorithm == AlgorithmId::Wf1Bounded || wl.algorithm == AlgorithmId::Sl1Bounded) {
    procs[0].m = 1;  // the producer reuses cell 1 until its first reallocation
  }
  return procs;
}

void machine_begin(const Workload& wl, ProcState& ps, int pid, const OpRequest& req) {
  if (ps.active) throw UsageError("process already has a pending operation");
  if (pid < 0 || pid >= wl.num_processes()) throw UsageError("process id out of range");
  if (single_producer(wl.algorithm)) {
    if (req.is_insert && pid != 0) throw UsageError("only process 0 may insert");
    if (!req.is_insert && pid == 0) throw UsageError("process 0 may only insert");
  }
  if (req.is_insert && req.value < 0) throw UsageError("insert values must be non-negative");

  ps.active = true;
  ps.req = req;
  ps.ops_begun++;
  ps.op_steps = 0;
  ps.loop_iter = 0;
  ps.at_loop_head = false;
  if (req.is_insert) ps.x = req.value;

  switch (wl.algorithm) {
    case AlgorithmId::LiQueue:
      if (req.is_insert) {
        ps.phase = Phase::F1InsIncMax;
      } else {
        ps.taken_old = ps.taken_new = 0;
        ps.max_old = ps.max_new = 0;
        ps.at_loop_head = true;
        ps.phase = Phase::F1TakeReadMax;
      }
      break;
    case AlgorithmId::UnboundedSl:
      if (req.is_insert) {
        ps.phase = Phase::F2InsIncAlloc;
      } else {
        ps.at_loop_head = true;
        ps.phase = Phase::F2TakeReadDone;
      }
      break;
    case AlgorithmId::Wf1Bounded:
      ps.phase = req.is_insert ? Phase::F3InsCheckTs : Phase::F3TakeReadAlloc;
      break;
    case AlgorithmId::Sl1Bounded:
      ps.phase = req.is_insert ? Phase::F4InsCheckTs : Phase::F4TakeDreadDone;
      break;
    case AlgorithmId::SlBounded:
      ps.phase = req.is_insert ? Phase::F5InsDreadTakeDone : Phase::F5TakeDreadInsertDone;
      break;
  }
}

namespace {

/// Shared implementation of one machine step, templated over the memory
/// backend. Exactly one mem.apply() per call; everything else is local state.
template <class Mem>
struct Stepper {
  const Workload& wl;
  Layout& lay;
  Mem& mem;
  ProcState& ps;
  int pid;
  StepResult r;

  // --- step helpers -------------------------------------------------------

  PrimValue access(Line line, int slot, PrimAction action, PrimValue arg = PrimValue::none()) {
    r.line = line;
    r.slot = slot;
    r.action = action;
    r.arg = arg;
    if constexpr (std::is_same_v<Mem, SimMemory>) r.pre = mem.snapshot(slot);
    r.resp = mem.apply(slot, action, pid, arg);
    return r.resp;
  }

  void finish(OpResponse resp) {
    r.completed = true;
    r.result = resp;
    ps.active = false;
    ps.phase = Phase::Idle;
  }

  // --- growable-array queue ----------------------------------------------

  /// End-of-scan bookkeeping for the queue's take: either the scan made no
  /// progress twice in a row (return EMPTY at this step) or rescan.
  void queue_scan_wrap() {
    if (ps.taken_new == ps.taken_old && ps.max_new == ps.max_old) {
      finish(OpResponse::empty());
      return;
    }
    ps.taken_old = ps.taken_new;
    ps.max_old = ps.max_new;
    ps.at_loop_head = true;
    ps.phase = Phase::F1TakeReadMax;
  }

  void queue_scan_advance() {
    if (ps.i < ps.max_new) {
      ++ps.i;
      ps.phase = Phase::F1TakeReadItem;
    } else {
      queue_scan_wrap();
    }
  }

  void step_li_queue() {
    switch (ps.phase) {
      case Phase::F1InsIncMax: {
        PrimValue v = access(Line::F1InsIncMax, lay.max_slot, PrimAction::Fai);
        ps.m = static_cast<std::int32_t>(v.scalar);
        ensure_cells(mem, lay, ps.m);
        ps.phase = Phase::F1InsWriteItem;
        return;
      }
      case Phase::F1InsWriteItem:
        access(Line::F1InsWriteItem, lay.items[ps.m - 1], PrimAction::Write, PrimValue::of(ps.x));
        finish(OpResponse::ok());
        return;
      case Phase::F1TakeReadMax: {
        ps.taken_new = 0;
        PrimValue v = access(Line::F1TakeReadMax, lay.max_slot, PrimAction::Read);
        ps.max_new = static_cast<std::int32_t>(v.scalar) - 1;
        if (ps.max_new >= 1) {
          ps.i = 1;
          ps.phase = Phase::F1TakeReadItem;
        } else {
          queue_scan_wrap();
        }
        return;
      }
      case Phase::F1TakeReadItem: {
        PrimValue v = access(Line::F1TakeReadItem, lay.items[ps.i - 1], PrimAction::Read);
        ps.x = v.scalar;
        if (ps.x != kBottom) {
          ps.phase = Phase::F1TakeTas;
        } else {
          queue_scan_advance();
        }
        return;
      }
      case Phase::F1TakeTas: {
        PrimValue v = access(Line::F1TakeTas, lay.ts[ps.i - 1], PrimAction::Tas);
        if (v.scalar == 0) {
          finish(OpResponse::taken(ps.x));
        } else {
          ++ps.taken_new;
          queue_scan_advance();
        }
        return;
      }
      default:
        throw std::logic_error("bad phase for queue machine");
    }
  }

  // --- growable-array bag with Done counter -------------------------------

  void bag_scan_advance() {
    if (ps.i < ps.m) {
      ++ps.i;
      ps.phase = Phase::F2TakeReadItem;
    } else {
      ps.phase = Phase::F2TakeRereadDone;
    }
  }

  void step_unbounded_sl() {
    switch (ps.phase) {
      case Phase::F2InsIncAlloc: {
        PrimValue v = access(Line::F2InsIncAlloc, lay.allocated_slot, PrimAction::Fai);
        ps.m = static_cast<std::int32_t>(v.scalar) + 1;
        ensure_cells(mem, lay, ps.m);
        ps.phase = Phase::F2InsWriteItem;
        return;
      }
      case Phase::F2InsWriteItem:
        access(Line::F2InsWriteItem, lay.items[ps.m - 1], PrimAction::Write, PrimValue::of(ps.x));
        ps.phase = Phase::F2InsIncDone;
        return;
      case Phase::F2InsIncDone:
        access(Line::F2InsIncDone, lay.done_slot, PrimAction::Fai);
        finish(OpResponse::ok());
        return;
      case Phase::F2TakeReadDone: {
        PrimValue v = access(Line::F2TakeReadDone, lay.done_slot, PrimAction::Read);
        ps.d = v.scalar;
        ps.phase = Phase::F2TakeReadAlloc;
        return;
      }
      case Phase::F2TakeReadAlloc: {
        PrimValue v = access(Line::F2TakeReadAlloc, lay.allocated_slot, PrimAction::Read);
        ps.m = static_cast<std::int32_t>(v.scalar);
        if (ps.m >= 1) {
          ps.i = 1;
          ps.phase = Phase::F2TakeReadItem;
        } else {
          ps.phase = Phase::F2TakeRereadDone;
        }
        return;
      }
      case Phase::F2TakeReadItem: {
        PrimValue v = access(Line::F2TakeReadItem, lay.items[ps.i - 1], PrimAction::Read);
        ps.x = v.scalar;
        if (ps.x != kBottom) {
          ps.phase = Phase::F2TakeTas;
        } else {
          bag_scan_advance();
        }
        return;
      }
      case Phase::F2TakeTas: {
        PrimValue v = access(Line::F2TakeTas, lay.ts[ps.i - 1], PrimAction::Tas);
        if (v.scalar == 0) {
          finish(OpResponse::taken(ps.x));
        } else {
          bag_scan_advance();
        }
        return;
      }
      case Phase::F2TakeRereadDone: {
        PrimValue v = access(Line::F2TakeRereadDone, lay.done_slot, PrimAction::Read);
        if (v.scalar == ps.d) {
          finish(OpResponse::empty());
        } else {
          ps.at_loop_head = true;
          ps.phase = Phase::F2TakeReadDone;
        }
        return;
      }
      default:
        throw std::logic_error("bad phase for unbounded bag machine");
    }
  }

  // --- 1-bounded bags (wait-free, and with the ABA Done register) ---------

  /// After the hazard collect finishes: pick the fresh producer cell among
  /// the non-hazardous ones and head for the allocation announcement.
  void bounded_choose(Phase write_alloc) {
    CellMask eligible = cells_upto(wl.n + 1) & ~ps.hazardous;
    ps.m = wl.chooser.choose(eligible, ps.choose_count);
    ps.choose_count++;
    ps.phase = write_alloc;
  }

  /// After the allocation announcement: reset time stamps of cells that were
  /// used, got taken, and are not protected by any hazard.
  void bounded_after_alloc(Phase reset_ts, Phase write_item) {
    ps.reset_list = ps.used & ~ps.hazardous;
    ps.used &= ps.hazardous;
    if (ps.reset_list) {
      ps.i = mask_min(ps.reset_list);
      ps.phase = reset_ts;
    } else {
      ps.phase = write_item;
    }
  }

  void bounded_reset_advance(Phase reset_ts, Phase write_item) {
    int next = mask_next(ps.reset_list, ps.i);
    if (next) {
      ps.i = next;
      ps.phase = reset_ts;
    } else {
      ps.phase = write_item;
    }
  }

  void step_wf1(bool with_done) {
    switch (ps.phase) {
      // insert
      case Phase::F3InsCheckTs:
      case Phase::F4InsCheckTs: {
        PrimValue v = access(with_done ? Line::F4InsCheckTs : Line::F3InsCheckTs,
                             lay.ts[ps.m - 1], PrimAction::Read);
        if (v.scalar == 0) {
          finish(OpResponse::full());
        } else {
          ps.phase = with_done ? Phase::F4InsClearItem : Phase::F3InsClearItem;
        }
        return;
      }
      case Phase::F3InsClearItem:
      case Phase::F4InsClearItem:
        access(with_done ? Line::F4InsClearItem : Line::F3InsClearItem,
               lay.items[ps.m - 1], PrimAction::Write, PrimValue::of(kBottom));
        ps.used |= mask_bit(ps.m);
        ps.hazardous = 0;
        ps.i = 1;
        ps.phase = with_done ? Phase::F4InsCollect : Phase::F3InsCollect;
        return;
      case Phase::F3InsCollect:
      case Phase::F4InsCollect: {
        PrimValue v = access(with_done ? Line::F4InsCollect : Line::F3InsCollect,
                             lay.hazards[ps.i - 1], PrimAction::Read);
        if (v.scalar != kBottom) ps.hazardous |= mask_bit(static_cast<int>(v.scalar));
        if (ps.i < wl.n) {
          ++ps.i;
        } else {
          bounded_choose(with_done ? Phase::F4InsWriteAlloc : Phase::F3InsWriteAlloc);
        }
        return;
      }
      case Phase::F3InsWriteAlloc:
      case Phase::F4InsWriteAlloc:
        access(with_done ? Line::F4InsWriteAlloc : Line::F3InsWriteAlloc,
               lay.allocated_slot, PrimAction::Write, PrimValue::of(ps.m));
        bounded_after_alloc(with_done ? Phase::F4InsResetTs : Phase::F3InsResetTs,
                            with_done ? Phase::F4InsWriteItem : Phase::F3InsWriteItem);
        return;
      case Phase::F3InsResetTs:
      case Phase::F4InsResetTs:
        access(with_done ? Line::F4InsResetTs : Line::F3InsResetTs,
               lay.ts[ps.i - 1], PrimAction::Reset);
        bounded_reset_advance(with_done ? Phase::F4InsResetTs : Phase::F3InsResetTs,
                              with_done ? Phase::F4InsWriteItem : Phase::F3InsWriteItem);
        return;
      case Phase::F3InsWriteItem:
        access(Line::F3InsWriteItem, lay.items[ps.m - 1], PrimAction::Write, PrimValue::of(ps.x));
        finish(OpResponse::ok());
        return;
      case Phase::F4InsWriteItem:
        access(Line::F4InsWriteItem, lay.items[ps.m - 1], PrimAction::Write, PrimValue::of(ps.x));
        ps.phase = Phase::F4InsDwriteDone;
        return;
      case Phase::F4InsDwriteDone:
        access(Line::F4InsDwriteDone, lay.done_slot, PrimAction::DWrite);
        finish(OpResponse::ok());
        return;

      // take
      case Phase::F4TakeDreadDone:
        access(Line::F4TakeDreadDone, lay.done_slot, PrimAction::DRead);
        ps.at_loop_head = true;
        ps.phase = Phase::F4TakeReadAlloc;
        return;
      case Phase::F3TakeReadAlloc:
      case Phase::F4TakeReadAlloc: {
        PrimValue v = access(with_done ? Line::F4TakeReadAlloc : Line::F3TakeReadAlloc,
                             lay.allocated_slot, PrimAction::Read);
        ps.a = static_cast<std::int32_t>(v.scalar);
        // The validator's return-rules for the wait-free bag consult the
        // announced cell's contents at this read; snapshot them (simulator
        // backend only: a second lock acquisition would not be atomic).
        if constexpr (std::is_same_v<Mem, SimMemory>) {
          if (!with_done) {
            const ObjectState& it = mem.snapshot(lay.items[ps.a - 1]);
            const ObjectState& ts = mem.snapshot(lay.ts[ps.a - 1]);
            r.extra[0] = {lay.items[ps.a - 1], PrimValue::of(it.reg_scalar)};
            r.extra[1] = {lay.ts[ps.a - 1], PrimValue::of(ts.bit)};
            r.extra_n = 2;
          }
        }
        ps.phase = with_done ? Phase::F4TakeWriteHazard : Phase::F3TakeWriteHazard;
        return;
      }
      case Phase::F3TakeWriteHazard:
      case Phase::F4TakeWriteHazard:
        access(with_done ? Line::F4TakeWriteHazard : Line::F3TakeWriteHazard,
               lay.hazards[pid - 1], PrimAction::Write, PrimValue::of(ps.a));
        ps.phase = with_done ? Phase::F4TakeReadItem : Phase::F3TakeReadItem;
        return;
      case Phase::F3TakeReadItem:
      case Phase::F4TakeReadItem: {
        PrimValue v = access(with_done ? Line::F4TakeReadItem : Line::F3TakeReadItem,
                             lay.items[ps.a - 1], PrimAction::Read);
        ps.x = v.scalar;
        if (ps.x != kBottom) {
          ps.phase = with_done ? Phase::F4TakeTas : Phase::F3TakeTas;
        } else {
          ps.phase = with_done ? Phase::F4TakeClearHazard2 : Phase::F3TakeClearHazard2;
        }
        return;
      }
      case Phase::F3TakeTas:
      case Phase::F4TakeTas: {
        PrimValue v = access(with_done ? Line::F4TakeTas : Line::F3TakeTas,
                             lay.ts[ps.a - 1], PrimAction::Tas);
        if (v.scalar == 0) {
          ps.phase = with_done ? Phase::F4TakeClearHazard1 : Phase::F3TakeClearHazard1;
        } else {
          ps.phase = with_done ? Phase::F4TakeClearHazard2 : Phase::F3TakeClearHazard2;
        }
        return;
      }
      case Phase::F3TakeClearHazard1:
      case Phase::F4TakeClearHazard1:
        access(with_done ? Line::F4TakeClearHazard1 : Line::F3TakeClearHazard1,
               lay.hazards[pid - 1], PrimAction::Write, PrimValue::of(kBottom));
        finish(OpResponse::taken(ps.x));
        return;
      case Phase::F3TakeClearHazard2:
        access(Line::F3TakeClearHazard2, lay.hazards[pid - 1], PrimAction::Write,
               PrimValue::of(kBottom));
        finish(OpResponse::empty());
        return;
      case Phase::F4TakeClearHazard2:
        access(Line::F4TakeClearHazard2, lay.hazards[pid - 1], PrimAction::Write,
               PrimValue::of(kBottom));
        ps.phase = Phase::F4TakeRereadDone;
        return;
      case Phase::F4TakeRereadDone: {
        PrimValue v = access(Line::F4TakeRereadDone, lay.done_slot, PrimAction::DRead);
        if (!v.flag) {
          finish(OpResponse::empty());
        } else {
          ps.at_loop_head = true;
          ps.phase = Phase::F4TakeReadAlloc;
        }
        return;
      }
      default:
        throw std::logic_error("bad phase for 1-bounded bag machine");
    }
  }

  // --- b-bounded bag ------------------------------------------------------

  /// Insert loop head: first revisit previously allocated cells whose
  /// elements were taken; the candidate list is fixed at the head.
  void f5_ins_enter_loop() {
    ps.at_loop_head = true;
    ps.check_list = ps.alloc;
    if (ps.check_list) {
      ps.i = mask_min(ps.check_list);
      ps.phase = Phase::F5InsCheckTs;
    } else {
      f5_ins_after_check();
    }
  }

  void f5_ins_after_check() {
    if (mask_count(ps.alloc) < wl.b) {
      ps.hazardous = 0;
      ps.i = 1;
      ps.phase = Phase::F5InsCollect;
    } else {
      ps.phase = Phase::F5InsRereadTakeDone;
    }
  }

  void f5_ins_check_advance() {
    int next = mask_next(ps.check_list, ps.i);
    if (next) {
      ps.i = next;
      ps.phase = Phase::F5InsCheckTs;
    } else {
      f5_ins_after_check();
    }
  }

  void f5_take_enter_loop() {
    ps.at_loop_head = true;
    ps.phase = Phase::F5TakeReadAlloc;
  }

  void f5_take_scan_advance() {
    int next = mask_next(ps.allocated, ps.a);
    if (next) {
      ps.a = next;
      ps.phase = Phase::F5TakeWriteHazard;
    } else {
      ps.phase = Phase::F5TakeClearHazard2;
    }
  }

  void step_sl_bounded() {
    switch (ps.phase) {
      // insert
      case Phase::F5InsDreadTakeDone:
        access(Line::F5InsDreadTakeDone, lay.take_done_slot, PrimAction::DRead);
        f5_ins_enter_loop();
        return;
      case Phase::F5InsCheckTs: {
        PrimValue v = access(Line::F5InsCheckTs, lay.ts[ps.i - 1], PrimAction::Read);
        if (v.scalar == 1) {
          ps.phase = Phase::F5InsClearItem;
        } else {
          f5_ins_check_advance();
        }
        return;
      }
      case Phase::F5InsClearItem:
        access(Line::F5InsClearItem, lay.items[ps.i - 1], PrimAction::Write,
               PrimValue::of(kBottom));
        ps.alloc &= ~mask_bit(ps.i);
        ps.used |= mask_bit(ps.i);
        f5_ins_check_advance();
        return;
      case Phase::F5InsCollect: {
        PrimValue v = access(Line::F5InsCollect, lay.hazards[ps.i - 1], PrimAction::Read);
        if (v.scalar != kBottom) ps.hazardous |= mask_bit(static_cast<int>(v.scalar));
        if (ps.i < wl.n) {
          ++ps.i;
        } else {
          CellMask eligible = cells_upto(wl.n + wl.b) & ~(ps.alloc | ps.hazardous);
          ps.m = wl.chooser.choose(eligible, ps.choose_count);
          ps.choose_count++;
          ps.alloc |= mask_bit(ps.m);
          ps.phase = Phase::F5InsWriteAlloc;
        }
        return;
      }
      case Phase::F5InsWriteAlloc:
        access(Line::F5InsWriteAlloc, lay.allocated_slot, PrimAction::Write,
               PrimValue::of_set(ps.alloc));
        bounded_after_alloc(Phase::F5InsResetTs, Phase::F5InsWriteItem);
        return;
      case Phase::F5InsResetTs:
        access(Line::F5InsResetTs, lay.ts[ps.i - 1], PrimAction::Reset);
        bounded_reset_advance(Phase::F5InsResetTs, Phase::F5InsWriteItem);
        return;
      case Phase::F5InsWriteItem:
        access(Line::F5InsWriteItem, lay.items[ps.m - 1], PrimAction::Write, PrimValue::of(ps.x));
        ps.phase = Phase::F5InsDwriteInsertDone;
        return;
      case Phase::F5InsDwriteInsertDone:
        access(Line::F5InsDwriteInsertDone, lay.insert_done_slot, PrimAction::DWrite);
        finish(OpResponse::ok());
        return;
      case Phase::F5InsRereadTakeDone: {
        PrimValue v = access(Line::F5InsRereadTakeDone, lay.take_done_slot, PrimAction::DRead);
        if (!v.flag) {
          finish(OpResponse::full());
        } else {
          f5_ins_enter_loop();
        }
        return;
      }

      // take
      case Phase::F5TakeDreadInsertDone:
        access(Line::F5TakeDreadInsertDone, lay.insert_done_slot, PrimAction::DRead);
        f5_take_enter_loop();
        return;
      case Phase::F5TakeReadAlloc: {
        PrimValue v = access(Line::F5TakeReadAlloc, lay.allocated_slot, PrimAction::Read);
        ps.allocated = v.set;
        if (ps.allocated) {
          ps.a = mask_min(ps.allocated);
          ps.phase = Phase::F5TakeWriteHazard;
        } else {
          ps.phase = Phase::F5TakeClearHazard2;
        }
        return;
      }
      case Phase::F5TakeWriteHazard:
        access(Line::F5TakeWriteHazard, lay.hazards[pid - 1], PrimAction::Write,
               PrimValue::of(ps.a));
        ps.phase = Phase::F5TakeReadItem;
        return;
      case Phase::F5TakeReadItem: {
        PrimValue v = access(Line::F5TakeReadItem, lay.items[ps.a - 1], PrimAction::Read);
        ps.x = v.scalar;
        if (ps.x != kBottom) {
          ps.phase = Phase::F5TakeTas;
        } else {
          f5_take_scan_advance();
        }
        return;
      }
      case Phase::F5TakeTas: {
        PrimValue v = access(Line::F5TakeTas, lay.ts[ps.a - 1], PrimAction::Tas);
        if (v.scalar == 0) {
          ps.phase = Phase::F5TakeClearHazard1;
        } else {
          f5_take_scan_advance();
        }
        return;
      }
      case Phase::F5TakeClearHazard1:
        access(Line::F5TakeClearHazard1, lay.hazards[pid - 1], PrimAction::Write,
               PrimValue::of(kBottom));
        ps.phase = Phase::F5TakeDwriteTakeDone;
        return;
      case Phase::F5TakeDwriteTakeDone:
        access(Line::F5TakeDwriteTakeDone, lay.take_done_slot, PrimAction::DWrite);
        finish(OpResponse::taken(ps.x));
        return;
      case Phase::F5TakeClearHazard2:
        access(Line::F5TakeClearHazard2, lay.hazards[pid - 1], PrimAction::Write,
               PrimValue::of(kBottom));
        ps.phase = Phase::F5TakeRereadInsertDone;
        return;
      case Phase::F5TakeRereadInsertDone: {
        PrimValue v = access(Line::F5TakeRereadInsertDone, lay.insert_done_slot, PrimAction::DRead);
        if (!v.flag) {
          ps.phase = Phase::F5TakeDwriteTakeDoneEmpty;
        } else {
          f5_take_enter_loop();
        }
        return;
      }
      case Phase::F5TakeDwriteTakeDoneEmpty:
        access(Line::F5TakeDwriteTakeDoneEmpty, lay.take_done_slot, PrimAction::DWrite);
        finish(OpResponse::empty());
        return;
      default:
        throw std::logic_error("bad phase for b-bounded bag machine");
    }
  }

  StepResult run() {
    if (!ps.active || ps.phase == Phase::Idle)
      throw UsageError("process has no pending operation to step");
    if (ps.at_loop_head) {
      ps.at_loop_head = false;
      ps.loop_iter++;
    }
    ps.op_steps++;
    switch (wl.algorithm) {
      case AlgorithmId::LiQueue: step_li_queue(); break;
      case AlgorithmId::UnboundedSl: step_unbounded_sl(); break;
      case AlgorithmId::Wf1Bounded: step_wf1(false); break;
      case AlgorithmId::Sl1Bounded: step_wf1(true); break;
      case AlgorithmId::SlBounded: step_sl_bounded(); break;
    }
    return r;
  }
};

}  // namespace

StepResult machine_step_sim(const Workload& wl, Layout& lay, SimMemory& mem,
                            ProcState& ps, int pid) {
  Stepper<SimMemory> st{wl, lay, mem, ps, pid, {}};
  return st.run();
}

StepResult machine_step_locked(const Workload& wl, Layout& lay, LockedMemory& mem,
                               ProcState& ps, int pid) {
  Stepper<LockedMemory> st{wl, lay, mem, ps, pid, {}};
  return st.run();
}

namespace {

void push8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }
void push32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}
void push64(std::string& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

}  // namespace

void proc_key(const ProcState& ps, std::string& out) {
  push32(out, (std::uint32_t{ps.next_req} << 16) | ps.ops_begun);
  push8(out, static_cast<std::uint8_t>((ps.active ? 1 : 0) | (ps.at_loop_head ? 2 : 0) |
                                       (ps.req.is_insert ? 4 : 0)));
  push64(out, static_cast<std::uint64_t>(ps.req.value));
  push32(out, (std::uint32_t{ps.op_steps} << 16) | ps.loop_iter);
  push8(out, static_cast<std::uint8_t>(ps.phase));
  push64(out, static_cast<std::uint64_t>(ps.x));
  push64(out, static_cast<std::uint64_t>(ps.d));
  push32(out, static_cast<std::uint32_t>(ps.m));
  push32(out, static_cast<std::uint32_t>(ps.a));
  push32(out, static_cast<std::uint32_t>(ps.i));
  push32(out, static_cast<std::uint32_t>(ps.max_new));
  push32(out, static_cast<std::uint32_t>(ps.max_old));
  push32(out, static_cast<std::uint32_t>(ps.taken_new));
  push32(out, static_cast<std::uint32_t>(ps.taken_old));
  push32(out, ps.used);
  push32(out, ps.alloc);
  push32(out, ps.hazardous);
  push32(out, ps.allocated);
  push32(out, ps.check_list);
  push32(out, ps.reset_list);
  push32(out, ps.choose_count);
}

void object_key(const ObjectState& st, std::string& out) {
  push8(out, static_cast<std::uint8_t>(st.kind));
  switch (st.kind) {
    case ObjectKind::Register:
      if (st.reg_is_set) {
        push32(out, st.reg_set);
      } else {
        push64(out, static_cast<std::uint64_t>(st.reg_scalar));
      }
      break;
    case ObjectKind::TestAndSet:
    case ObjectKind::ResettableTas:
      push8(out, st.bit);
      break;
    case ObjectKind::FetchIncrement:
      push64(out, static_cast<std::uint64_t>(st.count));
      break;
    case ObjectKind::AbaRegister: {
      // Future dRead responses depend only on, per process, whether it has
      // read before and whether a dWrite happened since; collapse epochs to
      // those bits so equivalent interleavings merge.
      std::uint32_t bits = 0;
      for (int p = 0; p < kMaxProcs; ++p) {
        bool seen = st.last_seen[p] >= 0;
        bool fresh = seen && st.write_epoch > static_cast<std::uint32_t>(st.last_seen[p]);
        bits |= (seen ? 1u : 0u) << (2 * p);
        bits |= (fresh ? 1u : 0u) << (2 * p + 1);
      }
      push32(out, bits);
      break;
    }
  }
}

}  // namespace slbag
