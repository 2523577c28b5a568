#include "slbag/monitors.hpp"

#include <algorithm>
#include <bit>

#include "slbag/sim.hpp"

namespace slbag {

namespace {

bool succ_tas(const StepView& sv) {
  return (sv.line == Line::F2TakeTas || sv.line == Line::F3TakeTas ||
          sv.line == Line::F4TakeTas || sv.line == Line::F5TakeTas) &&
         sv.resp.tag == PrimValue::Tag::Scalar && sv.resp.scalar == 0;
}

/// Encodes the op identity into LinPoint::op until a trace-level resolver can
/// map it to an op index (record mode only).
int pack_op(int pid, int op_seq) { return (pid << 16) | op_seq; }

std::string who(int pid, int op_seq, const OpRequest& req) {
  return "p" + std::to_string(pid) + "#" + std::to_string(op_seq) + " " + request_token(req);
}

/// Producer phases strictly after the clear and up to (including) the Items
/// write: the window in which the array must be entirely empty.
bool in_clear_write_gap(AlgorithmId a, const ProcState& ps) {
  if (!ps.active) return false;
  switch (a) {
    case AlgorithmId::Wf1Bounded:
      return ps.phase == Phase::F3InsCollect || ps.phase == Phase::F3InsWriteAlloc ||
             ps.phase == Phase::F3InsResetTs || ps.phase == Phase::F3InsWriteItem;
    case AlgorithmId::Sl1Bounded:
      return ps.phase == Phase::F4InsCollect || ps.phase == Phase::F4InsWriteAlloc ||
             ps.phase == Phase::F4InsResetTs || ps.phase == Phase::F4InsWriteItem;
    default:
      return false;
  }
}

/// True once the producer has executed an Items write in any operation.
bool wrote_item_ever(AlgorithmId a, const ProcState& ps) {
  int completed = ps.next_req - (ps.active ? 1 : 0);
  if (completed > 0) return true;  // single-producer: every request is an Insert
  if (!ps.active) return false;
  return a == AlgorithmId::Sl1Bounded && ps.phase == Phase::F4InsDwriteDone;
}

}  // namespace

StepMonitor::StepMonitor(const Workload& wl, const MonitorConfig& cfg)
    : wl_(wl), cfg_(cfg), spec_(cfg.spec) {
  cap_ = cfg.capacity > 0 ? cfg.capacity
                          : (wl.algorithm == AlgorithmId::SlBounded ? wl.b : 1);
  uni_ = SpecUniverse::from_workload(wl);
  pp_.assign(wl.num_processes(), PerProc{});
}

void StepMonitor::fail(const std::string& msg) {
  if (err_.empty()) err_ = msg;
}

bool StepMonitor::place(int pid, const OpResponse& resp, int value, int seq, int bucket,
                        int cell, int sub) {
  PerProc& pp = pp_[pid];
  if (pp.placed) {
    fail("second linearization point for p" + std::to_string(pid) + "#" +
         std::to_string(pp.op_seq));
    return false;
  }
  pp.placed = true;
  pp.presp = resp;
  (void)value;
  // Coupled-insert callers patch rec_.back().pid to the partner Take's pid.
  if (cfg_.record) rec_.push_back({pack_op(pid, pp.op_seq), resp, seq, bucket, cell, pid, sub});
  return true;
}

bool StepMonitor::fold_insert(int pid, int value, int seq, int bucket, int cell, int sub) {
  int id = uni_.id_of(value);
  if (id < 0) {
    fail("insert of undeclared value " + std::to_string(value));
    return false;
  }
  if (bag_.bag & (1u << id)) {
    fail("insert places value " + std::to_string(value) + " already present in the bag");
    return false;
  }
  if (spec_ == SpecKind::BoundedBag && bag_.size() >= cap_) {
    fail("OK insert of " + std::to_string(value) + " placed with the bag at capacity " +
         std::to_string(cap_));
    return false;
  }
  if (!place(pid, OpResponse::ok(), value, seq, bucket, cell, sub)) return false;
  bag_.bag |= 1u << id;
  if (cfg_.fold_queue) {
    queue_.queue |= static_cast<std::uint64_t>(id) << (4 * queue_.queue_len);
    queue_.queue_len++;
  }
  return true;
}

bool StepMonitor::fold_take(int pid, int value, int seq, int bucket, int cell, int sub) {
  int id = uni_.id_of(value);
  if (id < 0 || !(bag_.bag & (1u << id))) {
    fail("take of " + std::to_string(value) + " placed while the value is not in the bag");
    return false;
  }
  if (!place(pid, OpResponse::taken(value), value, seq, bucket, cell, sub)) return false;
  bag_.bag &= ~(1u << id);
  if (cfg_.fold_queue) {
    int front = static_cast<int>(queue_.queue & 0xF);
    if (queue_.queue_len == 0 || front != id) {
      fail("take of " + std::to_string(value) +
           " breaks FIFO order (queue front is " +
           (queue_.queue_len ? std::to_string(uni_.values[front]) : std::string("empty")) +
           ")");
      return false;
    }
    queue_.queue >>= 4;
    queue_.queue_len--;
  }
  return true;
}

bool StepMonitor::fold_empty(int pid, int seq, int bucket, int cell) {
  if (bag_.bag != 0) {
    fail("EMPTY take placed while the bag holds " + std::to_string(bag_.size()) +
         " element(s)");
    return false;
  }
  return place(pid, OpResponse::empty(), 0, seq, bucket, cell, 0);
}

bool StepMonitor::fold_full(int pid, int value, int seq, int bucket) {
  if (spec_ != SpecKind::BoundedBag || bag_.size() != cap_) {
    fail("FULL insert of " + std::to_string(value) + " placed while the bag holds " +
         std::to_string(bag_.size()) + " of " + std::to_string(cap_));
    return false;
  }
  return place(pid, OpResponse::full(), value, seq, bucket, 0, 0);
}

bool StepMonitor::aba_note(PerProc& pp, std::uint8_t PerProc::* reg, bool is_dread,
                           const StepView& sv) {
  if (!is_dread) {  // a dWrite marks every process stale on this register
    for (PerProc& q : pp_) q.*reg |= 2;
    return true;
  }
  bool ever = (pp.*reg & 1) != 0;
  bool stale = (pp.*reg & 2) != 0;
  bool expected = ever && stale;
  if (sv.resp.tag != PrimValue::Tag::Boolean || sv.resp.flag != expected) {
    fail("loop-progress violation: dRead by " + who(sv.pid, sv.op_seq, sv.req) +
         " returned " + (sv.resp.flag ? "true" : "false") + " but " +
         (expected ? "a dWrite occurred since its previous dRead"
                   : "no dWrite occurred since its previous dRead"));
    return false;
  }
  pp.*reg = 1;  // seen; freshness consumed
  return true;
}

bool StepMonitor::lemma_checks(const StepView& sv, const Layout& lay, const SimMemory& mem,
                               const std::vector<ProcState>& procs) {
  AlgorithmId algo = wl_.algorithm;
  if (algo == AlgorithmId::LiQueue || algo == AlgorithmId::UnboundedSl) return true;
  const ProcState& prod = procs[0];  // single-producer algorithms: process 0 inserts

  auto item_bottom = [&](size_t idx1) {
    return mem.snapshot(lay.items[idx1 - 1]).reg_scalar == kBottom;
  };

  // If k is in used, then Items[k] = bottom.
  for (size_t k = 1; k <= lay.items.size(); ++k) {
    if (prod.used & mask_bit(static_cast<int>(k))) {
      if (!item_bottom(k)) {
        fail("lemma violation: cell " + std::to_string(k) +
             " is in used but Items[" + std::to_string(k) + "] is not empty");
        return false;
      }
    }
  }

  if (algo == AlgorithmId::Wf1Bounded || algo == AlgorithmId::Sl1Bounded) {
    // Array population: all cells empty before the first Items write and
    // inside a clear-to-write gap; otherwise exactly Items[Allocated] holds
    // an element.
    bool expect_empty = !wrote_item_ever(algo, prod) || in_clear_write_gap(algo, prod);
    Value allocated = mem.snapshot(lay.allocated_slot).reg_scalar;
    for (size_t k = 1; k <= lay.items.size(); ++k) {
      bool bottom = item_bottom(k);
      bool should_hold = !expect_empty && static_cast<Value>(k) == allocated;
      if (bottom == should_hold) {
        fail("lemma violation: Items[" + std::to_string(k) + "] is " +
             (bottom ? "empty" : "occupied") + " but the population invariant requires " +
             (should_hold ? "the allocated cell to hold an element"
                          : "all entries of Items to be empty"));
        return false;
      }
    }
  } else {  // SlBounded
    CellMask reg_alloc = mem.snapshot(lay.allocated_slot).reg_set;
    int live = 0;
    for (size_t k = 1; k <= lay.items.size(); ++k) {
      if (item_bottom(k)) continue;
      ++live;
      if (!(reg_alloc & mask_bit(static_cast<int>(k)))) {
        fail("lemma violation: Items[" + std::to_string(k) +
             "] holds an element outside the Allocated set");
        return false;
      }
    }
    if (live > wl_.b || std::popcount(reg_alloc) > wl_.b ||
        std::popcount(prod.alloc) > wl_.b) {
      fail("lemma violation: allocation bound exceeded (live=" + std::to_string(live) +
           ", |Allocated|=" + std::to_string(std::popcount(reg_alloc)) +
           ", |alloc|=" + std::to_string(std::popcount(prod.alloc)) + ", b=" +
           std::to_string(wl_.b) + ")");
      return false;
    }
  }

  // TS[m] = 0 whenever the producer writes Items[m] (the write leaves TS
  // untouched, so the post-state carries the same bit).
  if (sv.line == Line::F3InsWriteItem || sv.line == Line::F4InsWriteItem ||
      sv.line == Line::F5InsWriteItem) {
    if (mem.snapshot(lay.ts[sv.cell - 1]).bit != 0) {
      fail("lemma violation: Items[" + std::to_string(sv.cell) +
           "] written while TS[" + std::to_string(sv.cell) + "] is 1");
      return false;
    }
  }

  // ABA mirrors; doubles as the loop-progress invariant (a repeat-loop is
  // re-entered only on a true dRead, which the mirror ties to an interim
  // dWrite).
  PerProc& pp = pp_[sv.pid];
  switch (sv.line) {
    case Line::F4InsDwriteDone:
      return aba_note(pp, &PerProc::aba1, false, sv);
    case Line::F4TakeDreadDone:
    case Line::F4TakeRereadDone:
      return aba_note(pp, &PerProc::aba1, true, sv);
    case Line::F5InsDwriteInsertDone:
      return aba_note(pp, &PerProc::aba1, false, sv);
    case Line::F5TakeDreadInsertDone:
    case Line::F5TakeRereadInsertDone:
      return aba_note(pp, &PerProc::aba1, true, sv);
    case Line::F5TakeDwriteTakeDone:
    case Line::F5TakeDwriteTakeDoneEmpty:
      return aba_note(pp, &PerProc::aba2, false, sv);
    case Line::F5InsDreadTakeDone:
    case Line::F5InsRereadTakeDone:
      return aba_note(pp, &PerProc::aba2, true, sv);
    default:
      return true;
  }
}

bool StepMonitor::on_completion(const StepView& sv) {
  PerProc& pp = pp_[sv.pid];
  if (!pp.placed) {
    fail("completed " + who(sv.pid, sv.op_seq, sv.req) + " has no linearization point");
    return false;
  }
  if (!(pp.presp == sv.result)) {
    fail("assigned response " + response_token(pp.presp) + " contradicts returned " +
         response_token(sv.result) + " for " + who(sv.pid, sv.op_seq, sv.req));
    return false;
  }
  pp.placed = false;
  pp.presp = OpResponse{};
  pp.mode = 0;
  pp.awaiting = false;
  pp.poised = false;
  pp.win_open = false;
  pp.win_cell = 0;
  pp.win_tas = 0;
  pp.win_take = -1;
  pp.anchor_seq = -1;
  return true;
}

// ---------------------------------------------------------------------------
// Done-counter bag.

bool StepMonitor::step_f2(const StepView& sv) {
  PerProc& pp = pp_[sv.pid];
  switch (sv.line) {
    case Line::F2InsWriteItem:
      pp.win_open = true;
      pp.win_cell = static_cast<std::uint8_t>(sv.cell);
      pp.win_tas = 0;
      return true;
    case Line::F2InsIncDone:
      pp.win_open = false;
      if (!pp.placed) return fold_insert(sv.pid, static_cast<int>(sv.req.value), sv.seq, 2, 0, 0);
      return true;
    case Line::F2TakeReadItem:
      pp.take_val = static_cast<std::int8_t>(sv.resp.scalar);
      return true;
    case Line::F2TakeTas:
      if (!succ_tas(sv)) return true;
      // A producer poised between its Items write and Done f&i on this cell
      // couples: the Insert goes immediately before the Take.
      for (int q = 0; q < static_cast<int>(pp_.size()); ++q) {
        PerProc& ins = pp_[q];
        if (!ins.win_open || ins.win_cell != sv.cell) continue;
        if (++ins.win_tas > 1) {
          fail("two successful t&s on cell " + std::to_string(sv.cell) +
               " inside one insert window");
          return false;
        }
        ins.win_open = false;
        if (!fold_insert(q, static_cast<int>(wl_.requests[q][ins.op_seq].value), sv.seq, 0,
                         sv.cell, 0))
          return false;
        if (cfg_.record) rec_.back().pid = sv.pid;  // coupled tie-break: the Take's pid
      }
      return fold_take(sv.pid, pp.take_val, sv.seq, 0, sv.cell, 1);
    case Line::F2TakeRereadDone:
      if (sv.completed && sv.result.kind == OpResponse::Kind::Empty)
        return fold_empty(sv.pid, sv.seq, 1, 0);
      return true;
    default:
      return true;
  }
}

// ---------------------------------------------------------------------------
// Wait-free 1-bounded bag.

bool StepMonitor::step_f3(const StepView& sv) {
  PerProc& pp = pp_[sv.pid];
  switch (sv.line) {
    case Line::F3InsCheckTs:
      if (sv.completed)  // FULL: the bag still holds the previous element
        return fold_full(sv.pid, static_cast<int>(sv.req.value), sv.seq, 2);
      return true;
    case Line::F3InsWriteItem:
      return fold_insert(sv.pid, static_cast<int>(sv.req.value), sv.seq, 2, 0, 0);
    case Line::F3TakeReadAlloc: {
      pp.a_cell = static_cast<std::uint8_t>(sv.resp.scalar);
      if (sv.extra_n < 2) {
        fail("Allocated read by " + who(sv.pid, sv.op_seq, sv.req) +
             " carries no cell snapshot");
        return false;
      }
      Value item = sv.extra[0].second.scalar;
      Value tsbit = sv.extra[1].second.scalar;
      if (item == kBottom || tsbit == 1) {
        pp.mode = bag_.bag == 0 ? 1 : 2;  // EMPTY decided here, if it returns EMPTY
        pp.anchor_seq = sv.seq;
      } else {
        pp.mode = 3;  // live cell: an EMPTY return must ride on whoever wins it
      }
      return true;
    }
    case Line::F3TakeReadItem:
      pp.take_val = static_cast<std::int8_t>(sv.resp.scalar);
      return true;
    case Line::F3TakeTas:
      if (!succ_tas(sv)) return true;
      pp.mode = 0;  // this Take wins; no provisional EMPTY
      if (!fold_take(sv.pid, pp.take_val, sv.seq, 0, sv.cell, 1)) return false;
      // Armed EMPTY returns on this cell anchor immediately after the winner.
      for (int q = 0; q < static_cast<int>(pp_.size()); ++q) {
        if (q == sv.pid || pp_[q].mode != 3 || pp_[q].a_cell != sv.cell) continue;
        pp_[q].mode = bag_.bag == 0 ? 4 : 5;
        pp_[q].anchor_seq = sv.seq;
      }
      return true;
    default:
      return true;
  }
}

// ---------------------------------------------------------------------------
// ABA 1-bounded bag.

bool StepMonitor::step_f4(const StepView& sv) {
  PerProc& pp = pp_[sv.pid];
  switch (sv.line) {
    case Line::F4InsCheckTs:
      if (sv.completed) return fold_full(sv.pid, static_cast<int>(sv.req.value), sv.seq, 2);
      return true;
    case Line::F4InsWriteItem:
      pp.win_open = true;
      pp.win_cell = static_cast<std::uint8_t>(sv.cell);
      pp.win_tas = 0;
      return true;
    case Line::F4InsDwriteDone:
      pp.win_open = false;
      if (!pp.placed) return fold_insert(sv.pid, static_cast<int>(sv.req.value), sv.seq, 2, 0, 0);
      return true;
    case Line::F4TakeReadItem:
      pp.take_val = static_cast<std::int8_t>(sv.resp.scalar);
      return true;
    case Line::F4TakeTas:
      if (!succ_tas(sv)) return true;
      for (int q = 0; q < static_cast<int>(pp_.size()); ++q) {
        PerProc& ins = pp_[q];
        if (!ins.win_open || ins.win_cell != sv.cell) continue;
        if (++ins.win_tas > 1) {
          fail("two successful t&s on cell " + std::to_string(sv.cell) +
               " inside one insert window");
          return false;
        }
        ins.win_open = false;
        if (!fold_insert(q, static_cast<int>(wl_.requests[q][ins.op_seq].value), sv.seq, 0,
                         sv.cell, 0))
          return false;
        if (cfg_.record) rec_.back().pid = sv.pid;
      }
      return fold_take(sv.pid, pp.take_val, sv.seq, 0, sv.cell, 1);
    case Line::F4TakeRereadDone:
      if (sv.completed && sv.result.kind == OpResponse::Kind::Empty)
        return fold_empty(sv.pid, sv.seq, 1, 0);
      return true;
    default:
      return true;
  }
}

// ---------------------------------------------------------------------------
// b-bounded bag.

bool StepMonitor::step_f5(const StepView& sv) {
  PerProc& pp = pp_[sv.pid];

  // Anchor processing shared by the three anchor classes: place every
  // successful Take waiting on this event, coupling the poised producer's
  // Insert immediately before its partner.  Candidates apply in (cell, pid)
  // order — the order the offline comparator uses inside one step.
  auto anchor_takes = [&](bool takedone_write, int skip_ins_cell) -> bool {
    struct Cand { int cell, pid; };
    std::vector<Cand> cands;
    for (int q = 0; q < static_cast<int>(pp_.size()); ++q) {
      if (!pp_[q].awaiting) continue;
      if (skip_ins_cell > 0 && pp_[q].a_cell == skip_ins_cell) continue;
      cands.push_back({pp_[q].a_cell, q});
    }
    if (cands.empty()) return true;
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      return a.cell != b.cell ? a.cell < b.cell : a.pid < b.pid;
    });
    for (size_t i = 1; i < cands.size(); ++i) {
      if (cands[i].cell == cands[i - 1].cell) {
        fail("two successful takes of cell " + std::to_string(cands[i].cell) +
             " anchored at the same step");
        return false;
      }
    }
    for (const Cand& cd : cands) {
      PerProc& tk = pp_[cd.pid];
      // A producer whose window saw this Take's t&s couples here — but only a
      // TakeDone write can seal a coupling while the producer is poised.
      for (int q = 0; q < static_cast<int>(pp_.size()); ++q) {
        PerProc& ins = pp_[q];
        if (!ins.win_open || ins.win_take != cd.pid) continue;
        if (!takedone_write) {
          fail("successful take of cell " + std::to_string(cd.cell) +
               " anchored away from its coupled insert's sealing TakeDone write");
          return false;
        }
        ins.win_open = false;
        ins.win_take = -1;
        if (!fold_insert(q, static_cast<int>(wl_.requests[q][ins.op_seq].value), sv.seq, 0,
                         cd.cell, 0))
          return false;
        if (cfg_.record) rec_.back().pid = cd.pid;
      }
      tk.awaiting = false;
      if (!fold_take(cd.pid, tk.take_val, sv.seq, 0, cd.cell, 1)) return false;
    }
    return true;
  };

  // EMPTY returns poised to write TakeDone anchor at an uncoupled InsertDone
  // write, before the Insert itself.
  auto anchor_poised = [&]() -> bool {
    for (int q = 0; q < static_cast<int>(pp_.size()); ++q) {
      if (!pp_[q].poised) continue;
      pp_[q].poised = false;
      if (!fold_empty(q, sv.seq, 1, 0)) return false;
    }
    return true;
  };

  switch (sv.line) {
    case Line::F5InsCheckTs:
      // Reading 1 here both prunes the cell and anchors the Take that won it.
      if (sv.resp.tag == PrimValue::Tag::Scalar && sv.resp.scalar == 1)
        return anchor_takes(false, 0);
      return true;
    case Line::F5InsWriteItem:
      pp.win_open = true;
      pp.win_cell = static_cast<std::uint8_t>(sv.cell);
      pp.win_tas = 0;
      pp.win_take = -1;
      return true;
    case Line::F5InsDwriteInsertDone:
      if (pp.placed) {  // coupled earlier; its completion write anchors nothing
        pp.win_open = false;
        return true;
      }
      pp.win_open = false;
      pp.win_take = -1;
      // Uncoupled: anchor waiting Takes of other cells, then poised EMPTYs,
      // then the Insert itself.
      if (!anchor_takes(false, pp.win_cell)) return false;
      if (!anchor_poised()) return false;
      return fold_insert(sv.pid, static_cast<int>(sv.req.value), sv.seq, 2, 0, 0);
    case Line::F5InsRereadTakeDone:
      if (sv.completed && sv.result.kind == OpResponse::Kind::Full)
        return fold_full(sv.pid, static_cast<int>(sv.req.value), sv.seq, 2);
      return true;
    case Line::F5TakeReadItem:
      pp.take_val = static_cast<std::int8_t>(sv.resp.scalar);
      return true;
    case Line::F5TakeTas:
      if (!succ_tas(sv)) return true;
      pp.awaiting = true;
      pp.a_cell = static_cast<std::uint8_t>(sv.cell);
      for (int q = 0; q < static_cast<int>(pp_.size()); ++q) {
        PerProc& ins = pp_[q];
        if (!ins.win_open || ins.win_cell != sv.cell) continue;
        if (++ins.win_tas > 1) {
          fail("two successful t&s on cell " + std::to_string(sv.cell) +
               " inside one insert window");
          return false;
        }
        ins.win_take = static_cast<std::int8_t>(sv.pid);
      }
      return true;
    case Line::F5TakeRereadInsertDone:
      if (sv.resp.tag == PrimValue::Tag::Boolean && !sv.resp.flag) pp.poised = true;
      return true;
    case Line::F5TakeDwriteTakeDone:
      return anchor_takes(true, 0);
    case Line::F5TakeDwriteTakeDoneEmpty:
      if (!anchor_takes(true, 0)) return false;
      pp.poised = false;
      if (!pp.placed) return fold_empty(sv.pid, sv.seq, 1, 0);
      return true;
    default:
      return true;
  }
}

bool StepMonitor::on_step(const StepView& sv, const Layout& lay, const SimMemory& mem,
                          const std::vector<ProcState>& procs) {
  if (!ok()) return false;
  PerProc& pp = pp_[sv.pid];
  if (sv.invoked) {
    pp.placed = false;
    pp.presp = OpResponse{};
    pp.mode = 0;
    pp.a_cell = 0;
    pp.take_val = -1;
    pp.awaiting = false;
    pp.poised = false;
    pp.anchor_seq = -1;
    pp.op_seq = static_cast<std::uint16_t>(sv.op_seq);
  }

  bool fine = true;
  switch (wl_.algorithm) {
    case AlgorithmId::LiQueue:
      fail("online rule monitoring is not available for the growable-array queue");
      return false;
    case AlgorithmId::UnboundedSl: fine = step_f2(sv); break;
    case AlgorithmId::Wf1Bounded: fine = step_f3(sv); break;
    case AlgorithmId::Sl1Bounded: fine = step_f4(sv); break;
    case AlgorithmId::SlBounded: fine = step_f5(sv); break;
  }
  if (!fine) return false;

  if (cfg_.lemmas && !lemma_checks(sv, lay, mem, procs)) return false;

  if (sv.completed) {
    // The wait-free bag's EMPTY verdict resolves only now: the point was
    // decided (and its bag-emptiness captured) at the Allocated read or at
    // the winning t&s.
    if (wl_.algorithm == AlgorithmId::Wf1Bounded && !pp.placed &&
        sv.result.kind == OpResponse::Kind::Empty) {
      switch (pp.mode) {
        case 1:
        case 4:
          if (!place(sv.pid, OpResponse::empty(), 0, pp.anchor_seq, 1, 0, 0)) return false;
          break;
        case 2:
        case 5:
          fail("EMPTY take " + who(sv.pid, sv.op_seq, sv.req) +
               " linearizes while the bag holds an element");
          return false;
        case 3:
          fail("EMPTY " + who(sv.pid, sv.op_seq, sv.req) +
               " saw a live cell but no successful t&s preceded its return");
          return false;
        default:
          fail("EMPTY " + who(sv.pid, sv.op_seq, sv.req) + " has no rule anchor");
          return false;
      }
    }
    int op_steps = procs[sv.pid].op_steps;
    max_op_steps_ = std::max(max_op_steps_, op_steps);
    if (!on_completion(sv)) return false;
  }
  return ok();
}

void StepMonitor::append_key(std::string& out) const {
  for (const PerProc& pp : pp_) {
    out.push_back(static_cast<char>((pp.placed ? 1 : 0) | (pp.awaiting ? 2 : 0) |
                                    (pp.poised ? 4 : 0) | (pp.win_open ? 8 : 0) |
                                    (pp.mode << 4)));
    out.push_back(static_cast<char>(static_cast<int>(pp.presp.kind) |
                                    ((static_cast<int>(pp.presp.value) & 0xF) << 2)));
    out.push_back(static_cast<char>(pp.win_cell | (pp.win_tas << 5)));
    out.push_back(static_cast<char>(pp.win_take + 1));
    out.push_back(static_cast<char>(pp.aba1 | (pp.aba2 << 2)));
  }
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bag_.bag >> (8 * i)) & 0xFF));
  if (cfg_.fold_queue) {
    for (int i = 0; i < 8; ++i)
      out.push_back(static_cast<char>((queue_.queue >> (8 * i)) & 0xFF));
    out.push_back(static_cast<char>(queue_.queue_len));
  }
}

StepView step_view(const Trace& tr, int seq) {
  const Event& e = tr.events[seq];
  StepView sv;
  sv.seq = e.seq;
  sv.pid = e.pid;
  sv.op_seq = e.op_seq;
  sv.line = e.line;
  sv.cell = e.obj.index;
  sv.arg = e.arg;
  sv.resp = e.resp;
  sv.invoked = e.invoked;
  sv.completed = e.completed;
  int oi = tr.op_index(e.pid, e.op_seq);
  if (oi >= 0) {
    sv.req = tr.ops[oi].req;
    if (e.completed) sv.result = tr.ops[oi].resp;
  }
  sv.extra_n = e.extra_n;
  sv.extra = e.extra;
  return sv;
}

MonitorRun monitor_run_trace(const Trace& tr, const MonitorConfig& cfg0) {
  MonitorRun out;
  MonitorConfig cfg = cfg0;
  cfg.record = true;
  Runner r(tr.wl);
  StepMonitor mon(tr.wl, cfg);
  for (size_t i = 0; i < tr.events.size(); ++i) {
    r.step(tr.events[i].pid);
    StepView sv = step_view(r.trace(), static_cast<int>(i));
    if (!mon.on_step(sv, r.layout(), r.memory(), r.procs())) {
      out.ok = false;
      out.error = mon.error();
      return out;
    }
  }
  out.seq = mon.recorded();
  out.max_op_steps = mon.max_op_steps();
  for (LinPoint& p : out.seq) {
    int pid = p.op >> 16;
    int opseq = p.op & 0xFFFF;
    p.op = tr.op_index(pid, opseq);
    if (p.op < 0) {
      out.ok = false;
      out.error = "recorded point for unknown operation p" + std::to_string(pid) + "#" +
                  std::to_string(opseq);
      return out;
    }
  }
  std::stable_sort(out.seq.begin(), out.seq.end(), [](const LinPoint& a, const LinPoint& b) {
    if (a.point_seq != b.point_seq) return a.point_seq < b.point_seq;
    if (a.bucket != b.bucket) return a.bucket < b.bucket;
    if (a.cell != b.cell) return a.cell < b.cell;
    if (a.pid != b.pid) return a.pid < b.pid;
    return a.sub < b.sub;
  });
  return out;
}

}  // namespace slbag
