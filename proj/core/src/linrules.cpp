#include "slbag/linrules.hpp"

#include <algorithm>
#include <limits>

namespace slbag {

namespace {

constexpr int kNoSeq = std::numeric_limits<int>::max();

bool is_succ_tas(const Event& e) {
  return e.action == PrimAction::Tas && e.resp.tag == PrimValue::Tag::Scalar &&
         e.resp.scalar == 0;
}

bool is_takedone_write(const Event& e) {
  return e.line == Line::F5TakeDwriteTakeDone || e.line == Line::F5TakeDwriteTakeDoneEmpty;
}

/// Shared per-trace indexing for the rule passes.
struct Ctx {
  const Trace& tr;
  std::vector<int> op_of;              // event index -> op index
  std::vector<std::vector<int>> evs;   // op index -> event indices, ascending

  explicit Ctx(const Trace& t) : tr(t) {
    op_of.assign(tr.events.size(), -1);
    evs.assign(tr.ops.size(), {});
    for (size_t i = 0; i < tr.events.size(); ++i) {
      int oi = tr.op_index(tr.events[i].pid, tr.events[i].op_seq);
      op_of[i] = oi;
      if (oi >= 0) evs[oi].push_back(static_cast<int>(i));
    }
  }

  /// First event of op `oi` on `line`, or nullptr.
  const Event* find_line(int oi, Line line) const {
    for (int k : evs[oi])
      if (tr.events[k].line == line) return &tr.events[k];
    return nullptr;
  }

  /// The op's successful t&s event index, or -1.
  int succ_tas_of(int oi) const {
    for (int k : evs[oi])
      if (is_succ_tas(tr.events[k])) return k;
    return -1;
  }

  /// Value a Take is bound to return: the response of its last Items read
  /// at or before event index `upto`.
  Value take_value(int oi, int upto, std::string& err) const {
    for (auto it = evs[oi].rbegin(); it != evs[oi].rend(); ++it) {
      if (*it > upto) continue;
      const Event& e = tr.events[*it];
      if (e.obj.name == ObjName::Items && e.action == PrimAction::Read)
        return e.resp.scalar;
    }
    err = "no Items read precedes the successful t&s of op at event " +
          std::to_string(tr.events[upto].seq);
    return kBottom;
  }
};

void sort_points(LinAssignment& out) {
  std::stable_sort(out.seq.begin(), out.seq.end(), [](const LinPoint& a, const LinPoint& b) {
    if (a.point_seq != b.point_seq) return a.point_seq < b.point_seq;
    if (a.bucket != b.bucket) return a.bucket < b.bucket;
    if (a.cell != b.cell) return a.cell < b.cell;
    if (a.pid != b.pid) return a.pid < b.pid;
    return a.sub < b.sub;
  });
}

std::string op_label(const OpRecord& op) {
  return "p" + std::to_string(op.pid) + "#" + std::to_string(op.op_seq) + " " +
         request_token(op.req);
}

// ---------------------------------------------------------------------------
// Growable-array queue: the claimed rules (Insert at its Items write,
// successful Take at its t&s, EMPTY Take at its last read of Max).  These
// are deliberately not a strong-linearizability argument — an EMPTY Take may
// be linearized while the assigned bag is non-empty — and validate_trace is
// expected to report legality failures on adversarial traces.

void assign_f1(const Ctx& c, LinAssignment& out) {
  for (size_t oi = 0; oi < c.tr.ops.size(); ++oi) {
    const OpRecord& op = c.tr.ops[oi];
    if (op.req.is_insert) {
      if (const Event* w = c.find_line(static_cast<int>(oi), Line::F1InsWriteItem)) {
        out.seq.push_back({static_cast<int>(oi), OpResponse::ok(), w->seq, 2, 0, op.pid, 0});
      } else if (op.completed()) {
        out.error = "no Items write to anchor completed " + op_label(op);
        return;
      }
      continue;
    }
    int ts = c.succ_tas_of(static_cast<int>(oi));
    if (ts >= 0) {
      Value v = c.take_value(static_cast<int>(oi), ts, out.error);
      if (!out.error.empty()) return;
      const Event& e = c.tr.events[ts];
      out.seq.push_back({static_cast<int>(oi), OpResponse::taken(v), e.seq, 0,
                         e.obj.index, op.pid, 1});
      continue;
    }
    if (op.completed()) {
      const Event* last_max = nullptr;
      for (int k : c.evs[oi])
        if (c.tr.events[k].line == Line::F1TakeReadMax) last_max = &c.tr.events[k];
      if (!last_max) {
        out.error = "no Max read to anchor EMPTY " + op_label(op);
        return;
      }
      out.seq.push_back({static_cast<int>(oi), OpResponse::empty(), last_max->seq, 1, 0,
                         op.pid, 0});
    }
  }
}

// ---------------------------------------------------------------------------
// Done-counter bag: successful Take at its t&s; EMPTY Take at the re-read of
// Done that matched its first read; Insert at its Done f&i, unless a
// successful t&s on its cell lands between the Items write and that f&i — the
// operations are then coupled and the Insert goes immediately before the Take.

void assign_f2(const Ctx& c, LinAssignment& out) {
  for (size_t oi = 0; oi < c.tr.ops.size(); ++oi) {
    const OpRecord& op = c.tr.ops[oi];
    if (op.req.is_insert) {
      const Event* w = c.find_line(static_cast<int>(oi), Line::F2InsWriteItem);
      const Event* d = c.find_line(static_cast<int>(oi), Line::F2InsIncDone);
      if (w) {
        int upper = d ? d->seq : kNoSeq;
        const Event* ts = nullptr;
        int tk_op = -1;
        for (size_t k = 0; k < c.tr.events.size(); ++k) {
          const Event& e = c.tr.events[k];
          if (e.seq <= w->seq || e.seq >= upper) continue;
          if (is_succ_tas(e) && e.obj.index == w->obj.index) {
            ts = &e;
            tk_op = c.op_of[k];
            break;
          }
        }
        if (ts) {  // coupled: the Insert rides immediately before its Take
          out.seq.push_back({static_cast<int>(oi), OpResponse::ok(), ts->seq, 0,
                             ts->obj.index, c.tr.ops[tk_op].pid, 0});
          continue;
        }
      }
      if (d) {
        out.seq.push_back({static_cast<int>(oi), OpResponse::ok(), d->seq, 2, 0, op.pid, 0});
      } else if (op.completed()) {
        out.error = "no Done f&i to anchor completed " + op_label(op);
        return;
      }
      continue;
    }
    int ts = c.succ_tas_of(static_cast<int>(oi));
    if (ts >= 0) {
      Value v = c.take_value(static_cast<int>(oi), ts, out.error);
      if (!out.error.empty()) return;
      const Event& e = c.tr.events[ts];
      out.seq.push_back({static_cast<int>(oi), OpResponse::taken(v), e.seq, 0,
                         e.obj.index, op.pid, 1});
      continue;
    }
    if (op.completed()) {
      // The completing event is the Done re-read that observed no change.
      out.seq.push_back({static_cast<int>(oi), OpResponse::empty(), op.complete_seq, 1, 0,
                         op.pid, 0});
    }
  }
}

// ---------------------------------------------------------------------------
// Wait-free 1-bounded bag: Insert at its completing event (Items write for
// OK, TS read for FULL); successful Take at its t&s; EMPTY Take either at its
// Allocated read (when the announced cell was already empty or claimed there)
// or immediately after the first successful t&s on that cell before it
// returns.  Only legality and interval containment hold for these rules.

void assign_f3(const Ctx& c, LinAssignment& out) {
  for (size_t oi = 0; oi < c.tr.ops.size(); ++oi) {
    const OpRecord& op = c.tr.ops[oi];
    if (op.req.is_insert) {
      if (op.completed())
        out.seq.push_back({static_cast<int>(oi), op.resp, op.complete_seq, 2, 0, op.pid, 0});
      continue;  // a pending Insert has not reached a rule event
    }
    int ts = c.succ_tas_of(static_cast<int>(oi));
    if (ts >= 0) {
      Value v = c.take_value(static_cast<int>(oi), ts, out.error);
      if (!out.error.empty()) return;
      const Event& e = c.tr.events[ts];
      out.seq.push_back({static_cast<int>(oi), OpResponse::taken(v), e.seq, 0,
                         e.obj.index, op.pid, 1});
      continue;
    }
    if (!op.completed()) continue;
    const Event* ra = c.find_line(static_cast<int>(oi), Line::F3TakeReadAlloc);
    if (!ra || ra->extra_n < 2) {
      out.error = "EMPTY " + op_label(op) +
                  " lacks the Allocated-read snapshot (replay the trace to restore it)";
      return;
    }
    Value item_at_read = ra->extra[0].second.scalar;
    Value ts_at_read = ra->extra[1].second.scalar;
    if (item_at_read == kBottom || ts_at_read == 1) {
      out.seq.push_back({static_cast<int>(oi), OpResponse::empty(), ra->seq, 1, 0, op.pid, 0});
      continue;
    }
    // The cell was live at the read: the return is justified by whoever won
    // the cell; place the EMPTY immediately after that successful t&s.
    int cell = static_cast<int>(ra->resp.scalar);
    const Event* win = nullptr;
    for (const Event& e : c.tr.events) {
      if (e.seq <= ra->seq || e.seq >= op.complete_seq) continue;
      if (is_succ_tas(e) && e.obj.index == cell) {
        win = &e;
        break;
      }
    }
    if (!win) {
      out.error = "EMPTY " + op_label(op) +
                  " saw a live cell but no successful t&s preceded its return";
      return;
    }
    out.seq.push_back({static_cast<int>(oi), OpResponse::empty(), win->seq, 1, 0, op.pid, 0});
  }
}

// ---------------------------------------------------------------------------
// ABA 1-bounded bag: like the wait-free bag, but the Insert couples with a
// Take whose successful t&s lands between the Items write and the Done
// dWrite; an uncoupled Insert linearizes at its dWrite and an EMPTY Take at
// the Done re-read that returned false.

void assign_f4(const Ctx& c, LinAssignment& out) {
  for (size_t oi = 0; oi < c.tr.ops.size(); ++oi) {
    const OpRecord& op = c.tr.ops[oi];
    if (op.req.is_insert) {
      if (op.completed() && op.resp.kind == OpResponse::Kind::Full) {
        out.seq.push_back({static_cast<int>(oi), op.resp, op.complete_seq, 2, 0, op.pid, 0});
        continue;
      }
      const Event* w = c.find_line(static_cast<int>(oi), Line::F4InsWriteItem);
      const Event* d = c.find_line(static_cast<int>(oi), Line::F4InsDwriteDone);
      if (w) {
        int upper = d ? d->seq : kNoSeq;
        const Event* ts = nullptr;
        int tk_op = -1;
        for (size_t k = 0; k < c.tr.events.size(); ++k) {
          const Event& e = c.tr.events[k];
          if (e.seq <= w->seq || e.seq >= upper) continue;
          if (is_succ_tas(e) && e.obj.index == w->obj.index) {
            ts = &e;
            tk_op = c.op_of[k];
            break;
          }
        }
        if (ts) {
          out.seq.push_back({static_cast<int>(oi), OpResponse::ok(), ts->seq, 0,
                             ts->obj.index, c.tr.ops[tk_op].pid, 0});
          continue;
        }
      }
      if (d) {
        out.seq.push_back({static_cast<int>(oi), OpResponse::ok(), d->seq, 2, 0, op.pid, 0});
      } else if (op.completed()) {
        out.error = "no Done dWrite to anchor completed " + op_label(op);
        return;
      }
      continue;
    }
    int ts = c.succ_tas_of(static_cast<int>(oi));
    if (ts >= 0) {
      Value v = c.take_value(static_cast<int>(oi), ts, out.error);
      if (!out.error.empty()) return;
      const Event& e = c.tr.events[ts];
      out.seq.push_back({static_cast<int>(oi), OpResponse::taken(v), e.seq, 0,
                         e.obj.index, op.pid, 1});
      continue;
    }
    if (op.completed()) {
      out.seq.push_back({static_cast<int>(oi), OpResponse::empty(), op.complete_seq, 1, 0,
                         op.pid, 0});
    }
  }
}

// ---------------------------------------------------------------------------
// b-bounded bag.  An Insert that wrote Items[a] is coupled when, inside its
// poised window (after the Items write, before its InsertDone dWrite), some
// Take wins TS[a] and then some Take writes TakeDone; the Insert goes
// immediately before that winning Take.  A successful Take linearizes at the
// first event after its t&s that is (1) any TakeDone write, (2) the producer
// reading 1 from TS on its taken cell, or (3) an InsertDone write by an
// uncoupled Insert for a different cell.  An EMPTY Take linearizes at the
// first uncoupled InsertDone write while it is poised to write TakeDone, or
// at its own TakeDone write when none lands.

void assign_f5(const Ctx& c, LinAssignment& out) {
  const Trace& tr = c.tr;
  int nops = static_cast<int>(tr.ops.size());

  struct InsInfo {
    int w = -1;          // Items-write seq
    int cell = 0;
    int dwr = -1;        // InsertDone-write seq
    bool coupled = false;
    int tk_op = -1;      // coupled partner
    int pair_seq = -1;   // the TakeDone write that seals the coupling
  };
  std::vector<InsInfo> ins(nops);

  // Pass 1: insert windows and coupling.
  for (int oi = 0; oi < nops; ++oi) {
    const OpRecord& op = tr.ops[oi];
    if (!op.req.is_insert) continue;
    InsInfo& info = ins[oi];
    if (const Event* w = c.find_line(oi, Line::F5InsWriteItem)) {
      info.w = w->seq;
      info.cell = w->obj.index;
    }
    if (const Event* d = c.find_line(oi, Line::F5InsDwriteInsertDone)) info.dwr = d->seq;
    if (info.w < 0) continue;
    int upper = info.dwr >= 0 ? info.dwr : kNoSeq;
    int s = -1;
    for (size_t k = 0; k < tr.events.size(); ++k) {
      const Event& e = tr.events[k];
      if (e.seq <= info.w || e.seq >= upper) continue;
      if (is_succ_tas(e) && e.obj.index == info.cell) {
        s = e.seq;
        info.tk_op = c.op_of[k];
        break;
      }
    }
    if (s < 0) continue;
    for (const Event& e : tr.events) {
      if (e.seq <= s || e.seq >= upper) continue;
      if (is_takedone_write(e)) {
        info.coupled = true;
        info.pair_seq = e.seq;
        break;
      }
    }
    if (!info.coupled) info.tk_op = -1;
  }

  // An event is an uncoupled InsertDone write for cell a' when its insert is
  // known uncoupled; resolves anchor rule (3) and the EMPTY rule.
  auto uncoupled_insdone = [&](size_t k) -> const InsInfo* {
    const Event& e = tr.events[k];
    if (e.line != Line::F5InsDwriteInsertDone) return nullptr;
    int oi = c.op_of[k];
    if (oi < 0 || ins[oi].coupled) return nullptr;
    return &ins[oi];
  };

  // Pass 2: successful Takes at their first anchor event.
  std::vector<int> take_anchor(nops, -1);
  for (int oi = 0; oi < nops; ++oi) {
    const OpRecord& op = tr.ops[oi];
    if (op.req.is_insert) continue;
    int ts = c.succ_tas_of(oi);
    if (ts < 0) continue;
    const Event& tse = tr.events[ts];
    int cell = tse.obj.index;
    int anchor = -1;
    for (size_t k = ts + 1; k < tr.events.size(); ++k) {
      const Event& e = tr.events[k];
      if (is_takedone_write(e)) {
        anchor = e.seq;
        break;
      }
      if (e.line == Line::F5InsCheckTs && e.obj.index == cell &&
          e.resp.tag == PrimValue::Tag::Scalar && e.resp.scalar == 1) {
        anchor = e.seq;
        break;
      }
      if (const InsInfo* ii = uncoupled_insdone(k); ii && ii->cell != cell) {
        anchor = e.seq;
        break;
      }
    }
    if (anchor < 0) {
      if (op.completed()) {
        out.error = "successful " + op_label(op) + " has no anchor event after its t&s";
        return;
      }
      continue;  // pending; its own TakeDone write will anchor it later
    }
    Value v = c.take_value(oi, ts, out.error);
    if (!out.error.empty()) return;
    take_anchor[oi] = anchor;
    out.seq.push_back({oi, OpResponse::taken(v), anchor, 0, cell, op.pid, 1});
  }

  // Pass 3: Inserts.
  for (int oi = 0; oi < nops; ++oi) {
    const OpRecord& op = tr.ops[oi];
    if (!op.req.is_insert) continue;
    const InsInfo& info = ins[oi];
    if (info.coupled) {
      const OpRecord& tk = tr.ops[info.tk_op];
      // While the producer is poised no other anchor class can occur, so the
      // partner Take must sit exactly at the sealing TakeDone write.
      if (take_anchor[info.tk_op] != info.pair_seq) {
        out.error = "coupled " + op_label(op) + " disagrees with its Take's anchor (" +
                    std::to_string(take_anchor[info.tk_op]) + " vs " +
                    std::to_string(info.pair_seq) + ")";
        return;
      }
      out.seq.push_back({oi, OpResponse::ok(), info.pair_seq, 0, info.cell, tk.pid, 0});
      continue;
    }
    if (op.completed() && op.resp.kind == OpResponse::Kind::Full) {
      out.seq.push_back({oi, op.resp, op.complete_seq, 2, 0, op.pid, 0});
      continue;
    }
    if (info.dwr >= 0) {
      out.seq.push_back({oi, OpResponse::ok(), info.dwr, 2, 0, op.pid, 0});
    } else if (op.completed()) {
      out.error = "no InsertDone write to anchor completed " + op_label(op);
      return;
    }
  }

  // Pass 4: EMPTY Takes.  Poised window = (final InsertDone re-read that
  // returned false, own TakeDone write].
  for (int oi = 0; oi < nops; ++oi) {
    const OpRecord& op = tr.ops[oi];
    if (op.req.is_insert || c.succ_tas_of(oi) >= 0) continue;
    int poised_from = -1;
    for (int k : c.evs[oi]) {
      const Event& e = tr.events[k];
      if (e.line == Line::F5TakeRereadInsertDone && e.resp.tag == PrimValue::Tag::Boolean &&
          !e.resp.flag)
        poised_from = e.seq;
    }
    if (poised_from < 0) continue;  // never poised; pending with no rule fired
    int own_write = op.completed() ? op.complete_seq : kNoSeq;
    int point = -1;
    for (size_t k = 0; k < tr.events.size(); ++k) {
      const Event& e = tr.events[k];
      if (e.seq <= poised_from || e.seq >= own_write) continue;
      if (uncoupled_insdone(k)) {
        point = e.seq;
        break;
      }
    }
    if (point < 0) {
      if (!op.completed()) continue;  // poised, but no rule event yet
      point = own_write;
    }
    out.seq.push_back({oi, OpResponse::empty(), point, 1, 0, op.pid, 0});
  }
}

}  // namespace

LinAssignment assign_lin_points(AlgorithmId algo, const Trace& tr) {
  LinAssignment out;
  Ctx c(tr);
  switch (algo) {
    case AlgorithmId::LiQueue: assign_f1(c, out); break;
    case AlgorithmId::UnboundedSl: assign_f2(c, out); break;
    case AlgorithmId::Wf1Bounded: assign_f3(c, out); break;
    case AlgorithmId::Sl1Bounded: assign_f4(c, out); break;
    case AlgorithmId::SlBounded: assign_f5(c, out); break;
  }
  if (!out.ok()) {
    out.seq.clear();
    return out;
  }
  sort_points(out);
  return out;
}

ValidateReport validate_trace(AlgorithmId algo, const Trace& tr, SpecKind spec) {
  ValidateReport rep;
  auto fail = [&rep](std::string msg) {
    rep.ok = false;
    rep.error = std::move(msg);
    return rep;
  };

  int capacity = tr.wl.algorithm == AlgorithmId::SlBounded ? tr.wl.b : 1;
  SpecUniverse uni = SpecUniverse::from_workload(tr.wl);

  LinAssignment full = assign_lin_points(algo, tr);
  if (!full.ok()) return fail("rule coverage: " + full.error);

  // (a) interval containment, uniqueness, and response agreement.
  std::vector<int> placed(tr.ops.size(), 0);
  for (const LinPoint& p : full.seq) {
    const OpRecord& op = tr.ops[p.op];
    ++placed[p.op];
    if (p.point_seq < op.invoke_seq)
      return fail("point " + std::to_string(p.point_seq) + " precedes invocation of " +
                  op_label(op));
    if (op.completed() && p.point_seq > op.complete_seq)
      return fail("point " + std::to_string(p.point_seq) + " follows completion of " +
                  op_label(op));
    if (op.completed() && !(p.resp == op.resp))
      return fail("assigned response " + response_token(p.resp) + " contradicts recorded " +
                  response_token(op.resp) + " for " + op_label(op));
  }
  for (size_t oi = 0; oi < tr.ops.size(); ++oi) {
    if (tr.ops[oi].completed() && placed[oi] != 1)
      return fail("completed " + op_label(tr.ops[oi]) + " placed " +
                  std::to_string(placed[oi]) + " times");
    if (!tr.ops[oi].completed() && placed[oi] > 1)
      return fail("pending " + op_label(tr.ops[oi]) + " placed " + std::to_string(placed[oi]) +
                  " times");
  }

  // (b) legality of the assigned order under the sequential spec.
  std::vector<std::pair<OpRequest, OpResponse>> seq;
  for (const LinPoint& p : full.seq) seq.push_back({tr.ops[p.op].req, p.resp});
  if (!is_legal(spec, capacity, uni, seq)) {
    std::string order;
    for (const LinPoint& p : full.seq)
      order += (order.empty() ? "" : ", ") + op_label(tr.ops[p.op]) + "/" +
               response_token(p.resp);
    return fail("assigned order illegal under " + spec_token(spec) + ": [" + order + "]");
  }

  // (c) prefix-monotonicity for the prefix-stable rule sets.
  bool check_prefixes = algo == AlgorithmId::UnboundedSl || algo == AlgorithmId::Sl1Bounded ||
                        algo == AlgorithmId::SlBounded;
  if (check_prefixes) {
    for (int len = 0; len < static_cast<int>(tr.events.size()); ++len) {
      Trace pre = trace_prefix(tr, len);
      LinAssignment pa = assign_lin_points(algo, pre);
      if (!pa.ok())
        return fail("prefix of " + std::to_string(len) + " events: " + pa.error);
      if (pa.seq.size() > full.seq.size())
        return fail("prefix of " + std::to_string(len) + " events assigns more points than the full trace");
      for (size_t i = 0; i < pa.seq.size(); ++i) {
        const OpRecord& a = pre.ops[pa.seq[i].op];
        const OpRecord& b = tr.ops[full.seq[i].op];
        if (a.pid != b.pid || a.op_seq != b.op_seq || !(pa.seq[i].resp == full.seq[i].resp) ||
            pa.seq[i].point_seq != full.seq[i].point_seq)
          return fail("prefix of " + std::to_string(len) + " events diverges at position " +
                      std::to_string(i) + ": prefix places " + op_label(a) + "/" +
                      response_token(pa.seq[i].resp) + "@" +
                      std::to_string(pa.seq[i].point_seq) + ", full trace places " +
                      op_label(b) + "/" + response_token(full.seq[i].resp) + "@" +
                      std::to_string(full.seq[i].point_seq));
      }
    }
  }
  return rep;
}

}  // namespace slbag
