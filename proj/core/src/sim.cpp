#include "slbag/sim.hpp"

#include <stdexcept>

namespace slbag {

Runner::Runner(const Workload& wl) {
  wl.validate();
  tr_.wl = wl;
  build_memory(wl, mem_, lay_);
  procs_ = initial_procs(wl);
}

bool Runner::enabled(int pid, const RunLimits& lim) const {
  if (pid < 0 || pid >= static_cast<int>(procs_.size())) return false;
  const ProcState& ps = procs_[pid];
  if (!ps.active && ps.next_req >= tr_.wl.requests[pid].size()) return false;
  // A step taken at a repeat-loop head begins iteration loop_iter + 1.
  if (ps.active && ps.at_loop_head && ps.loop_iter + 1 > lim.max_loop_iters) return false;
  return true;
}

bool Runner::quiescent() const {
  for (std::size_t p = 0; p < procs_.size(); ++p)
    if (procs_[p].active || procs_[p].next_req < tr_.wl.requests[p].size()) return false;
  return true;
}

const Event& Runner::step(int pid) {
  step_undoable(pid);
  return tr_.events.back();
}

Runner::Undo Runner::step_undoable(int pid) {
  if (pid < 0 || pid >= static_cast<int>(procs_.size()))
    throw UsageError("step: process id out of range");
  ProcState& ps = procs_[pid];
  Undo u;
  u.pid = pid;
  u.cells_before = static_cast<int>(lay_.items.size());
  u.slots_before = mem_.size();

  if (!ps.active) {
    if (ps.next_req >= tr_.wl.requests[pid].size())
      throw UsageError("step: process " + std::to_string(pid) + " has no further requests");
    u.proc = ps;
    machine_begin(tr_.wl, ps, pid, tr_.wl.requests[pid][ps.next_req]);
    ps.next_req++;
  } else {
    u.proc = ps;
  }

  StepResult res = machine_step_sim(tr_.wl, lay_, mem_, ps, pid);

  Event e;
  e.seq = static_cast<int>(tr_.events.size());
  e.pid = pid;
  e.line = res.line;
  e.slot = res.slot;
  e.obj = mem_.meta(res.slot);
  e.action = res.action;
  e.arg = res.arg;
  e.resp = res.resp;
  e.op_seq = ps.ops_begun - 1;
  e.invoked = ps.op_steps == 1;
  e.completed = res.completed;
  e.extra_n = res.extra_n;
  e.extra = res.extra;
  tr_.events.push_back(e);

  if (e.invoked) {
    OpRecord op;
    op.pid = pid;
    op.op_seq = e.op_seq;
    op.req = ps.req;
    op.invoke_seq = e.seq;
    tr_.ops.push_back(op);
    u.op_pushed = true;
  }
  if (res.completed) {
    int idx = tr_.op_index(pid, e.op_seq);
    tr_.ops[idx].resp = res.result;
    tr_.ops[idx].complete_seq = e.seq;
    u.completed_op = idx;
  }
  u.slot = res.slot;
  u.obj = res.pre;
  return u;
}

void Runner::undo(const Undo& u) {
  tr_.events.pop_back();
  if (u.completed_op >= 0) {
    tr_.ops[u.completed_op].complete_seq = -1;
    tr_.ops[u.completed_op].resp = OpResponse{};
  }
  if (u.op_pushed) tr_.ops.pop_back();
  if (static_cast<int>(lay_.items.size()) > u.cells_before) {
    lay_.items.resize(u.cells_before);
    lay_.ts.resize(u.cells_before);
    mem_.truncate(u.slots_before);
  }
  mem_.state(u.slot) = u.obj;
  procs_[u.pid] = u.proc;
}

std::string Runner::state_key() const {
  std::string out;
  out.reserve(64);
  out.push_back(static_cast<char>(mem_.size()));
  for (int s = 0; s < mem_.size(); ++s) object_key(mem_.snapshot(s), out);
  for (const ProcState& ps : procs_) proc_key(ps, out);
  return out;
}

Trace run_schedule(const Workload& wl, const std::vector<int>& schedule, const RunLimits& lim) {
  Runner r(wl);
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    if (!r.enabled(schedule[k], lim))
      throw UsageError("schedule entry " + std::to_string(k) + ": process " +
                       std::to_string(schedule[k]) + " is not enabled");
    r.step(schedule[k]);
  }
  return r.trace();
}

Trace replay(const Trace& recorded) {
  Runner r(recorded.wl);
  RunLimits lim;
  lim.max_steps = static_cast<int>(recorded.events.size()) + 1;
  lim.max_loop_iters = 1 << 14;
  for (const Event& want : recorded.events) {
    if (!r.enabled(want.pid, lim))
      throw UsageError("replay diverged at event " + std::to_string(want.seq) + ": process " +
                       std::to_string(want.pid) + " cannot step");
    const Event& got = r.step(want.pid);
    auto differs = [&] {
      return got.line != want.line || got.obj.name != want.obj.name ||
             got.obj.index != want.obj.index || got.action != want.action ||
             !(got.arg == want.arg) || !(got.resp == want.resp);
    };
    if (differs())
      throw UsageError("replay diverged at event " + std::to_string(want.seq) +
                       ": recorded " + line_token(want.line) + " " + obj_token(want.obj) +
                       " " + action_token(want.action) + " " + to_token(want.arg) + " " +
                       to_token(want.resp) + ", got " + line_token(got.line) + " " +
                       obj_token(got.obj) + " " + action_token(got.action) + " " +
                       to_token(got.arg) + " " + to_token(got.resp));
  }
  // Operation boundaries must agree as well (they are derived data, but the
  // file could list tampered responses).
  const Trace& got = r.trace();
  if (got.ops.size() != recorded.ops.size())
    throw UsageError("replay diverged: operation count differs");
  for (const OpRecord& op : recorded.ops) {
    int idx = got.op_index(op.pid, op.op_seq);
    if (idx < 0) throw UsageError("replay diverged: missing operation record");
    const OpRecord& g = got.ops[idx];
    if (!(g.req == op.req) || g.invoke_seq != op.invoke_seq ||
        g.complete_seq != op.complete_seq || (g.completed() && !(g.resp == op.resp)))
      throw UsageError("replay diverged: operation p" + std::to_string(op.pid) + "#" +
                       std::to_string(op.op_seq) + " boundaries differ");
  }
  return got;
}

namespace {

bool explore_node(Runner& r, const RunLimits& lim, const TraceVisitor& visit,
                  ExploreStats& st, bool& aborted) {
  int procs = r.workload().num_processes();
  bool cut = lim.max_steps >= 0 && r.steps() >= lim.max_steps;
  bool any = false;
  if (!cut) {
    for (int pid = 0; pid < procs && !aborted; ++pid) {
      if (!r.enabled(pid, lim)) continue;
      any = true;
      if (lim.node_ceiling >= 0 && st.nodes >= lim.node_ceiling) {
        st.complete = false;
        aborted = true;
        return false;
      }
      st.nodes++;
      Runner::Undo u = r.step_undoable(pid);
      explore_node(r, lim, visit, st, aborted);
      r.undo(u);
    }
  }
  if (!any && !aborted) {
    st.traces++;
    bool quiet = r.quiescent();
    if (!quiet) st.complete = false;
    if (!visit(r.trace(), quiet)) {
      st.complete = false;
      aborted = true;
    }
  }
  return true;
}

}  // namespace

ExploreStats explore(const Workload& wl, const RunLimits& lim, const TraceVisitor& visit) {
  Runner r(wl);
  ExploreStats st;
  bool aborted = false;
  explore_node(r, lim, visit, st, aborted);
  return st;
}

}  // namespace slbag
