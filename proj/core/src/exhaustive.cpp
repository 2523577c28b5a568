#include "slbag/exhaustive.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "slbag/hashkey.hpp"

namespace slbag {

namespace {

using U128 = unsigned __int128;
constexpr U128 kSatMax = ~U128{0};

std::string dec128(U128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v != 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

struct NodeInfo {
  U128 leaves = 0;
  bool done = false;
};

struct MergedWalk {
  const Workload& wl;
  const RunLimits& lim;
  MergedStats& st;
  Runner r;
  StepMonitor mon;
  Key128Map<NodeInfo> memo;
  bool aborted = false;

  MergedWalk(const Workload& w, const RunLimits& l, const MonitorConfig& cfg,
             MergedStats& s)
      : wl(w), lim(l), st(s), r(w), mon(w, cfg) {}

  U128 sat_add(U128 a, U128 b) {
    U128 s = a + b;
    if (s < a) {
      st.leaves_saturated = true;
      return kSatMax;
    }
    return s;
  }

  U128 dfs() {
    std::string raw = r.state_key();
    mon.append_key(raw);
    Key128 key = hash128(raw);
    auto [info, inserted] = memo.emplace(key, NodeInfo{});
    if (!inserted) return info->leaves;  // merged: subtree already summed
    if (lim.node_ceiling >= 0 &&
        memo.size() > static_cast<std::size_t>(lim.node_ceiling)) {
      st.inconclusive = true;
      aborted = true;
      return 0;
    }

    int n = wl.num_processes();
    bool any = false;
    U128 sum = 0;
    for (int p = 0; p < n && !aborted; ++p) {
      if (!r.enabled(p, lim)) continue;
      any = true;
      ++st.edges;
      StepMonitor saved = mon;
      Runner::Undo u = r.step_undoable(p);
      const Trace& tr = r.trace();
      StepView sv = step_view(tr, static_cast<int>(tr.events.size()) - 1);
      if (!mon.on_step(sv, r.layout(), r.memory(), r.procs())) {
        st.ok = false;
        st.error = mon.error();
        st.failing_trace = tr.to_text();
        aborted = true;
        r.undo(u);
        mon = saved;
        break;
      }
      if (sv.completed)
        st.max_op_steps =
            std::max(st.max_op_steps, static_cast<int>(r.procs()[p].op_steps));
      sum = sat_add(sum, dfs());
      r.undo(u);
      mon = saved;
    }
    if (!any) {
      if (r.quiescent()) {
        sum = 1;
      } else {
        ++st.dead_ends;
        sum = 0;
      }
    }
    // Re-find: the recursion may have rehashed the table under `info`.
    NodeInfo* slot = memo.find(key);
    slot->leaves = sum;
    slot->done = true;
    return sum;
  }
};

}  // namespace

MergedStats explore_merged(const Workload& wl, const RunLimits& lim,
                           const MonitorConfig& cfg) {
  MergedStats st;
  MergedWalk walk(wl, lim, cfg, st);
  U128 total = walk.dfs();
  st.nodes = walk.memo.size();
  st.leaves = dec128(total);
  if (st.leaves_saturated) st.leaves += "+";
  st.leaves_u64 =
      total > static_cast<U128>(std::numeric_limits<unsigned long long>::max())
          ? std::numeric_limits<unsigned long long>::max()
          : static_cast<unsigned long long>(total);
  return st;
}

}  // namespace slbag
