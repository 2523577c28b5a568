#include "slbag/slcheck.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "slbag/hashkey.hpp"

namespace slbag {

std::uint32_t canon_elem(int pid, int op_seq, const OpResponse& resp) {
  return (static_cast<std::uint32_t>(pid) << 16) |
         (static_cast<std::uint32_t>(op_seq & 0xFF) << 8) |
         (static_cast<std::uint32_t>(resp.kind) << 4) |
         (static_cast<std::uint32_t>(resp.value) & 0xF);
}

std::string canon_to_text(const CanonLin& lin) {
  std::string out;
  for (std::uint32_t e : lin) {
    if (!out.empty()) out += ' ';
    out += 'p';
    out += std::to_string(e >> 16);
    out += '#';
    out += std::to_string((e >> 8) & 0xFF);
    out += ':';
    OpResponse r{static_cast<OpResponse::Kind>((e >> 4) & 0xF),
                 static_cast<Value>(e & 0xF)};
    out += response_token(r);
  }
  return out.empty() ? std::string("(empty)") : out;
}

Trace SlWitness::alpha() const { return trace_prefix(full1, alpha_len); }

std::string SlWitness::to_text() const { return full1.to_text(); }

namespace {

constexpr int kMaxP = 8;

// One irrevocable commitment state of the assignment being constructed: the
// sequential-object state after the committed linearization, plus for each
// process whether its current operation is uncommitted (1) or committed with
// a recorded response (2). Completed operations are always committed, so
// they need no entry.
struct Commit {
  SpecState s;
  std::array<std::uint8_t, kMaxP> st{};
  std::array<OpResponse, kMaxP> cr{};

  void append_key(std::string& out, int n) const {
    char buf[13];
    std::memcpy(buf, &s.bag, 4);
    std::memcpy(buf + 4, &s.queue, 8);
    buf[12] = static_cast<char>(s.queue_len);
    out.append(buf, 13);
    for (int p = 0; p < n; ++p) {
      out.push_back(static_cast<char>(st[p]));
      if (st[p] == 2) {
        out.push_back(static_cast<char>(cr[p].kind));
        out.push_back(static_cast<char>(cr[p].value & 0xFF));
      }
    }
  }
};

// Applies `req` to `state` demanding exactly `resp`; false when no legal
// branch produces that response.
bool apply_exact(SpecKind kind, int cap, const SpecUniverse& uni, SpecState& state,
                 const OpRequest& req, const OpResponse& resp) {
  const auto branches = spec_apply(kind, cap, uni, state, req);
  for (const SpecBranch& br : branches) {
    if (br.resp == resp) {
      state = br.next;
      return true;
    }
  }
  return false;
}

// A linearization of the current (possibly partial) history in canonical
// form, together with the commitment state it induces.
struct LinCommit {
  CanonLin canon;
  Commit c;
};

class Game {
 public:
  Game(const Workload& wl, SpecKind spec, int cap, const RunLimits& lim)
      : wl_(wl),
        lim_(lim),
        spec_(spec),
        cap_(cap),
        uni_(SpecUniverse::from_workload(wl)),
        r_(wl) {}

  // True iff, starting from the runner's current machine state with
  // commitment `c`, the assignment can keep every future schedule consistent.
  // Memoized over merged (machine, commitment) states; acyclic because every
  // scheduler step advances some process.
  bool win(const Commit& c) {
    std::string raw = r_.state_key();
    c.append_key(raw, n());
    const Key128 key = hash128(raw);
    if (const std::uint8_t* v = memo_.find(key)) return *v == 1;
    if (lim_.node_ceiling >= 0 &&
        static_cast<long long>(memo_.size()) >= lim_.node_ceiling) {
      hit_ceiling_ = true;
      return true;
    }
    bool res = true;
    if (r_.steps() < lim_.max_steps) {
      for (int p = 0; p < n() && res; ++p) {
        if (!r_.enabled(p, lim_)) continue;
        Runner::Undo u = r_.step_undoable(p);
        const Event ev = r_.trace().events.back();  // copy: recursion may grow the vector
        if (!edge_ok(c, ev)) res = false;
        r_.undo(u);
      }
    }
    memo_.emplace(key, res ? std::uint8_t{1} : std::uint8_t{2});
    return res;
  }

  // All distinct linearizations of the current history (pending operations
  // may be included with any legal response or left out), as commitments.
  std::vector<LinCommit> lins_here() {
    const Trace& tr = r_.trace();
    std::vector<LinCommit> out;
    std::set<CanonLin> seen;
    linearize_all(spec_, cap_, uni_, tr.ops, /*include_pending=*/true,
                  [&](const LinOrder& lo) {
                    LinCommit lc;
                    for (const OpRecord& rec : tr.ops)
                      if (!rec.completed()) lc.c.st[rec.pid] = 1;
                    bool ok = true;
                    for (std::size_t i = 0; i < lo.order.size() && ok; ++i) {
                      const OpRecord& rec = tr.ops[lo.order[i]];
                      const OpResponse& resp = lo.resps[i];
                      ok = apply_exact(spec_, cap_, uni_, lc.c.s, rec.req, resp);
                      lc.canon.push_back(canon_elem(rec.pid, rec.op_seq, resp));
                      if (!rec.completed()) {
                        lc.c.st[rec.pid] = 2;
                        lc.c.cr[rec.pid] = resp;
                      }
                    }
                    if (ok && seen.insert(lc.canon).second)
                      out.push_back(std::move(lc));
                    return true;
                  });
    return out;
  }

  // True iff some linearization of the current history can still win.
  bool feasible() {
    for (const LinCommit& lc : lins_here())
      if (win(lc.c)) return true;
    return false;
  }

  Runner& runner() { return r_; }
  int n() const { return wl_.num_processes(); }
  bool hit_ceiling() const { return hit_ceiling_; }
  unsigned long long nodes() const {
    return static_cast<unsigned long long>(memo_.size());
  }
  SpecKind spec() const { return spec_; }
  int cap() const { return cap_; }
  const SpecUniverse& universe() const { return uni_; }
  const RunLimits& limits() const { return lim_; }

 private:
  // One scheduler edge whose resulting event is `ev`: updates the commitment
  // for an invocation, enforces committed-response agreement on completion,
  // then lets the assignment append further commitments.
  bool edge_ok(Commit c, const Event& ev) {
    const int p = ev.pid;
    if (ev.invoked) c.st[p] = 1;
    if (ev.completed) {
      const Trace& tr = r_.trace();
      const OpRecord& rec = tr.ops[tr.op_index(p, ev.op_seq)];
      if (c.st[p] == 2) {
        if (!(c.cr[p] == rec.resp)) return false;
        c.st[p] = 0;
        c.cr[p] = OpResponse{};
        return appends(c, -1, OpRequest{}, OpResponse{});
      }
      return appends(c, p, rec.req, rec.resp);  // must be committed in this append
    }
    return appends(c, -1, OpRequest{}, OpResponse{});
  }

  // Tries every sequence of additional commitments: stop (only once nothing
  // is forced), or commit one more pending operation — the just-completed one
  // with its actual response, any other with any legal response — and recurse.
  bool appends(const Commit& c, int must_p, const OpRequest& must_req,
               const OpResponse& actual) {
    if (must_p < 0 && win(c)) return true;
    for (int q = 0; q < n(); ++q) {
      if (q == must_p) {
        Commit c2 = c;
        if (!apply_exact(spec_, cap_, uni_, c2.s, must_req, actual)) continue;
        c2.st[q] = 0;
        c2.cr[q] = OpResponse{};
        if (appends(c2, -1, OpRequest{}, OpResponse{})) return true;
      } else if (c.st[q] == 1) {
        const OpRequest rq = r_.procs()[q].req;
        const auto branches = spec_apply(spec_, cap_, uni_, c.s, rq);
        for (const SpecBranch& br : branches) {
          Commit c2 = c;
          c2.s = br.next;
          c2.st[q] = 2;
          c2.cr[q] = br.resp;
          if (appends(c2, must_p, must_req, actual)) return true;
        }
      }
    }
    return false;
  }

  const Workload& wl_;
  RunLimits lim_;
  SpecKind spec_;
  int cap_;
  SpecUniverse uni_;
  Runner r_;
  Key128Map<std::uint8_t> memo_;
  bool hit_ceiling_ = false;
};

// All linearizations of a completed run's history, plus every prefix of each
// (the candidate assignments that survive into this future).
struct Evidence {
  std::set<CanonLin> prefixes;
};

Evidence evidence_of(const Trace& full, SpecKind spec, int cap,
                     const SpecUniverse& uni) {
  Evidence e;
  linearize_all(spec, cap, uni, full.ops, /*include_pending=*/false,
                [&](const LinOrder& lo) {
                  CanonLin cl;
                  cl.reserve(lo.order.size());
                  for (std::size_t i = 0; i < lo.order.size(); ++i) {
                    const OpRecord& rec = full.ops[lo.order[i]];
                    cl.push_back(canon_elem(rec.pid, rec.op_seq, lo.resps[i]));
                  }
                  for (std::size_t k = 0; k <= cl.size(); ++k)
                    e.prefixes.insert(CanonLin(cl.begin(), cl.begin() + k));
                  return true;
                });
  return e;
}

struct Candidate {
  int first_pid = -1;
  Trace full;
};

// Deterministic completions of the current node: for each enabled first step,
// three schedules (same process as long as possible / ascending / descending).
std::vector<Candidate> completions(const Runner& at, const RunLimits& lim, int n) {
  std::vector<Candidate> out;
  std::set<std::string> seen;
  for (int p = 0; p < n; ++p) {
    if (!at.enabled(p, lim)) continue;
    for (int variant = 0; variant < 3; ++variant) {
      Runner rc = at;
      rc.step(p);
      bool okrun = true;
      while (!rc.quiescent()) {
        int pick = -1;
        if (variant == 0 && rc.enabled(p, lim)) pick = p;
        if (pick < 0 && variant == 2) {
          for (int q = n - 1; q >= 0; --q)
            if (rc.enabled(q, lim)) {
              pick = q;
              break;
            }
        }
        if (pick < 0) {
          for (int q = 0; q < n; ++q)
            if (rc.enabled(q, lim)) {
              pick = q;
              break;
            }
        }
        if (pick < 0 || rc.steps() >= lim.max_steps) {
          okrun = false;  // dead end under the loop caps: not a usable extension
          break;
        }
        rc.step(pick);
      }
      if (!okrun) continue;
      std::string sig = rc.trace().to_text();
      if (seen.insert(std::move(sig)).second)
        out.push_back({p, rc.trace()});
    }
  }
  return out;
}

// Attempts to package a witness at the game's current node: two completed
// extensions whose surviving-linearization sets are disjoint. Prefers
// extensions that diverge in their first scheduled process.
bool package_at(Game& g, SlWitness* w) {
  const int alpha_len = g.runner().steps();
  const std::vector<LinCommit> lins = g.lins_here();
  const std::vector<Candidate> cands =
      completions(g.runner(), g.limits(), g.n());
  if (cands.size() < 2) return false;

  std::vector<Evidence> evs;
  evs.reserve(cands.size());
  for (const Candidate& cd : cands)
    evs.push_back(evidence_of(cd.full, g.spec(), g.cap(), g.universe()));

  auto surviving = [&](const Evidence& ev) {
    std::vector<CanonLin> out;
    for (const LinCommit& lc : lins)
      if (ev.prefixes.count(lc.canon)) out.push_back(lc.canon);
    return out;
  };
  std::vector<std::vector<CanonLin>> surv;
  surv.reserve(cands.size());
  for (const Evidence& ev : evs) surv.push_back(surviving(ev));

  auto disjoint = [](const std::vector<CanonLin>& a,
                     const std::vector<CanonLin>& b) {
    std::set<CanonLin> sa(a.begin(), a.end());
    for (const CanonLin& x : b)
      if (sa.count(x)) return false;
    return true;
  };

  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < cands.size(); ++i) {
      for (std::size_t j = i + 1; j < cands.size(); ++j) {
        const bool differ = cands[i].first_pid != cands[j].first_pid;
        if (pass == 0 && !differ) continue;  // first steps diverging preferred
        if (pass == 1 && differ) continue;
        if (!disjoint(surv[i], surv[j])) continue;
        w->full1 = cands[i].full;
        w->full2 = cands[j].full;
        w->alpha_len = alpha_len;
        w->l1 = surv[i];
        w->l2 = surv[j];
        for (Trace* t : {&w->full1, &w->full2}) {
          t->has_witness = true;
          t->witness_alpha = alpha_len;
          t->witness_p1 = w->full1.events[alpha_len].pid;
          t->witness_p2 = w->full2.events[alpha_len].pid;
        }
        return true;
      }
    }
  }
  return false;
}

}  // namespace

SlResult find_sl_violation(const Workload& wl, SpecKind spec,
                           const RunLimits& lim) {
  wl.validate();
  if (wl.num_processes() > kMaxP)
    throw UsageError("strong-linearizability check supports at most 8 processes");
  int cap = 0;
  if (spec == SpecKind::BoundedBag)
    cap = (wl.algorithm == AlgorithmId::SlBounded) ? wl.b : 1;

  Game g(wl, spec, cap, lim);
  const bool root_win = g.win(Commit{});

  SlResult res;
  res.nodes = g.nodes();
  if (g.hit_ceiling()) {
    res.verdict = SlVerdict::Inconclusive;
    res.note = "game-state ceiling reached before a verdict";
    return res;
  }
  if (root_win) {
    res.verdict = SlVerdict::None;
    return res;
  }
  res.verdict = SlVerdict::Violation;

  // Descend to a minimal infeasible prefix: while some child also admits no
  // surviving linearization, move there (processes tried in pid order).
  Runner& r = g.runner();
  std::vector<int> path;
  for (;;) {
    if (r.steps() >= lim.max_steps) break;
    int move = -1;
    for (int p = 0; p < g.n(); ++p) {
      if (!r.enabled(p, lim)) continue;
      Runner::Undo u = r.step_undoable(p);
      const bool child_empty = !g.feasible();
      r.undo(u);
      if (child_empty) {
        move = p;
        break;
      }
    }
    if (move < 0) break;
    path.push_back(move);
    r.step(move);
  }

  // Package at the minimal node; if its completions do not separate, retry at
  // each ancestor along the descent path (the infeasibility persists there).
  if (package_at(g, &res.witness)) {
    res.nodes = g.nodes();
    return res;
  }
  while (!path.empty()) {
    path.pop_back();
    Runner fresh(wl);
    for (int p : path) fresh.step(p);
    r = fresh;
    if (package_at(g, &res.witness)) {
      res.nodes = g.nodes();
      return res;
    }
  }
  res.note = "violation proven but no pair of completions separated cleanly";
  res.nodes = g.nodes();
  return res;
}

SlResult witness_at(const Workload& wl, SpecKind spec, const RunLimits& lim,
                    const std::vector<int>& alpha_schedule) {
  wl.validate();
  if (wl.num_processes() > kMaxP)
    throw UsageError("strong-linearizability check supports at most 8 processes");
  int cap = 0;
  if (spec == SpecKind::BoundedBag)
    cap = (wl.algorithm == AlgorithmId::SlBounded) ? wl.b : 1;

  Game g(wl, spec, cap, lim);
  for (int pid : alpha_schedule) {
    if (!g.runner().enabled(pid, lim))
      throw UsageError("scripted prefix schedules a process that is not enabled");
    g.runner().step(pid);
  }

  SlResult res;
  if (g.feasible()) {
    res.nodes = g.nodes();
    if (g.hit_ceiling()) {
      res.verdict = SlVerdict::Inconclusive;
      res.note = "game-state ceiling reached before a verdict";
    } else {
      res.verdict = SlVerdict::None;
      res.note = "some linearization of the prefix survives every future";
    }
    return res;
  }
  res.nodes = g.nodes();
  if (g.hit_ceiling()) {
    res.verdict = SlVerdict::Inconclusive;
    res.note = "game-state ceiling reached before a verdict";
    return res;
  }
  res.verdict = SlVerdict::Violation;
  if (!package_at(g, &res.witness))
    res.note = "violation proven but no pair of completions separated cleanly";
  res.nodes = g.nodes();
  return res;
}

SlResult find_sl_violation_sets(const Workload& wl, SpecKind spec,
                                const RunLimits& lim) {
  wl.validate();
  if (wl.num_processes() > kMaxP)
    throw UsageError("strong-linearizability check supports at most 8 processes");
  int cap = 0;
  if (spec == SpecKind::BoundedBag)
    cap = (wl.algorithm == AlgorithmId::SlBounded) ? wl.b : 1;
  const SpecUniverse uni = SpecUniverse::from_workload(wl);
  const int n = wl.num_processes();

  Runner r(wl);
  unsigned long long nodes = 0;
  bool ceiling = false;

  // Canonical linearizations of the history at the runner's current node.
  auto lins_here = [&] {
    std::set<CanonLin> out;
    const Trace& tr = r.trace();
    linearize_all(spec, cap, uni, tr.ops, /*include_pending=*/true,
                  [&](const LinOrder& lo) {
                    CanonLin cl;
                    cl.reserve(lo.order.size());
                    for (std::size_t i = 0; i < lo.order.size(); ++i) {
                      const OpRecord& rec = tr.ops[lo.order[i]];
                      cl.push_back(canon_elem(rec.pid, rec.op_seq, lo.resps[i]));
                    }
                    out.insert(std::move(cl));
                    return true;
                  });
    return out;
  };

  // The definition, executed directly: the feasible set of a node is the set
  // of linearizations of its history that extend, in every child, to some
  // member of that child's feasible set.
  std::function<std::set<CanonLin>()> feas = [&]() -> std::set<CanonLin> {
    ++nodes;
    if (lim.node_ceiling >= 0 &&
        static_cast<long long>(nodes) > lim.node_ceiling) {
      ceiling = true;
      return lins_here();
    }
    std::set<CanonLin> mine = lins_here();
    if (r.steps() >= lim.max_steps) return mine;
    for (int p = 0; p < n && !mine.empty(); ++p) {
      if (!r.enabled(p, lim)) continue;
      Runner::Undo u = r.step_undoable(p);
      const std::set<CanonLin> child = feas();
      r.undo(u);
      std::set<CanonLin> child_prefixes;
      for (const CanonLin& cl : child)
        for (std::size_t k = 0; k <= cl.size(); ++k)
          child_prefixes.insert(CanonLin(cl.begin(), cl.begin() + k));
      for (auto it = mine.begin(); it != mine.end();)
        it = child_prefixes.count(*it) ? std::next(it) : mine.erase(it);
    }
    return mine;
  };

  const std::set<CanonLin> root = feas();
  SlResult res;
  res.nodes = nodes;
  if (ceiling) {
    res.verdict = SlVerdict::Inconclusive;
    res.note = "tree-node ceiling reached before a verdict";
    return res;
  }
  res.verdict = root.empty() ? SlVerdict::Violation : SlVerdict::None;
  res.note = "reference checker: verdict only, no witness packaging";
  return res;
}

}  // namespace slbag
