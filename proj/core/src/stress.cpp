#include "slbag/stress.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cstddef>
#include <memory>
#include <random>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "slbag/specs.hpp"
#include "slbag/trace.hpp"

namespace slbag {
namespace {

std::uint64_t now_ns() {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(
          std::chrono::steady_clock::now().time_since_epoch())
          .count());
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seeded scheduler perturbation: an occasional sched-yield before a
/// primitive access.  On few-core hosts the OS otherwise runs each executor
/// for a full quantum, which makes genuine overlap rare; the yields
/// diversify the interleavings.  They are scheduler hints only — no data
/// crosses threads through them.
struct Jitter {
  std::uint64_t s = 1;
  bool on = true;

  void operator()() {
    if (!on) return;
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    if ((s & 31) == 0) std::this_thread::yield();
  }
};

/// Per-executor context: the jitter stream plus the ABA-detecting registers'
/// per-process watermarks (which live in the reading process, not in the
/// register).
struct ExecCtx {
  int pid = 0;
  Jitter jit;
  std::int64_t seen_insert_done = -1;
  std::int64_t seen_take_done = -1;
};

/// ABA-detecting register over an atomic write counter: dWrite bumps it;
/// dRead reports whether it moved since this process's previous dRead (the
/// first dRead only sets the watermark).
void aba_dwrite(std::atomic<std::int64_t>& epoch) { epoch.fetch_add(1); }

bool aba_dread(std::atomic<std::int64_t>& epoch, std::int64_t& watermark) {
  std::int64_t e = epoch.load();
  bool changed = watermark >= 0 && e > watermark;
  watermark = e;
  return changed;
}

// ---------------------------------------------------------------------------
// Growable-array bag (UNBOUNDED_SL): Items/TS arrays that only ever grow, an
// Allocated fetch&increment handing out fresh cells, and a Done counter that
// lets an unsuccessful scan certify EMPTY.
// ---------------------------------------------------------------------------

class NativeUnboundedSl {
 public:
  explicit NativeUnboundedSl(std::size_t max_cells)
      : items_(max_cells), ts_(max_cells) {
    for (auto& it : items_) it.store(kBottom, std::memory_order_relaxed);
    for (auto& t : ts_) t.store(0, std::memory_order_relaxed);
  }

  OpResponse insert(ExecCtx& c, Value x) {
    c.jit();
    std::int64_t m = allocated_.fetch_add(1) + 1;
    c.jit();
    items_[static_cast<std::size_t>(m - 1)].store(x);
    c.jit();
    done_.fetch_add(1);
    return OpResponse::ok();
  }

  OpResponse take(ExecCtx& c) {
    for (;;) {
      c.jit();
      std::int64_t d = done_.load();
      c.jit();
      std::int64_t m = allocated_.load();
      for (std::int64_t i = 1; i <= m; ++i) {
        c.jit();
        Value x = items_[static_cast<std::size_t>(i - 1)].load();
        if (x != kBottom) {
          c.jit();
          if (ts_[static_cast<std::size_t>(i - 1)].exchange(1) == 0)
            return OpResponse::taken(x);
        }
      }
      c.jit();
      if (d == done_.load()) return OpResponse::empty();
    }
  }

 private:
  std::vector<std::atomic<Value>> items_;
  std::vector<std::atomic<int>> ts_;
  std::atomic<std::int64_t> allocated_{0};
  std::atomic<std::int64_t> done_{0};
};

// ---------------------------------------------------------------------------
// b-bounded single-producer bag (SL_BB): n+b cells, a set-valued Allocated
// register, hazard announcements, and two ABA-detecting registers so both
// sides can certify EMPTY/FULL.
// ---------------------------------------------------------------------------

class NativeBoundedBag {
 public:
  NativeBoundedBag(int n, int b)
      : n_(n), b_(b), items_(static_cast<std::size_t>(n + b)),
        ts_(static_cast<std::size_t>(n + b)), hazards_(static_cast<std::size_t>(n)) {
    for (auto& it : items_) it.store(kBottom, std::memory_order_relaxed);
    for (auto& t : ts_) t.store(0, std::memory_order_relaxed);
    for (auto& h : hazards_) h.store(kBottom, std::memory_order_relaxed);
  }

  /// Producer only.
  OpResponse insert(ExecCtx& c, Value x) {
    c.jit();
    aba_dread(take_done_, c.seen_take_done);
    for (;;) {
      // Reclaim allocated cells whose elements were taken.  The candidate
      // list is fixed at the loop head; reclamation shrinks alloc_ without
      // disturbing the iteration.
      std::uint32_t check = alloc_;
      for (int m = 1; m <= n_ + b_; ++m) {
        if (!(check & bit(m))) continue;
        c.jit();
        if (ts_[static_cast<std::size_t>(m - 1)].load() == 1) {
          c.jit();
          items_[static_cast<std::size_t>(m - 1)].store(kBottom);
          alloc_ &= ~bit(m);
          used_ |= bit(m);
        }
      }
      if (std::popcount(alloc_) < static_cast<unsigned>(b_)) {
        std::uint32_t hazardous = 0;
        for (int i = 1; i <= n_; ++i) {
          c.jit();
          Value h = hazards_[static_cast<std::size_t>(i - 1)].load();
          if (h != kBottom) hazardous |= bit(static_cast<int>(h));
        }
        int m = 0;
        for (int k = 1; k <= n_ + b_; ++k) {
          if (!((alloc_ | hazardous) & bit(k))) {
            m = k;
            break;
          }
        }
        alloc_ |= bit(m);
        c.jit();
        allocated_.store(alloc_);
        std::uint32_t reset = used_ & ~hazardous;
        for (int i = 1; i <= n_ + b_; ++i) {
          if (!(reset & bit(i))) continue;
          c.jit();
          ts_[static_cast<std::size_t>(i - 1)].store(0);
        }
        used_ &= hazardous;
        c.jit();
        items_[static_cast<std::size_t>(m - 1)].store(x);
        c.jit();
        aba_dwrite(insert_done_);
        return OpResponse::ok();
      }
      c.jit();
      if (!aba_dread(take_done_, c.seen_take_done)) return OpResponse::full();
    }
  }

  /// Consumer pid 1..n (its hazard slot).
  OpResponse take(ExecCtx& c) {
    int i = c.pid;
    c.jit();
    aba_dread(insert_done_, c.seen_insert_done);
    for (;;) {
      c.jit();
      std::uint32_t allocated = allocated_.load();
      for (int a = 1; a <= n_ + b_; ++a) {
        if (!(allocated & bit(a))) continue;
        c.jit();
        hazards_[static_cast<std::size_t>(i - 1)].store(a);
        c.jit();
        Value x = items_[static_cast<std::size_t>(a - 1)].load();
        if (x == kBottom) continue;
        c.jit();
        if (ts_[static_cast<std::size_t>(a - 1)].exchange(1) == 0) {
          c.jit();
          hazards_[static_cast<std::size_t>(i - 1)].store(kBottom);
          c.jit();
          aba_dwrite(take_done_);
          return OpResponse::taken(x);
        }
      }
      c.jit();
      hazards_[static_cast<std::size_t>(i - 1)].store(kBottom);
      c.jit();
      if (!aba_dread(insert_done_, c.seen_insert_done)) {
        c.jit();
        aba_dwrite(take_done_);
        return OpResponse::empty();
      }
    }
  }

 private:
  static std::uint32_t bit(int idx) { return 1u << (idx - 1); }

  int n_;
  int b_;
  std::vector<std::atomic<Value>> items_;
  std::vector<std::atomic<int>> ts_;
  std::atomic<std::uint32_t> allocated_{0};
  std::vector<std::atomic<Value>> hazards_;
  std::atomic<std::int64_t> insert_done_{0};
  std::atomic<std::int64_t> take_done_{0};
  // Producer persistent locals; only the producer executor touches them.
  std::uint32_t used_ = 0;
  std::uint32_t alloc_ = 0;
};

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

constexpr int kOpsPerEpoch = 2;  // per executor; window size = 2 * executors

void check_gen(AlgorithmId alg, const StressGen& gen, int executors) {
  if (alg != AlgorithmId::UnboundedSl && alg != AlgorithmId::SlBounded)
    throw UsageError("native stress backend supports UNBOUNDED_SL and SL_BB only");
  if (gen.n < 1) throw UsageError("stress needs n >= 1");
  if (gen.ops_per_process < 1) throw UsageError("stress needs ops_per_process >= 1");
  if (gen.insert_percent < 0 || gen.insert_percent > 100)
    throw UsageError("insert_percent must be within 0..100");
  if (gen.epoch_ns == 0) throw UsageError("epoch_ns must be positive");
  if (alg == AlgorithmId::SlBounded) {
    if (gen.b < 1) throw UsageError("b-bounded bag needs b >= 1");
    if (gen.n + gen.b > 32) throw UsageError("cell masks support at most 32 cells");
  }
  int procs = gen.n + (single_producer(alg) ? 1 : 0);
  if (executors != procs)
    throw UsageError("stress runs one executor per process: expected " +
                     std::to_string(procs) + " executors");
}

/// Spin on the global clock (yielding) until it passes `target`.  Progress
/// depends only on the clock, never on another executor.
void wait_clock(std::uint64_t target) {
  while (now_ns() < target) std::this_thread::yield();
}

template <class ExecOp>
void executor_loop(int pid, const std::vector<OpRequest>& stream, std::uint64_t t0,
                   std::uint64_t epoch_ns, std::vector<StressOp>& out, ExecOp&& exec) {
  out.reserve(stream.size());
  std::size_t idx = 0;
  std::uint64_t epoch = 0;
  while (idx < stream.size()) {
    wait_clock(t0 + epoch * epoch_ns);
    for (int k = 0; k < kOpsPerEpoch && idx < stream.size(); ++k, ++idx) {
      StressOp rec;
      rec.pid = pid;
      rec.req = stream[idx];
      rec.invoke_ns = now_ns();
      rec.resp = exec(stream[idx]);
      rec.complete_ns = now_ns();
      out.push_back(rec);
    }
    ++epoch;
  }
}

// ---------------------------------------------------------------------------
// Offline history checks
// ---------------------------------------------------------------------------

void tally(StressSummary& s) {
  for (const StressOp& op : s.history) {
    ++s.ops;
    switch (op.resp.kind) {
      case OpResponse::Kind::Ok: ++s.inserts_ok; break;
      case OpResponse::Kind::Full: ++s.fulls; break;
      case OpResponse::Kind::Taken: ++s.takes; break;
      case OpResponse::Kind::Empty: ++s.empties; break;
    }
  }
}

void check_accounting(StressSummary& s) {
  std::unordered_map<Value, const StressOp*> inserted;
  for (const StressOp& op : s.history)
    if (op.resp.kind == OpResponse::Kind::Ok) inserted.emplace(op.req.value, &op);
  std::unordered_set<Value> taken;
  for (const StressOp& op : s.history) {
    if (op.resp.kind != OpResponse::Kind::Taken) continue;
    Value v = op.resp.value;
    if (!taken.insert(v).second) {
      ++s.duplicate_takes;
      if (s.note.empty()) s.note = "value " + std::to_string(v) + " taken twice";
      continue;
    }
    auto it = inserted.find(v);
    if (it == inserted.end()) {
      ++s.unsourced_takes;
      if (s.note.empty()) s.note = "value " + std::to_string(v) + " taken but never inserted";
    } else if (op.complete_ns < it->second->invoke_ns) {
      ++s.acausal_takes;
      if (s.note.empty())
        s.note = "value " + std::to_string(v) + " taken before its insert began";
    }
  }
}

/// Checks one window of history ops [a, b) against the sequential spec with
/// `live` as the bag content at the window's opening cut.  Returns false
/// when the window had to be skipped (oversized universe).
bool check_one_window(StressSummary& s, SpecKind kind, int capacity, std::size_t a,
                      std::size_t b, const std::unordered_set<Value>& live,
                      std::int64_t epoch) {
  const auto& h = s.history;

  std::vector<Value> vals(live.begin(), live.end());
  for (std::size_t i = a; i < b; ++i) {
    if (h[i].req.is_insert) vals.push_back(h[i].req.value);
    if (h[i].resp.kind == OpResponse::Kind::Taken) vals.push_back(h[i].resp.value);
  }
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  if (vals.size() > 16) return false;

  SpecUniverse uni = SpecUniverse::from_values(vals);
  SpecState initial;
  for (Value v : live) initial.bag |= 1u << uni.id_of(v);

  // Map clock stamps to the integer-seq convention (op1 precedes op2 iff
  // complete_seq < invoke_seq).  Endpoints sort invocations before
  // completions at an equal stamp, so a tie reads as overlap, never order.
  struct Endpoint {
    std::uint64_t ns;
    int type;  // 0 = invoke, 1 = complete
    std::size_t idx;
  };
  std::vector<Endpoint> pts;
  for (std::size_t i = a; i < b; ++i) {
    pts.push_back({h[i].invoke_ns, 0, i});
    pts.push_back({h[i].complete_ns, 1, i});
  }
  std::sort(pts.begin(), pts.end(), [](const Endpoint& x, const Endpoint& y) {
    if (x.ns != y.ns) return x.ns < y.ns;
    if (x.type != y.type) return x.type < y.type;
    return x.idx < y.idx;
  });
  std::vector<OpRecord> recs(b - a);
  std::unordered_map<int, int> next_seq;
  for (std::size_t i = a; i < b; ++i) {
    OpRecord& r = recs[i - a];
    r.pid = h[i].pid;
    r.op_seq = next_seq[h[i].pid]++;
    r.req = h[i].req;
    r.resp = h[i].resp;
  }
  for (std::size_t k = 0; k < pts.size(); ++k) {
    OpRecord& r = recs[pts[k].idx - a];
    if (pts[k].type == 0) r.invoke_seq = static_cast<int>(k);
    else r.complete_seq = static_cast<int>(k);
  }

  ++s.windows_checked;
  LinResult lr = linearizable(kind, capacity, uni, recs, /*node_ceiling=*/-1, initial);
  if (lr.verdict == LinVerdict::Yes) {
    ++s.windows_passed;
  } else if (s.note.empty()) {
    s.note = "window at epoch " + std::to_string(epoch) + " (ops " + std::to_string(a) +
             ".." + std::to_string(b - 1) + ") not linearizable from its cut state";
  }
  return true;
}

/// Walks the epoch boundaries, finds quiescent cuts, and feeds every full
/// window between adjacent cuts to the spec check.
void check_windows(StressSummary& s, const StressGen& gen, int executors) {
  const std::uint64_t t0 = s.t0_ns;
  SpecKind kind = s.algorithm == AlgorithmId::SlBounded ? SpecKind::BoundedBag : SpecKind::Bag;
  int capacity = s.algorithm == AlgorithmId::SlBounded ? gen.b : 0;
  const std::size_t window_ops = static_cast<std::size_t>(kOpsPerEpoch) * executors;
  const auto& h = s.history;
  if (h.empty()) return;

  // h is invocation-sorted; running_max[i] = latest completion among the
  // first i+1 ops, so the cut at time T is quiescent iff every op invoked
  // before T (a prefix) also completed by T.
  std::vector<std::uint64_t> running_max(h.size());
  std::uint64_t mx = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    mx = std::max(mx, h[i].complete_ns);
    running_max[i] = mx;
  }
  auto prefix_len = [&](std::uint64_t t) {
    std::size_t lo = 0, hi = h.size();
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (h[mid].invoke_ns < t) lo = mid + 1;
      else hi = mid;
    }
    return lo;
  };

  s.epochs = static_cast<std::int64_t>((running_max.back() - t0) / gen.epoch_ns) + 1;

  // The live set is advanced lazily: it always reflects the bag content at
  // the previous quiescent cut, which is exactly the window's initial state.
  std::unordered_set<Value> live;
  std::size_t cursor = 0;
  std::size_t prev_cut = 0;
  bool prev_valid = false;
  for (std::int64_t e = 0; e <= s.epochs; ++e) {
    std::uint64_t t = t0 + static_cast<std::uint64_t>(e) * gen.epoch_ns;
    std::size_t cut = prefix_len(t);
    bool valid = cut == 0 || running_max[cut - 1] <= t;
    if (!valid) {
      prev_valid = false;
      continue;
    }
    ++s.cuts_valid;
    if (prev_valid && cut > prev_cut) {
      if (cut - prev_cut != window_ops ||
          !check_one_window(s, kind, capacity, prev_cut, cut, live, e))
        ++s.windows_skipped;
    }
    // Advance the live set to this cut.  Inserts land before takes: a take
    // may be invoked before the overlapping insert that feeds it, so a
    // single pass in invocation order would erase the value too early and
    // leak it back in as a phantom.  Every value is inserted and taken at
    // most once, so the two-pass order is exact.
    for (std::size_t i = cursor; i < cut; ++i)
      if (h[i].resp.kind == OpResponse::Kind::Ok) live.insert(h[i].req.value);
    for (std::size_t i = cursor; i < cut; ++i)
      if (h[i].resp.kind == OpResponse::Kind::Taken) live.erase(h[i].resp.value);
    cursor = cut;
    prev_valid = true;
    prev_cut = cut;
  }
}

StressSummary run_iteration(AlgorithmId alg, const StressGen& gen, int executors,
                            int iteration) {
  StressSummary s;
  s.algorithm = alg;
  s.iteration = iteration;
  s.seed = splitmix64(gen.seed + static_cast<std::uint64_t>(iteration));

  std::vector<std::vector<OpRequest>> streams = stress_workload(alg, gen, iteration);
  std::vector<std::vector<StressOp>> records(static_cast<std::size_t>(executors));
  std::vector<ExecCtx> ctxs(static_cast<std::size_t>(executors));
  for (int p = 0; p < executors; ++p) {
    ctxs[static_cast<std::size_t>(p)].pid = p;
    ctxs[static_cast<std::size_t>(p)].jit.s =
        splitmix64(s.seed ^ (0x9e37u + static_cast<std::uint64_t>(p)));
    ctxs[static_cast<std::size_t>(p)].jit.on = gen.jitter;
  }

  std::size_t total_ops = 0;
  for (const auto& st : streams) total_ops += st.size();

  auto wall0 = std::chrono::steady_clock::now();
  std::uint64_t t0 = now_ns() + 1'000'000;  // all executors see the same epoch grid
  s.t0_ns = t0;

  std::vector<std::thread> threads;
  if (alg == AlgorithmId::UnboundedSl) {
    auto obj = std::make_unique<NativeUnboundedSl>(total_ops + 1);
    for (int p = 0; p < executors; ++p) {
      threads.emplace_back([&, p] {
        auto& c = ctxs[static_cast<std::size_t>(p)];
        executor_loop(p, streams[static_cast<std::size_t>(p)], t0, gen.epoch_ns,
                      records[static_cast<std::size_t>(p)], [&](const OpRequest& rq) {
                        return rq.is_insert ? obj->insert(c, rq.value) : obj->take(c);
                      });
      });
    }
    for (auto& th : threads) th.join();
  } else {
    auto obj = std::make_unique<NativeBoundedBag>(gen.n, gen.b);
    for (int p = 0; p < executors; ++p) {
      threads.emplace_back([&, p] {
        auto& c = ctxs[static_cast<std::size_t>(p)];
        executor_loop(p, streams[static_cast<std::size_t>(p)], t0, gen.epoch_ns,
                      records[static_cast<std::size_t>(p)], [&](const OpRequest& rq) {
                        return rq.is_insert ? obj->insert(c, rq.value) : obj->take(c);
                      });
      });
    }
    for (auto& th : threads) th.join();
  }
  s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();

  for (auto& r : records)
    s.history.insert(s.history.end(), r.begin(), r.end());
  stress_audit(s, gen, executors);
  return s;
}

}  // namespace

void stress_audit(StressSummary& s, const StressGen& gen, int executors) {
  s.ops = s.inserts_ok = s.fulls = s.takes = s.empties = 0;
  s.duplicate_takes = s.unsourced_takes = s.acausal_takes = 0;
  s.epochs = s.cuts_valid = 0;
  s.windows_checked = s.windows_passed = s.windows_skipped = 0;
  s.note.clear();
  std::stable_sort(s.history.begin(), s.history.end(),
                   [](const StressOp& x, const StressOp& y) { return x.invoke_ns < y.invoke_ns; });
  tally(s);
  check_accounting(s);
  check_windows(s, gen, executors);
}

std::vector<std::vector<OpRequest>> stress_workload(AlgorithmId alg, const StressGen& gen,
                                                    int iteration) {
  int procs = gen.n + (single_producer(alg) ? 1 : 0);
  check_gen(alg, gen, procs);
  std::uint64_t seed = splitmix64(gen.seed + static_cast<std::uint64_t>(iteration));

  std::vector<std::vector<OpRequest>> streams(static_cast<std::size_t>(procs));
  for (int p = 0; p < procs; ++p) {
    auto& st = streams[static_cast<std::size_t>(p)];
    st.reserve(static_cast<std::size_t>(gen.ops_per_process));
    std::mt19937_64 rng(splitmix64(seed ^ static_cast<std::uint64_t>(p + 1)));
    std::uniform_int_distribution<int> pct(0, 99);
    Value next_value = static_cast<Value>(p + 1) * 1'000'000;
    for (int k = 0; k < gen.ops_per_process; ++k) {
      bool ins;
      if (single_producer(alg)) {
        ins = p == 0;  // the producer only inserts; consumers only take
      } else {
        ins = pct(rng) < gen.insert_percent;
      }
      if (ins) st.push_back(OpRequest{true, ++next_value});
      else st.push_back(OpRequest{false, 0});
    }
  }
  return streams;
}

std::vector<StressSummary> stress(AlgorithmId alg, const StressGen& gen, int executors,
                                  int iterations) {
  check_gen(alg, gen, executors);
  if (iterations < 1) throw UsageError("stress needs iterations >= 1");
  std::vector<StressSummary> out;
  out.reserve(static_cast<std::size_t>(iterations));
  for (int it = 0; it < iterations; ++it)
    out.push_back(run_iteration(alg, gen, executors, it));
  return out;
}

}  // namespace slbag
