#include "slbag/fixtures.hpp"

namespace slbag {

namespace {

OpRequest ins(int v) { return OpRequest{true, static_cast<Value>(v)}; }
OpRequest take() { return OpRequest{false, 0}; }

std::vector<int> rep(int pid, int k) { return std::vector<int>(k, pid); }

void append(std::vector<int>& to, const std::vector<int>& more) {
  to.insert(to.end(), more.begin(), more.end());
}

}  // namespace

std::vector<CounterexampleFixture> counterexample_fixtures() {
  std::vector<CounterexampleFixture> out;

  {
    // Growable-array queue as a bag: ins1 and ins2 reserve cells 1 and 2;
    // the take runs a full first loop pass (sees both cells empty), then a
    // partial second pass up to rereading Items[1]; ins1 writes 1 and
    // returns. One continuation lets the take finish alone — it misses the
    // written value and returns EMPTY, forcing it before ins1. In the other,
    // ins2's write lands first and the take returns 2, forcing ins2 before
    // it. No choice made at the prefix survives both futures.
    CounterexampleFixture f;
    f.name = "li-queue-bag";
    f.wl.algorithm = AlgorithmId::LiQueue;
    f.wl.n = 3;
    f.wl.requests = {{ins(1)}, {ins(2)}, {take()}};
    f.alpha = {0, 1, 2, 2, 2, 2, 2, 0};
    f.ext1 = {2};           // take completes alone: EMPTY
    f.ext2 = {1, 2, 2};     // ins2 writes and returns; take reads 2 and wins its t&s
    f.expect = "ext1: take EMPTY before ins1; ext2: take returns 2 after ins2";
    out.push_back(std::move(f));
  }

  {
    // Growable-array bag with the Done counter, read as a queue: both
    // inserts reserve cells, the take reads Done, Allocated=2 and
    // Items[1]=⊥, then both inserts run to completion. Finishing the take
    // alone yields 2 (so ins2 must come first in queue order); letting the
    // two fresh takes finish instead yields 1 then 2 (so ins1 must come
    // first). The committed insert order cannot satisfy both.
    CounterexampleFixture f;
    f.name = "growable-bag-queue";
    f.wl.algorithm = AlgorithmId::UnboundedSl;
    f.wl.n = 5;
    f.wl.requests = {{ins(1)}, {ins(2)}, {take()}, {take()}, {take()}};
    f.alpha = {0, 1, 2, 2, 2, 0, 0, 1, 1};
    f.ext1 = {2, 2};  // the straddling take: reads Items[2]=2, wins its t&s
    std::vector<int> e2 = rep(3, 4);  // second take alone: returns 1
    append(e2, rep(4, 6));            // third take: fails on TS[1], takes 2
    f.ext2 = std::move(e2);
    f.expect = "ext1: straddling take returns 2; ext2: fresh takes return 1 then 2";
    out.push_back(std::move(f));
  }

  {
    // Wait-free 1-bounded bag: ins1 fills cell 1 and completes, tk1 takes 1,
    // tk2 reads Allocated=1 and stalls, ins2 clears cell 1, moves to cell 2,
    // completes. Finishing tk2 alone finds cell 1 empty — EMPTY, before
    // ins2. In the other branch tk3 takes 2, ins3 reuses cell 1 and writes
    // 3, and tk2 then reads 3 from its stale cell — after ins3.
    CounterexampleFixture f;
    f.name = "wf-1-bounded-bag";
    f.wl.algorithm = AlgorithmId::Wf1Bounded;
    f.wl.n = 2;
    f.wl.requests = {{ins(1), ins(2), ins(3)}, {take(), take()}, {take()}};
    f.wl.chooser = Chooser::from_token("script:1,2,1");
    std::vector<int> a = rep(0, 7);  // ins1: check, clear, collect x2, alloc, reset, write
    append(a, rep(1, 5));            // tk1: alloc, hazard, read, t&s, clear -> 1
    append(a, rep(2, 1));            // tk2: reads Allocated = 1
    append(a, rep(0, 7));            // ins2: clears cell 1, takes cell 2, completes
    f.alpha = std::move(a);
    f.ext1 = rep(2, 3);              // tk2 alone: hazard, read ⊥, clear -> EMPTY
    std::vector<int> e2 = rep(1, 5); // tk3: takes 2 from cell 2
    append(e2, rep(0, 7));           // ins3: reuses cell 1, writes 3, completes
    append(e2, rep(2, 4));           // tk2: hazard, reads 3, wins t&s, clear -> 3
    f.ext2 = std::move(e2);
    f.expect = "ext1: tk2 EMPTY before ins2; ext2: tk3 returns 2, tk2 returns 3 after ins3";
    out.push_back(std::move(f));
  }

  return out;
}

}  // namespace slbag
