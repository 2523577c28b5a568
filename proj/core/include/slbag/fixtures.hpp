#pragma once

#include <string>
#include <vector>

#include "slbag/specs.hpp"
#include "slbag/workload.hpp"

namespace slbag {

/// A scripted counterexample: a workload, the shared prefix schedule α, and
/// two scripted continuations whose completed runs admit no common surviving
/// linearization of α's history. `spec` is the sequential object the
/// algorithm fails to be strongly linearizable for; `expect` summarizes the
/// decisive responses, e.g. which take returns EMPTY in one branch and a
/// value in the other.
struct CounterexampleFixture {
  std::string name;
  Workload wl;
  SpecKind spec = SpecKind::Bag;
  std::vector<int> alpha;  // scheduled pids of the shared prefix
  std::vector<int> ext1;   // continuation β1 (α·β1 need not be quiescent)
  std::vector<int> ext2;   // continuation β2
  std::string expect;
};

/// The three scripted schedules showing which algorithms fail strong
/// linearizability and under which spec:
///  - the growable-array queue is not a strongly-linearizable bag,
///  - the growable-array bag with the Done counter is not a strongly-
///    linearizable queue (though it is a linearizable one),
///  - the wait-free 1-bounded bag is not strongly linearizable.
std::vector<CounterexampleFixture> counterexample_fixtures();

}  // namespace slbag
