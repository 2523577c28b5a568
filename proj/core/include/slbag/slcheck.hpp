#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slbag/sim.hpp"
#include "slbag/specs.hpp"
#include "slbag/trace.hpp"
#include "slbag/workload.hpp"

namespace slbag {

enum class SlVerdict : std::uint8_t { None, Violation, Inconclusive };

/// Canonical (operation, response) sequence. Each element packs
/// (pid << 16) | (op_seq << 8) | (response kind << 4) | taken-value, so the
/// identity of a linearization — including the responses committed for
/// pending operations — is independent of any particular trace's op indices.
using CanonLin = std::vector<std::uint32_t>;
std::uint32_t canon_elem(int pid, int op_seq, const OpResponse& resp);
std::string canon_to_text(const CanonLin& lin);

/// Self-contained violation evidence. full1 = α·β1 and full2 = α·β2 are
/// complete runs sharing the first alpha_len events. l1 collects every
/// linearization of α's history that extends to some linearization of
/// full1's complete history; l2 the same for full2. l1 ∩ l2 = ∅, so no
/// prefix-preserving assignment can choose a linearization at α that
/// survives both futures — any checker can re-derive this from the two
/// traces alone.
struct SlWitness {
  Trace full1, full2;
  int alpha_len = 0;
  std::vector<CanonLin> l1, l2;

  Trace alpha() const;          ///< the shared prefix as a partial trace
  std::string to_text() const;  ///< full1 serialized (carries the WITNESS line)
};

struct SlResult {
  SlVerdict verdict = SlVerdict::Inconclusive;
  SlWitness witness;             ///< populated on Violation
  unsigned long long nodes = 0;  ///< distinct game states (or tree nodes, tier 1)
  std::string note;
};

/// Decides whether the workload's schedule tree admits a prefix-preserving
/// assignment of linearizations under the spec — the defining property of a
/// strongly linearizable implementation, posed as a game: after every
/// scheduler step the assignment may irrevocably append (operation, response)
/// commitments, every operation must be committed by the time it completes,
/// committed responses must match actual ones, and the committed sequence
/// must stay legal. The game is solved by memoized backward induction over
/// merged (machine state, commitment state) nodes, so the full schedule tree
/// is covered at state-graph cost; sound and complete within the limits.
/// Capacity for the bounded-bag spec is taken from the workload.
///
/// On violation the result carries a witness found by descending to a
/// minimal infeasible prefix and packaging two completed extensions with
/// disjoint evidence sets (see SlWitness). `lim.node_ceiling` bounds the
/// distinct game states; exceeding it yields Inconclusive.
SlResult find_sl_violation(const Workload& wl, SpecKind spec, const RunLimits& lim);

/// Reference implementation: explicit feasible-linearization sets computed
/// bottom-up over the literal schedule tree (the definition, executed
/// directly). Exponential — fixture scale only. Returns the same verdict as
/// find_sl_violation; no witness packaging.
SlResult find_sl_violation_sets(const Workload& wl, SpecKind spec, const RunLimits& lim);

/// Packages a witness at a scripted prefix: drives the schedule, verifies
/// that no linearization of the prefix's history survives every future
/// (otherwise returns None with a note), then searches deterministic
/// completions for a disjoint evidence pair. Lets the scripted
/// counterexamples be checked as violation nodes of their trees.
SlResult witness_at(const Workload& wl, SpecKind spec, const RunLimits& lim,
                    const std::vector<int>& alpha_schedule);

}  // namespace slbag
