#pragma once

#include <array>
#include <string>
#include <vector>

#include "slbag/machine.hpp"
#include "slbag/workload.hpp"

namespace slbag {

/// One shared-memory step as recorded in a trace. `slot` and the `extra`
/// snapshots are simulator-side conveniences; the serialized form carries the
/// object identity by name and is reconstructed by replaying.
struct Event {
  int seq = -1;
  int pid = -1;
  Line line = Line::None;
  int slot = -1;
  ObjMeta obj;
  PrimAction action = PrimAction::Read;
  PrimValue arg, resp;
  int op_seq = -1;       // per-process operation ordinal, 0-based
  bool invoked = false;  // first step of its operation
  bool completed = false;
  int extra_n = 0;
  std::array<std::pair<int, PrimValue>, 2> extra{};
};

/// Operation boundary record. invoke_seq is the operation's first step;
/// complete_seq its last (-1 while pending). Real-time order: op1 precedes
/// op2 iff op1.complete_seq < op2.invoke_seq.
struct OpRecord {
  int pid = -1;
  int op_seq = -1;
  OpRequest req;
  OpResponse resp;  // meaningful only when completed
  int invoke_seq = -1;
  int complete_seq = -1;

  bool completed() const { return complete_seq >= 0; }
};

/// A finished or partial execution: workload, the step sequence, and the
/// operation boundaries. Serialized line format:
///   header:  <algorithm> <n> <b> <chooser> <seed>
///   events:  <seq> <pid> <line> <object> <action> <arg> <response>
///   bounds:  OP <pid> <op_seq> <request> <response|-> <invoke_seq> <complete_seq|->
///   witness: WITNESS <alpha_len> <pid1> <pid2>            (optional)
/// Absent fields are "-", the empty-cell sentinel is "_". Parsing a trace
/// reconstructs the workload's request lists from the OP records (operations
/// never begun are not part of a trace).
struct Trace {
  Workload wl;
  std::vector<Event> events;
  std::vector<OpRecord> ops;  // sorted by (pid, op_seq)
  bool has_witness = false;
  int witness_alpha = 0;  // length of the shared prefix
  int witness_p1 = -1, witness_p2 = -1;  // first scheduled pid of each extension

  /// Index into ops for (pid, op_seq), or -1.
  int op_index(int pid, int op_seq) const;

  std::string to_text() const;
  static Trace from_text(const std::string& text);
};

/// The execution after only the first `nevents` steps: operations completing
/// later become pending, operations invoked later are dropped.
Trace trace_prefix(const Trace& tr, int nevents);

}  // namespace slbag
