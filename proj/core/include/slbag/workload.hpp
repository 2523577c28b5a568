#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slbag/common.hpp"

namespace slbag {

/// The five bag/queue implementations.
enum class AlgorithmId : std::uint8_t {
  LiQueue,      // growable arrays, f&i Max, bare t&s; the non-SL baseline
  UnboundedSl,  // growable arrays plus the Done counter
  Wf1Bounded,   // wait-free 1-bounded bag with hazard slots
  Sl1Bounded,   // 1-bounded bag plus the ABA-detecting Done register
  SlBounded,    // b-bounded bag with InsertDone/TakeDone ABA registers
};

const char* algorithm_token(AlgorithmId a);
AlgorithmId algorithm_from_token(const std::string& tok);

/// True for the single-producer algorithms (process 0 inserts, 1..n take).
bool single_producer(AlgorithmId a);

struct OpRequest {
  bool is_insert = false;
  Value value = 0;  // insert payload; unused for Take

  bool operator==(const OpRequest&) const = default;
};

struct OpResponse {
  enum class Kind : std::uint8_t { Ok, Full, Empty, Taken };
  Kind kind = Kind::Ok;
  Value value = 0;  // for Taken

  static OpResponse ok() { return {Kind::Ok, 0}; }
  static OpResponse full() { return {Kind::Full, 0}; }
  static OpResponse empty() { return {Kind::Empty, 0}; }
  static OpResponse taken(Value v) { return {Kind::Taken, v}; }
  bool operator==(const OpResponse&) const = default;
};

std::string request_token(const OpRequest& r);   // "I5" / "T"
OpRequest request_from_token(const std::string& tok);
std::string response_token(const OpResponse& r); // "OK" / "FULL" / "EMPTY" / "5"
OpResponse response_from_token(const std::string& tok);

/// Producer index choice among the eligible cells. Smallest is the default;
/// Random picks deterministically from (seed, k-th choose call); Scripted
/// replays a fixed list (each entry must be eligible) and falls back to
/// Smallest when the list runs out.
struct Chooser {
  enum class Policy : std::uint8_t { Smallest, Random, Scripted };
  Policy policy = Policy::Smallest;
  std::uint64_t seed = 0;
  std::vector<std::uint8_t> script;

  /// choose_count is the number of choose events this producer performed
  /// before this one (part of its persistent state, so replays agree).
  int choose(CellMask eligible, int choose_count) const;

  std::string token() const;                       // "smallest" | "random" | "script:2,1"
  static Chooser from_token(const std::string& tok);
  bool operator==(const Chooser&) const = default;
};

/// A finished experiment description: who runs which ops on which instance.
struct Workload {
  AlgorithmId algorithm = AlgorithmId::UnboundedSl;
  int n = 1;  // consumer count for single-producer algorithms, process count otherwise
  int b = 1;  // capacity; meaningful for SlBounded only
  std::vector<std::vector<OpRequest>> requests;  // indexed by process id
  Chooser chooser;
  std::uint64_t seed = 0;

  int num_processes() const { return static_cast<int>(requests.size()); }
  /// Throws UsageError on role violations, duplicate insert values, process
  /// count mismatch, out-of-universe values.
  void validate() const;
};

/// Parses the per-process op list mini-language: "p0:I1,I2;p1:T;p2:T".
std::vector<std::vector<OpRequest>> parse_process_ops(const std::string& text);
std::string format_process_ops(const std::vector<std::vector<OpRequest>>& ops);

}  // namespace slbag
