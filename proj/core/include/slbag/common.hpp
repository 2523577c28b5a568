#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace slbag {

/// Element universe: non-negative integers. kBottom is the reserved "empty
/// cell" sentinel, spelled "_" in trace files.
using Value = std::int64_t;
inline constexpr Value kBottom = -1;

/// Small sets of 1-based cell indices (index i -> bit i-1). Used for the
/// bounded-bag allocation register and the producer-local alloc/used sets.
using CellMask = std::uint32_t;

/// Hard cap on processes per instance (producer + consumers). Keeps process
/// state POD-sized; every supported workload is far below it.
inline constexpr int kMaxProcs = 8;

/// Contract violations (bad arguments, role errors, malformed files).
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline bool mask_has(CellMask m, int idx) { return idx >= 1 && (m >> (idx - 1)) & 1u; }
inline CellMask mask_bit(int idx) { return CellMask{1} << (idx - 1); }
inline int mask_count(CellMask m) { return __builtin_popcount(m); }
/// Smallest index in m, or 0 if empty.
inline int mask_min(CellMask m) { return m ? __builtin_ctz(m) + 1 : 0; }
/// Smallest index in m strictly greater than idx, or 0 if none.
inline int mask_next(CellMask m, int idx) {
  CellMask rest = m & ~((idx >= 1) ? ((mask_bit(idx) << 1) - 1) : 0u);
  return mask_min(rest);
}

std::string mask_to_token(CellMask m);   // "{}" / "{1,3}"
CellMask mask_from_token(const std::string& tok);

/// One argument or response of a primitive step. Scalar covers elements,
/// indices, counter values and kBottom; Set covers index-set registers.
struct PrimValue {
  enum class Tag : std::uint8_t { None, Scalar, Boolean, Set };
  Tag tag = Tag::None;
  Value scalar = 0;
  bool flag = false;
  CellMask set = 0;

  static PrimValue none() { return {}; }
  static PrimValue of(Value v) { PrimValue p; p.tag = Tag::Scalar; p.scalar = v; return p; }
  static PrimValue boolean(bool b) { PrimValue p; p.tag = Tag::Boolean; p.flag = b; return p; }
  static PrimValue of_set(CellMask m) { PrimValue p; p.tag = Tag::Set; p.set = m; return p; }

  bool operator==(const PrimValue&) const = default;
};

/// Token forms: "-" none, "_" bottom, decimal scalar, "true"/"false", "{1,2}".
std::string to_token(const PrimValue& v);
PrimValue prim_from_token(const std::string& tok);

}  // namespace slbag
