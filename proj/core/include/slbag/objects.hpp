#pragma once

#include <array>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "slbag/common.hpp"

namespace slbag {

/// Base-object kinds. TestAndSet is the bare t&s object (no read, no reset)
/// used by the growable-array algorithms; ResettableTas additionally supports
/// reset() and read() and is what the bounded algorithms use.
enum class ObjectKind : std::uint8_t {
  Register,
  TestAndSet,
  ResettableTas,
  FetchIncrement,
  AbaRegister,
};

enum class PrimAction : std::uint8_t { Read, Write, Tas, Reset, Fai, DWrite, DRead };

const char* action_token(PrimAction a);
PrimAction action_from_token(const std::string& tok);
bool action_legal(ObjectKind kind, PrimAction a);

/// Full state of one base object; plain data so simulator clones and undo
/// records are raw copies.
struct ObjectState {
  ObjectKind kind = ObjectKind::Register;
  // Register
  bool reg_is_set = false;
  Value reg_scalar = kBottom;
  CellMask reg_set = 0;
  // TestAndSet / ResettableTas
  std::uint8_t bit = 0;
  // FetchIncrement
  Value count = 0;
  // AbaRegister: epoch of the latest dWrite plus, per process, the epoch seen
  // at its last dRead (-1 = never read).
  std::uint32_t write_epoch = 0;
  std::array<std::int32_t, kMaxProcs> last_seen{};

  static ObjectState make_register(Value init);
  static ObjectState make_set_register(CellMask init);
  static ObjectState make_tas(int bit, bool resettable);
  static ObjectState make_fai(Value init);
  static ObjectState make_aba();

  bool operator==(const ObjectState&) const = default;
};

/// Applies one primitive step to an object and returns its response.
/// Throws UsageError if the action is illegal for the kind or the argument is
/// outside the object's value universe.
PrimValue apply_primitive(ObjectState& st, PrimAction a, int actor, const PrimValue& arg);

/// Object names as they appear in trace files ("Items[2]", "Done", ...).
enum class ObjName : std::uint8_t {
  Items, TS, Max, Allocated, Done, Hazards, InsertDone, TakeDone,
};
const char* obj_name_token(ObjName n);

struct ObjMeta {
  ObjName name = ObjName::Items;
  std::int16_t index = 0;  // 0 for scalar objects, 1-based for array cells
};
std::string obj_token(const ObjMeta& m);

/// Flat slot store used by the deterministic simulator: value-copyable, one
/// ObjectState per slot. All mutation goes through apply().
class SimMemory {
 public:
  int add(const ObjMeta& meta, const ObjectState& init) {
    meta_.push_back(meta);
    st_.push_back(init);
    return static_cast<int>(st_.size()) - 1;
  }
  PrimValue apply(int slot, PrimAction a, int actor, const PrimValue& arg) {
    return apply_primitive(st_.at(slot), a, actor, arg);
  }
  const ObjectState& snapshot(int slot) const { return st_.at(slot); }
  ObjectState& state(int slot) { return st_.at(slot); }
  const ObjMeta& meta(int slot) const { return meta_.at(slot); }
  int size() const { return static_cast<int>(st_.size()); }
  /// Drops slots added after new_size; used to unwind growable-array growth.
  void truncate(int new_size) {
    st_.resize(new_size);
    meta_.resize(new_size);
  }

 private:
  std::vector<ObjectState> st_;
  std::vector<ObjMeta> meta_;
};

/// Same slot layout for the native-parallel backend: each apply() is one
/// locked transition, so concurrent executors interleave at base-object
/// granularity exactly like the formal model.
class LockedMemory {
 public:
  int add(const ObjMeta& meta, const ObjectState& init) {
    meta_.push_back(meta);
    st_.push_back(init);
    mu_.push_back(std::make_unique<std::mutex>());
    return static_cast<int>(st_.size()) - 1;
  }
  PrimValue apply(int slot, PrimAction a, int actor, const PrimValue& arg) {
    std::lock_guard<std::mutex> g(*mu_.at(slot));
    return apply_primitive(st_.at(slot), a, actor, arg);
  }
  ObjectState snapshot(int slot) {
    std::lock_guard<std::mutex> g(*mu_.at(slot));
    return st_.at(slot);
  }
  const ObjMeta& meta(int slot) const { return meta_.at(slot); }
  int size() const { return static_cast<int>(st_.size()); }

 private:
  std::vector<ObjectState> st_;
  std::vector<ObjMeta> meta_;
  std::vector<std::unique_ptr<std::mutex>> mu_;
};

}  // namespace slbag
