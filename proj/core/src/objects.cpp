#include "slbag/objects.hpp"

#include <charconv>

namespace slbag {

std::string mask_to_token(CellMask m) {
  std::string out = "{";
  bool first = true;
  for (int i = mask_min(m); i != 0; i = mask_next(m, i)) {
    if (!first) out += ',';
    out += std::to_string(i);
    first = false;
  }
  out += '}';
  return out;
}

CellMask mask_from_token(const std::string& tok) {
  if (tok.size() < 2 || tok.front() != '{' || tok.back() != '}')
    throw UsageError("bad index-set token: " + tok);
  CellMask m = 0;
  std::size_t pos = 1;
  while (pos < tok.size() - 1) {
    std::size_t end = tok.find(',', pos);
    if (end == std::string::npos || end > tok.size() - 1) end = tok.size() - 1;
    int idx = 0;
    auto [p, ec] = std::from_chars(tok.data() + pos, tok.data() + end, idx);
    if (ec != std::errc{} || p != tok.data() + end || idx < 1 || idx > 32)
      throw UsageError("bad index-set token: " + tok);
    m |= mask_bit(idx);
    pos = end + 1;
  }
  return m;
}

std::string to_token(const PrimValue& v) {
  switch (v.tag) {
    case PrimValue::Tag::None: return "-";
    case PrimValue::Tag::Scalar: return v.scalar == kBottom ? "_" : std::to_string(v.scalar);
    case PrimValue::Tag::Boolean: return v.flag ? "true" : "false";
    case PrimValue::Tag::Set: return mask_to_token(v.set);
  }
  return "-";
}

PrimValue prim_from_token(const std::string& tok) {
  if (tok == "-") return PrimValue::none();
  if (tok == "_") return PrimValue::of(kBottom);
  if (tok == "true") return PrimValue::boolean(true);
  if (tok == "false") return PrimValue::boolean(false);
  if (!tok.empty() && tok.front() == '{') return PrimValue::of_set(mask_from_token(tok));
  Value v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size())
    throw UsageError("bad value token: " + tok);
  return PrimValue::of(v);
}

const char* action_token(PrimAction a) {
  switch (a) {
    case PrimAction::Read: return "read";
    case PrimAction::Write: return "write";
    case PrimAction::Tas: return "t&s";
    case PrimAction::Reset: return "reset";
    case PrimAction::Fai: return "f&i";
    case PrimAction::DWrite: return "dWrite";
    case PrimAction::DRead: return "dRead";
  }
  return "?";
}

PrimAction action_from_token(const std::string& tok) {
  if (tok == "read") return PrimAction::Read;
  if (tok == "write") return PrimAction::Write;
  if (tok == "t&s") return PrimAction::Tas;
  if (tok == "reset") return PrimAction::Reset;
  if (tok == "f&i") return PrimAction::Fai;
  if (tok == "dWrite") return PrimAction::DWrite;
  if (tok == "dRead") return PrimAction::DRead;
  throw UsageError("bad action token: " + tok);
}

bool action_legal(ObjectKind kind, PrimAction a) {
  switch (kind) {
    case ObjectKind::Register:
      return a == PrimAction::Read || a == PrimAction::Write;
    case ObjectKind::TestAndSet:
      return a == PrimAction::Tas;
    case ObjectKind::ResettableTas:
      return a == PrimAction::Tas || a == PrimAction::Reset || a == PrimAction::Read;
    case ObjectKind::FetchIncrement:
      return a == PrimAction::Fai || a == PrimAction::Read;
    case ObjectKind::AbaRegister:
      return a == PrimAction::DWrite || a == PrimAction::DRead;
  }
  return false;
}

ObjectState ObjectState::make_register(Value init) {
  ObjectState s;
  s.kind = ObjectKind::Register;
  s.reg_scalar = init;
  return s;
}

ObjectState ObjectState::make_set_register(CellMask init) {
  ObjectState s;
  s.kind = ObjectKind::Register;
  s.reg_is_set = true;
  s.reg_set = init;
  return s;
}

ObjectState ObjectState::make_tas(int bit, bool resettable) {
  ObjectState s;
  s.kind = resettable ? ObjectKind::ResettableTas : ObjectKind::TestAndSet;
  s.bit = static_cast<std::uint8_t>(bit);
  return s;
}

ObjectState ObjectState::make_fai(Value init) {
  ObjectState s;
  s.kind = ObjectKind::FetchIncrement;
  s.count = init;
  return s;
}

ObjectState ObjectState::make_aba() {
  ObjectState s;
  s.kind = ObjectKind::AbaRegister;
  s.last_seen.fill(-1);
  return s;
}

PrimValue apply_primitive(ObjectState& st, PrimAction a, int actor, const PrimValue& arg) {
  if (!action_legal(st.kind, a))
    throw UsageError(std::string("action ") + action_token(a) + " illegal for object kind");
  if (actor < 0 || actor >= kMaxProcs) throw UsageError("actor id out of range");

  switch (a) {
    case PrimAction::Read:
      if (st.kind == ObjectKind::Register)
        return st.reg_is_set ? PrimValue::of_set(st.reg_set) : PrimValue::of(st.reg_scalar);
      if (st.kind == ObjectKind::ResettableTas) return PrimValue::of(st.bit);
      return PrimValue::of(st.count);  // FetchIncrement

    case PrimAction::Write:
      if (st.reg_is_set) {
        if (arg.tag != PrimValue::Tag::Set) throw UsageError("set register written with non-set value");
        st.reg_set = arg.set;
      } else {
        if (arg.tag != PrimValue::Tag::Scalar) throw UsageError("register written with non-scalar value");
        if (arg.scalar < kBottom) throw UsageError("register written out-of-universe value");
        st.reg_scalar = arg.scalar;
      }
      return PrimValue::none();

    case PrimAction::Tas: {
      // Sets the bit and returns its previous contents; 0 means the caller won.
      PrimValue prev = PrimValue::of(st.bit);
      st.bit = 1;
      return prev;
    }

    case PrimAction::Reset:
      st.bit = 0;
      return PrimValue::none();

    case PrimAction::Fai: {
      PrimValue prev = PrimValue::of(st.count);
      st.count += 1;
      return prev;
    }

    case PrimAction::DWrite:
      st.write_epoch += 1;
      return PrimValue::none();

    case PrimAction::DRead: {
      // True iff this process has dRead before and some dWrite happened since
      // its last dRead. Either way the current epoch becomes its watermark.
      bool seen_before = st.last_seen[actor] >= 0;
      bool fresh_write = seen_before &&
                         st.write_epoch > static_cast<std::uint32_t>(st.last_seen[actor]);
      st.last_seen[actor] = static_cast<std::int32_t>(st.write_epoch);
      return PrimValue::boolean(seen_before ? fresh_write : false);
    }
  }
  throw UsageError("unhandled primitive action");
}

const char* obj_name_token(ObjName n) {
  switch (n) {
    case ObjName::Items: return "Items";
    case ObjName::TS: return "TS";
    case ObjName::Max: return "Max";
    case ObjName::Allocated: return "Allocated";
    case ObjName::Done: return "Done";
    case ObjName::Hazards: return "Hazards";
    case ObjName::InsertDone: return "InsertDone";
    case ObjName::TakeDone: return "TakeDone";
  }
  return "?";
}

std::string obj_token(const ObjMeta& m) {
  std::string out = obj_name_token(m.name);
  if (m.index > 0) {
    out += '[';
    out += std::to_string(m.index);
    out += ']';
  }
  return out;
}

}  // namespace slbag
