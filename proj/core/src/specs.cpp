#include "slbag/specs.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include "slbag/hashkey.hpp"

namespace slbag {

std::string spec_token(SpecKind kind) {
  switch (kind) {
    case SpecKind::Bag: return "bag";
    case SpecKind::BoundedBag: return "bounded-bag";
    case SpecKind::Queue: return "queue";
  }
  throw std::logic_error("spec_token: bad kind");
}

// ---------------------------------------------------------------------------
// Universe

int SpecUniverse::id_of(Value v) const {
  for (size_t i = 0; i < values.size(); ++i)
    if (values[i] == v) return static_cast<int>(i);
  return -1;
}

SpecUniverse SpecUniverse::from_values(std::vector<Value> vals) {
  SpecUniverse uni;
  uni.values = std::move(vals);
  if (uni.values.size() > 16)
    throw UsageError("spec universe limited to 16 distinct values, got " +
                     std::to_string(uni.values.size()));
  for (size_t i = 0; i < uni.values.size(); ++i)
    for (size_t j = i + 1; j < uni.values.size(); ++j)
      if (uni.values[i] == uni.values[j])
        throw UsageError("spec universe has duplicate value " + std::to_string(uni.values[i]));
  return uni;
}

SpecUniverse SpecUniverse::from_workload(const Workload& wl) {
  std::vector<Value> vals;
  for (const auto& procs : wl.requests)
    for (const auto& req : procs)
      if (req.is_insert) vals.push_back(req.value);
  return from_values(std::move(vals));
}

int SpecState::size() const {
  // Exactly one representation is populated per spec kind, so the sum is
  // the element count either way.
  return mask_count(bag) + queue_len;
}

// ---------------------------------------------------------------------------
// Transitions

namespace {

// Queue helpers over the nibble packing (front at the low nibble).
SpecState queue_push(const SpecState& s, int id) {
  if (s.queue_len >= 16) throw std::logic_error("queue spec state overflow");
  SpecState next = s;
  next.queue |= static_cast<uint64_t>(id) << (4 * s.queue_len);
  next.queue_len = static_cast<uint8_t>(s.queue_len + 1);
  return next;
}

bool queue_contains(const SpecState& s, int id) {
  for (int k = 0; k < s.queue_len; ++k)
    if (static_cast<int>((s.queue >> (4 * k)) & 0xF) == id) return true;
  return false;
}

}  // namespace

std::vector<SpecBranch> spec_apply(SpecKind kind, int capacity, const SpecUniverse& uni,
                                   const SpecState& state, const OpRequest& req) {
  std::vector<SpecBranch> out;
  if (req.is_insert) {
    int id = uni.id_of(req.value);
    if (id < 0)
      throw UsageError("spec_apply: insert value " + std::to_string(req.value) +
                       " not in the declared universe");
    if (kind == SpecKind::Queue) {
      // Re-inserting a value that is still queued would conflate two copies
      // under the packed representation; the no-value-repetition assumption
      // rules it out, so such a sequence simply has no legal continuation.
      if (queue_contains(state, id)) return out;
      out.push_back({OpResponse::ok(), queue_push(state, id)});
      return out;
    }
    if (mask_has(state.bag, id + 1)) return out;  // same repetition guard
    if (kind == SpecKind::BoundedBag && mask_count(state.bag) >= capacity) {
      out.push_back({OpResponse::full(), state});
      return out;
    }
    SpecState next = state;
    next.bag |= mask_bit(id + 1);
    out.push_back({OpResponse::ok(), next});
    return out;
  }

  // Take / dequeue.
  if (kind == SpecKind::Queue) {
    if (state.queue_len == 0) {
      out.push_back({OpResponse::empty(), state});
      return out;
    }
    int id = static_cast<int>(state.queue & 0xF);
    SpecState next = state;
    next.queue >>= 4;
    next.queue_len = static_cast<uint8_t>(state.queue_len - 1);
    out.push_back({OpResponse::taken(uni.values[id]), next});
    return out;
  }
  if (state.bag == 0) {
    out.push_back({OpResponse::empty(), state});
    return out;
  }
  for (CellMask rest = state.bag; rest != 0;) {
    int slot = mask_min(rest);  // 1-based position of a set bit
    rest &= ~mask_bit(slot);
    SpecState next = state;
    next.bag &= ~mask_bit(slot);
    out.push_back({OpResponse::taken(uni.values[slot - 1]), next});
  }
  return out;
}

bool is_legal(SpecKind kind, int capacity, const SpecUniverse& uni,
              const std::vector<std::pair<OpRequest, OpResponse>>& seq) {
  // Each (request, response) pair selects at most one branch — take branches
  // carry distinct values and OK/FULL/EMPTY are singletons — so a single
  // rolling state suffices.
  SpecState state;
  for (const auto& [req, resp] : seq) {
    bool matched = false;
    for (const auto& br : spec_apply(kind, capacity, uni, state, req)) {
      if (br.resp == resp) {
        state = br.next;
        matched = true;
        break;
      }
    }
    if (!matched) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Linearizability

namespace {

// Backtracking search shared by `linearizable` (memoized, first witness) and
// `linearize_all` (exhaustive enumeration of every complete linearization).
struct LinSearch {
  SpecKind kind;
  int capacity;
  const SpecUniverse& uni;
  const std::vector<OpRecord>& ops;
  SpecState initial;

  uint32_t completed_mask = 0;
  std::vector<uint32_t> preds;  // preds[j]: ops that must precede op j

  uint64_t nodes = 0;
  int64_t node_ceiling = -1;

  // Witness under construction.
  LinOrder cur;

  // linearizable mode
  Key128Map<char> failed;
  LinOrder witness;

  // linearize_all mode
  const std::function<bool(const LinOrder&)>* visit = nullptr;
  bool include_pending = true;

  enum class Outcome { Found, Exhausted, Aborted };

  LinSearch(SpecKind k, int cap, const SpecUniverse& u, const std::vector<OpRecord>& o)
      : kind(k), capacity(cap), uni(u), ops(o) {
    if (ops.size() > 32) throw UsageError("linearizability check limited to 32 operations");
    for (size_t j = 0; j < ops.size(); ++j) {
      uint32_t pred = 0;
      for (size_t i = 0; i < ops.size(); ++i) {
        if (i == j) continue;
        if (ops[i].completed() && ops[j].invoke_seq >= 0 &&
            ops[i].complete_seq < ops[j].invoke_seq)
          pred |= 1u << i;
        // Data dependency from the distinct-values assumption: a Take that
        // returned v can only follow the Insert of v.
        if (ops[j].completed() && ops[j].resp.kind == OpResponse::Kind::Taken &&
            ops[i].req.is_insert && ops[i].req.value == ops[j].resp.value)
          pred |= 1u << i;
      }
      preds.push_back(pred);
      if (ops[j].completed()) completed_mask |= 1u << j;
    }
  }

  Key128 state_key(uint32_t placed, const SpecState& s) const {
    char buf[17];
    std::memcpy(buf, &placed, 4);
    std::memcpy(buf + 4, &s.bag, 4);
    std::memcpy(buf + 8, &s.queue, 8);
    buf[16] = static_cast<char>(s.queue_len);
    return hash128(std::string(buf, sizeof buf));
  }

  // First-witness search with failed-state memoization.
  Outcome search(uint32_t placed, const SpecState& state) {
    ++nodes;
    if (node_ceiling >= 0 && nodes > static_cast<uint64_t>(node_ceiling))
      return Outcome::Aborted;
    if ((completed_mask & ~placed) == 0) {
      witness = cur;  // every remaining op is pending and may be excluded
      return Outcome::Found;
    }
    Key128 key = state_key(placed, state);
    if (failed.find(key)) return Outcome::Exhausted;
    for (size_t j = 0; j < ops.size(); ++j) {
      if (placed & (1u << j)) continue;
      if (preds[j] & ~placed) continue;
      for (const auto& br : spec_apply(kind, capacity, uni, state, ops[j].req)) {
        if (ops[j].completed() && !(br.resp == ops[j].resp)) continue;
        cur.order.push_back(static_cast<int>(j));
        cur.resps.push_back(br.resp);
        Outcome sub = search(placed | (1u << j), br.next);
        cur.order.pop_back();
        cur.resps.pop_back();
        if (sub != Outcome::Exhausted) return sub;
      }
    }
    failed.emplace(key, 1);
    return Outcome::Exhausted;
  }

  // Full enumeration: report every node where all completed ops are placed,
  // then keep extending with pending ops (longer linearizations are distinct).
  bool enumerate(uint32_t placed, const SpecState& state) {
    ++nodes;
    if ((completed_mask & ~placed) == 0) {
      if (!(*visit)(cur)) return false;
    }
    for (size_t j = 0; j < ops.size(); ++j) {
      if (placed & (1u << j)) continue;
      if (preds[j] & ~placed) continue;
      if (!include_pending && !ops[j].completed()) continue;
      for (const auto& br : spec_apply(kind, capacity, uni, state, ops[j].req)) {
        if (ops[j].completed() && !(br.resp == ops[j].resp)) continue;
        cur.order.push_back(static_cast<int>(j));
        cur.resps.push_back(br.resp);
        bool keep = enumerate(placed | (1u << j), br.next);
        cur.order.pop_back();
        cur.resps.pop_back();
        if (!keep) return false;
      }
    }
    return true;
  }
};

}  // namespace

LinResult linearizable(SpecKind kind, int capacity, const SpecUniverse& uni,
                       const std::vector<OpRecord>& ops, int64_t node_ceiling,
                       const SpecState& initial) {
  LinSearch s(kind, capacity, uni, ops);
  s.node_ceiling = node_ceiling;
  LinResult res;
  switch (s.search(0, initial)) {
    case LinSearch::Outcome::Found:
      res.verdict = LinVerdict::Yes;
      res.witness = s.witness;
      break;
    case LinSearch::Outcome::Exhausted: res.verdict = LinVerdict::No; break;
    case LinSearch::Outcome::Aborted: res.verdict = LinVerdict::Inconclusive; break;
  }
  res.nodes = s.nodes;
  return res;
}

void linearize_all(SpecKind kind, int capacity, const SpecUniverse& uni,
                   const std::vector<OpRecord>& ops, bool include_pending,
                   const std::function<bool(const LinOrder&)>& visit) {
  LinSearch s(kind, capacity, uni, ops);
  s.visit = &visit;
  s.include_pending = include_pending;
  s.enumerate(0, SpecState{});
}

}  // namespace slbag
