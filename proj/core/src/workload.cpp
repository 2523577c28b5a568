#include "slbag/workload.hpp"

#include <charconv>
#include <set>

namespace slbag {

const char* algorithm_token(AlgorithmId a) {
  switch (a) {
    case AlgorithmId::LiQueue: return "li-queue";
    case AlgorithmId::UnboundedSl: return "unbounded-sl";
    case AlgorithmId::Wf1Bounded: return "wf-1b";
    case AlgorithmId::Sl1Bounded: return "sl-1b";
    case AlgorithmId::SlBounded: return "sl-bb";
  }
  return "?";
}

AlgorithmId algorithm_from_token(const std::string& tok) {
  if (tok == "li-queue") return AlgorithmId::LiQueue;
  if (tok == "unbounded-sl") return AlgorithmId::UnboundedSl;
  if (tok == "wf-1b") return AlgorithmId::Wf1Bounded;
  if (tok == "sl-1b") return AlgorithmId::Sl1Bounded;
  if (tok == "sl-bb") return AlgorithmId::SlBounded;
  throw UsageError("unknown algorithm: " + tok);
}

bool single_producer(AlgorithmId a) {
  return a == AlgorithmId::Wf1Bounded || a == AlgorithmId::Sl1Bounded ||
         a == AlgorithmId::SlBounded;
}

std::string request_token(const OpRequest& r) {
  return r.is_insert ? "I" + std::to_string(r.value) : "T";
}

OpRequest request_from_token(const std::string& tok) {
  if (tok == "T") return OpRequest{false, 0};
  if (tok.size() >= 2 && tok[0] == 'I') {
    Value v = 0;
    auto [p, ec] = std::from_chars(tok.data() + 1, tok.data() + tok.size(), v);
    if (ec == std::errc{} && p == tok.data() + tok.size() && v >= 0)
      return OpRequest{true, v};
  }
  throw UsageError("bad op token: " + tok);
}

std::string response_token(const OpResponse& r) {
  switch (r.kind) {
    case OpResponse::Kind::Ok: return "OK";
    case OpResponse::Kind::Full: return "FULL";
    case OpResponse::Kind::Empty: return "EMPTY";
    case OpResponse::Kind::Taken: return std::to_string(r.value);
  }
  return "?";
}

OpResponse response_from_token(const std::string& tok) {
  if (tok == "OK") return OpResponse::ok();
  if (tok == "FULL") return OpResponse::full();
  if (tok == "EMPTY") return OpResponse::empty();
  Value v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size() || v < 0)
    throw UsageError("bad response token: " + tok);
  return OpResponse::taken(v);
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

int Chooser::choose(CellMask eligible, int choose_count) const {
  if (eligible == 0) throw UsageError("chooser invoked with empty eligible set");
  switch (policy) {
    case Policy::Smallest:
      return mask_min(eligible);
    case Policy::Random: {
      // Stateless per-call hash keeps replay and exploration deterministic.
      int k = static_cast<int>(splitmix64(seed ^ (0x51bau << 16) ^
                                          static_cast<std::uint64_t>(choose_count)) %
                               static_cast<std::uint64_t>(mask_count(eligible)));
      int idx = mask_min(eligible);
      while (k-- > 0) idx = mask_next(eligible, idx);
      return idx;
    }
    case Policy::Scripted: {
      if (choose_count < static_cast<int>(script.size())) {
        int idx = script[choose_count];
        if (!mask_has(eligible, idx))
          throw UsageError("scripted chooser entry " + std::to_string(idx) +
                           " not eligible at call " + std::to_string(choose_count));
        return idx;
      }
      return mask_min(eligible);
    }
  }
  throw UsageError("bad chooser policy");
}

std::string Chooser::token() const {
  switch (policy) {
    case Policy::Smallest: return "smallest";
    case Policy::Random: return "random";
    case Policy::Scripted: {
      std::string out = "script:";
      for (std::size_t i = 0; i < script.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(script[i]);
      }
      return out;
    }
  }
  return "smallest";
}

Chooser Chooser::from_token(const std::string& tok) {
  Chooser c;
  if (tok == "smallest") return c;
  if (tok == "random") {
    c.policy = Policy::Random;
    return c;
  }
  if (tok.rfind("script:", 0) == 0) {
    c.policy = Policy::Scripted;
    std::size_t pos = 7;
    while (pos < tok.size()) {
      std::size_t end = tok.find(',', pos);
      if (end == std::string::npos) end = tok.size();
      int idx = 0;
      auto [p, ec] = std::from_chars(tok.data() + pos, tok.data() + end, idx);
      if (ec != std::errc{} || p != tok.data() + end || idx < 1 || idx > 32)
        throw UsageError("bad chooser token: " + tok);
      c.script.push_back(static_cast<std::uint8_t>(idx));
      pos = end + 1;
    }
    return c;
  }
  throw UsageError("bad chooser token: " + tok);
}

void Workload::validate() const {
  int procs = num_processes();
  if (procs < 1 || procs > kMaxProcs) throw UsageError("process count out of range");
  if (single_producer(algorithm)) {
    if (procs != n + 1)
      throw UsageError("single-producer workload needs n+1 processes (p0 inserts)");
    for (int p = 1; p < procs; ++p)
      for (const auto& r : requests[p])
        if (r.is_insert) throw UsageError("Insert by non-producer process " + std::to_string(p));
    for (const auto& r : requests[0])
      if (!r.is_insert) throw UsageError("Take by the producer process");
  } else {
    if (procs != n) throw UsageError("workload needs exactly n processes");
  }
  if (algorithm == AlgorithmId::SlBounded) {
    if (b < 1) throw UsageError("capacity b must be >= 1");
  } else if (b != 1) {
    throw UsageError("capacity b only configurable for sl-bb");
  }
  if (n < 1) throw UsageError("n must be >= 1");
  std::set<Value> seen;
  for (const auto& plist : requests)
    for (const auto& r : plist)
      if (r.is_insert) {
        if (r.value < 0) throw UsageError("insert value out of universe");
        if (!seen.insert(r.value).second)
          throw UsageError("insert values must be pairwise distinct");
      }
}

std::vector<std::vector<OpRequest>> parse_process_ops(const std::string& text) {
  std::vector<std::vector<OpRequest>> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find(';', pos);
    if (end == std::string::npos) end = text.size();
    std::string part = text.substr(pos, end - pos);
    std::size_t colon = part.find(':');
    if (part.size() < 2 || part[0] != 'p' || colon == std::string::npos)
      throw UsageError("bad workload syntax near: " + part);
    int pid = 0;
    auto [p, ec] = std::from_chars(part.data() + 1, part.data() + colon, pid);
    if (ec != std::errc{} || p != part.data() + colon || pid < 0 || pid >= kMaxProcs)
      throw UsageError("bad process id in workload: " + part);
    if (pid != static_cast<int>(out.size()))
      throw UsageError("workload process ids must be dense from p0");
    std::vector<OpRequest> ops;
    std::size_t opos = colon + 1;
    while (opos <= part.size()) {
      std::size_t oend = part.find(',', opos);
      if (oend == std::string::npos) oend = part.size();
      if (oend > opos) ops.push_back(request_from_token(part.substr(opos, oend - opos)));
      if (oend == part.size()) break;
      opos = oend + 1;
    }
    out.push_back(std::move(ops));
    pos = end + 1;
  }
  if (out.empty()) throw UsageError("empty workload");
  return out;
}

std::string format_process_ops(const std::vector<std::vector<OpRequest>>& ops) {
  std::string out;
  for (std::size_t p = 0; p < ops.size(); ++p) {
    if (p) out += ';';
    out += 'p';
    out += std::to_string(p);
    out += ':';
    for (std::size_t i = 0; i < ops[p].size(); ++i) {
      if (i) out += ',';
      out += request_token(ops[p][i]);
    }
  }
  return out;
}

}  // namespace slbag
