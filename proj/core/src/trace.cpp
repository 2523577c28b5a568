#include "slbag/trace.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace slbag {

namespace {

int parse_int(const std::string& tok, const char* what) {
  int v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size())
    throw UsageError(std::string("bad ") + what + ": " + tok);
  return v;
}

std::uint64_t parse_u64(const std::string& tok, const char* what) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size())
    throw UsageError(std::string("bad ") + what + ": " + tok);
  return v;
}

ObjMeta obj_from_token(const std::string& tok) {
  std::string name = tok;
  int index = 0;
  auto br = tok.find('[');
  if (br != std::string::npos) {
    if (tok.back() != ']') throw UsageError("bad object token: " + tok);
    name = tok.substr(0, br);
    index = parse_int(tok.substr(br + 1, tok.size() - br - 2), "object index");
    if (index < 1) throw UsageError("bad object index in: " + tok);
  }
  static constexpr ObjName kNames[] = {
      ObjName::Items, ObjName::TS, ObjName::Max, ObjName::Allocated,
      ObjName::Done, ObjName::Hazards, ObjName::InsertDone, ObjName::TakeDone,
  };
  for (ObjName n : kNames)
    if (name == obj_name_token(n)) {
      bool is_array = n == ObjName::Items || n == ObjName::TS || n == ObjName::Hazards;
      if (is_array != (index > 0)) throw UsageError("bad object token: " + tok);
      return ObjMeta{n, static_cast<std::int16_t>(index)};
    }
  throw UsageError("unknown object: " + tok);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream in(line);
  std::string t;
  while (in >> t) toks.push_back(t);
  return toks;
}

}  // namespace

int Trace::op_index(int pid, int op_seq) const {
  for (std::size_t k = 0; k < ops.size(); ++k)
    if (ops[k].pid == pid && ops[k].op_seq == op_seq) return static_cast<int>(k);
  return -1;
}

std::string Trace::to_text() const {
  std::ostringstream out;
  out << algorithm_token(wl.algorithm) << ' ' << wl.n << ' ' << wl.b << ' '
      << wl.chooser.token() << ' ' << wl.seed << '\n';
  for (const Event& e : events) {
    out << e.seq << ' ' << e.pid << ' ' << line_token(e.line) << ' ' << obj_token(e.obj)
        << ' ' << action_token(e.action) << ' ' << to_token(e.arg) << ' ' << to_token(e.resp)
        << '\n';
  }
  // Runner appends ops in begin order; serialize them canonically so a
  // round-trip through from_text (which sorts) is byte-identical.
  std::vector<OpRecord> sorted = ops;
  std::stable_sort(sorted.begin(), sorted.end(), [](const OpRecord& a, const OpRecord& b) {
    return a.pid != b.pid ? a.pid < b.pid : a.op_seq < b.op_seq;
  });
  for (const OpRecord& op : sorted) {
    out << "OP " << op.pid << ' ' << op.op_seq << ' ' << request_token(op.req) << ' '
        << (op.completed() ? response_token(op.resp) : "-") << ' ' << op.invoke_seq << ' ';
    if (op.completed()) {
      out << op.complete_seq;
    } else {
      out << '-';
    }
    out << '\n';
  }
  if (has_witness)
    out << "WITNESS " << witness_alpha << ' ' << witness_p1 << ' ' << witness_p2 << '\n';
  return out.str();
}

Trace Trace::from_text(const std::string& text) {
  Trace tr;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_header = false;
  bool in_ops = false;

  while (std::getline(in, line)) {
    ++lineno;
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    auto fail = [&](const std::string& why) {
      throw UsageError("trace line " + std::to_string(lineno) + ": " + why);
    };

    if (!have_header) {
      if (toks.size() != 5) fail("header needs: algorithm n b chooser seed");
      tr.wl.algorithm = algorithm_from_token(toks[0]);
      tr.wl.n = parse_int(toks[1], "n");
      tr.wl.b = parse_int(toks[2], "b");
      tr.wl.chooser = Chooser::from_token(toks[3]);
      tr.wl.seed = parse_u64(toks[4], "seed");
      if (tr.wl.n < 1 || tr.wl.n >= kMaxProcs) fail("n out of range");
      int procs = single_producer(tr.wl.algorithm) ? tr.wl.n + 1 : tr.wl.n;
      tr.wl.requests.assign(procs, {});
      have_header = true;
      continue;
    }

    if (toks[0] == "WITNESS") {
      if (toks.size() != 4) fail("witness needs: WITNESS alpha_len pid1 pid2");
      tr.has_witness = true;
      tr.witness_alpha = parse_int(toks[1], "witness length");
      tr.witness_p1 = parse_int(toks[2], "witness pid");
      tr.witness_p2 = parse_int(toks[3], "witness pid");
      continue;
    }

    if (toks[0] == "OP") {
      if (toks.size() != 7) fail("op record needs: OP pid op_seq request response invoke complete");
      in_ops = true;
      OpRecord op;
      op.pid = parse_int(toks[1], "pid");
      op.op_seq = parse_int(toks[2], "op_seq");
      op.req = request_from_token(toks[3]);
      op.invoke_seq = parse_int(toks[5], "invoke_seq");
      if (toks[6] == "-") {
        if (toks[4] != "-") fail("pending operation cannot carry a response");
        op.complete_seq = -1;
      } else {
        op.complete_seq = parse_int(toks[6], "complete_seq");
        op.resp = response_from_token(toks[4]);
      }
      if (op.pid < 0 || op.pid >= tr.wl.num_processes()) fail("op pid out of range");
      if (op.invoke_seq < 0 || op.invoke_seq >= static_cast<int>(tr.events.size()))
        fail("op invoke_seq out of range");
      if (op.completed() && (op.complete_seq < op.invoke_seq ||
                             op.complete_seq >= static_cast<int>(tr.events.size())))
        fail("op complete_seq out of range");
      if (op.op_seq != static_cast<int>(tr.wl.requests[op.pid].size()))
        fail("op records must be dense per process and sorted by (pid, op_seq)");
      tr.wl.requests[op.pid].push_back(op.req);
      tr.ops.push_back(op);
      continue;
    }

    if (in_ops) fail("event record after op records");
    if (toks.size() != 7) fail("event needs: seq pid line object action arg response");
    Event e;
    e.seq = parse_int(toks[0], "seq");
    if (e.seq != static_cast<int>(tr.events.size())) fail("event seq must be consecutive from 0");
    e.pid = parse_int(toks[1], "pid");
    if (e.pid < 0 || e.pid >= tr.wl.num_processes()) fail("event pid out of range");
    e.line = line_from_token(tr.wl.algorithm, toks[2]);
    e.obj = obj_from_token(toks[3]);
    e.action = action_from_token(toks[4]);
    e.arg = prim_from_token(toks[5]);
    e.resp = prim_from_token(toks[6]);
    tr.events.push_back(e);
  }

  if (!have_header) throw UsageError("trace file has no header line");
  std::stable_sort(tr.ops.begin(), tr.ops.end(), [](const OpRecord& a, const OpRecord& b) {
    return a.pid != b.pid ? a.pid < b.pid : a.op_seq < b.op_seq;
  });
  // Attach every event to the recorded operation whose interval covers it.
  for (Event& e : tr.events) {
    bool inside = false;
    for (const OpRecord& op : tr.ops)
      if (op.pid == e.pid && op.invoke_seq <= e.seq &&
          (!op.completed() || e.seq <= op.complete_seq)) {
        inside = true;
        e.op_seq = op.op_seq;
        e.invoked = e.seq == op.invoke_seq;
        e.completed = op.completed() && e.seq == op.complete_seq;
        break;
      }
    if (!inside)
      throw UsageError("event " + std::to_string(e.seq) +
                       " lies outside every recorded operation of its process");
  }
  tr.wl.validate();
  return tr;
}

Trace trace_prefix(const Trace& tr, int nevents) {
  Trace out;
  out.wl = tr.wl;
  out.events.assign(tr.events.begin(), tr.events.begin() + std::min<size_t>(nevents, tr.events.size()));
  for (OpRecord op : tr.ops) {
    if (op.invoke_seq >= nevents) continue;  // not yet begun
    if (op.completed() && op.complete_seq >= nevents) {
      op.complete_seq = -1;
      op.resp = OpResponse{};
    }
    out.ops.push_back(op);
  }
  return out;
}

}  // namespace slbag
