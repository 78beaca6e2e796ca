#include "sim/mp/trace.hpp"

#include <sstream>

#include "sim/error.hpp"

namespace sim::mp {

History ExecutionTrace::history() const {
  History h;
  for (const TraceStep& s : steps) {
    if (s.step.rule != MpStep::Rule::Internal) h.push_back(s.step.action);
  }
  return h;
}

std::string ExecutionTrace::to_text() const {
  std::ostringstream out;
  out << "TRACE v1 m=" << m << " n=" << n << " seed=" << seed << "\n";
  for (const auto& [k, v] : meta) out << "# " << k << " " << v << "\n";
  int idx = 0;
  for (const TraceStep& s : steps) {
    const char* rule = s.step.rule == MpStep::Rule::Call  ? "CALL"
                       : s.step.rule == MpStep::Rule::Ret ? "RET"
                                                          : "INT";
    out << "STEP " << idx++ << " " << rule << " " << s.step.pid << " " << s.step.label()
        << " " << s.step.recv_str() << " " << hex16(s.digest) << "\n";
  }
  return out.str();
}

ExecutionTrace ExecutionTrace::from_text(const std::string& text) {
  ExecutionTrace t;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_header = false;
  auto bad = [&](const std::string& why) {
    fail(Err::ParseError, "trace line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line);
      std::string hash, key;
      ls >> hash >> key;
      std::string rest;
      std::getline(ls, rest);
      if (!rest.empty() && rest[0] == ' ') rest.erase(0, 1);
      if (!key.empty()) t.meta[key] = rest;
      continue;
    }
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "TRACE") {
      std::string ver, mf, nf, sf;
      if (!(ls >> ver >> mf >> nf >> sf) || ver != "v1") bad("bad trace header");
      auto field = [&](const std::string& s, const std::string& name) -> std::uint64_t {
        if (s.rfind(name + "=", 0) != 0) bad("expected " + name + "=...");
        try {
          return std::stoull(s.substr(name.size() + 1));
        } catch (...) {
          bad("bad " + name);
        }
        return 0;
      };
      t.m = static_cast<int>(field(mf, "m"));
      t.n = static_cast<int>(field(nf, "n"));
      t.seed = field(sf, "seed");
      have_header = true;
    } else if (tag == "STEP") {
      if (!have_header) bad("STEP before TRACE header");
      long long idx;
      std::string rule, label, recv, digest;
      int pid;
      if (!(ls >> idx >> rule >> pid >> label >> recv >> digest))
        bad("expected STEP <n> <rule> <pid> <label> <recv> <digest>");
      if (idx != static_cast<long long>(t.steps.size())) bad("step index out of order");
      TraceStep s;
      s.step.pid = pid;
      if (rule == "CALL" || rule == "RET") {
        s.step.rule = rule == "CALL" ? MpStep::Rule::Call : MpStep::Rule::Ret;
        auto a = Action::parse_label(label);
        if (!a || (rule == "CALL") != a->is_call()) bad("bad action label '" + label + "'");
        s.step.action = *a;
      } else if (rule == "INT") {
        s.step.rule = MpStep::Rule::Internal;
        if (label != "-") bad("internal step must have label '-'");
      } else {
        bad("unknown rule '" + rule + "'");
      }
      if (recv != "-") {
        std::istringstream rs(recv);
        std::string tok;
        while (std::getline(rs, tok, ',')) {
          std::size_t dot = tok.find('.');
          if (dot == std::string::npos) bad("bad uid '" + tok + "'");
          try {
            Uid uid;
            uid.sender = std::stoi(tok.substr(0, dot));
            uid.seq = static_cast<std::uint32_t>(std::stoul(tok.substr(dot + 1)));
            s.step.recv.push_back(uid);
          } catch (...) {
            bad("bad uid '" + tok + "'");
          }
        }
      }
      std::uint64_t d = 0;
      if (!parse_hex16(digest, d)) bad("bad digest '" + digest + "'");
      s.digest = d;
      t.steps.push_back(std::move(s));
    } else {
      bad("unknown tag '" + tag + "'");
    }
  }
  if (!have_header) fail(Err::ParseError, "trace has no header line");
  return t;
}

namespace {

// Crash script entries live in trace metadata as "pid@step,pid@step".
std::vector<std::pair<Pid, int>> parse_crashes(const ExecutionTrace& t) {
  std::vector<std::pair<Pid, int>> out;
  auto it = t.meta.find("crash");
  if (it == t.meta.end()) return out;
  std::istringstream in(it->second);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    std::size_t at = tok.find('@');
    if (at == std::string::npos) fail(Err::ParseError, "bad crash entry '" + tok + "'");
    out.emplace_back(std::stoi(tok.substr(0, at)), std::stoi(tok.substr(at + 1)));
  }
  return out;
}

}  // namespace

MpGlobalState replay_trace(const MpImplementation& impl, const ExecutionTrace& trace,
                           bool check_digests) {
  if (impl.clients != trace.m || impl.servers != trace.n)
    fail(Err::ConfigError, "trace header m/n does not match the implementation");
  MpGlobalState g(impl.clients, impl.servers, impl.initial_state);
  auto crashes = parse_crashes(trace);
  for (std::size_t idx = 0; idx < trace.steps.size(); ++idx) {
    for (const auto& [pid, at] : crashes) {
      if (at == static_cast<int>(idx) && !g.entry(pid).crashed) {
        ProcEntry e = g.entry(pid);
        e.crashed = true;
        g = g.with_entry(pid, std::move(e));
      }
    }
    const TraceStep& s = trace.steps[idx];
    g = apply_step(impl, g, s.step);
    if (check_digests && g.digest() != s.digest)
      fail(Err::DigestMismatch, "digest mismatch at step " + std::to_string(idx) +
                                    ": expected " + hex16(s.digest) + ", got " +
                                    hex16(g.digest()));
  }
  return g;
}

std::vector<Uid> audit_delivery(const MpImplementation& impl, const ExecutionTrace& trace,
                                int window) {
  // For each sent message, count destination steps while it stays
  // undelivered; flag it once the count exceeds the window.
  struct Tracked {
    Pid dst;
    int dst_steps = 0;
    bool delivered = false;
  };
  std::map<std::uint64_t, Tracked> msgs;
  std::vector<bool> crashed(static_cast<std::size_t>(trace.m + trace.n), false);
  auto crashes = parse_crashes(trace);
  std::vector<Uid> violations;
  MpGlobalState g(impl.clients, impl.servers, impl.initial_state);
  for (std::size_t idx = 0; idx < trace.steps.size(); ++idx) {
    for (const auto& [pid, at] : crashes) {
      if (at == static_cast<int>(idx)) crashed[static_cast<std::size_t>(pid)] = true;
    }
    const TraceStep& s = trace.steps[idx];
    std::uint32_t pool_before = g.pool(s.step.pid).size();
    for (const Uid& uid : s.step.recv) {
      auto it = msgs.find(uid.pack());
      if (it != msgs.end()) it->second.delivered = true;
    }
    g = apply_step(impl, g, s.step);
    // Newly sent messages enter tracking.
    g.pool(s.step.pid).for_each([&](const Message& m) {
      if (m.uid.seq >= pool_before) msgs[m.uid.pack()] = Tracked{m.dst, 0, false};
    });
    for (auto& [packed, tr] : msgs) {
      if (tr.delivered || crashed[static_cast<std::size_t>(tr.dst)]) continue;
      if (s.step.pid == tr.dst && s.step.rule == MpStep::Rule::Internal) {
        if (++tr.dst_steps > window) {
          violations.push_back(Uid::unpack(packed));
          tr.delivered = true;  // report once
        }
      }
    }
  }
  return violations;
}

}  // namespace sim::mp
