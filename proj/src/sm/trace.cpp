#include "sim/sm/trace.hpp"

#include <sstream>

#include "sim/error.hpp"

namespace sim::sm {

History SmExecutionTrace::history() const {
  History h;
  for (const SmTraceStep& s : steps) {
    if (s.rec.tag == SmStepRecord::Tag::Call || s.rec.tag == SmStepRecord::Tag::Ret)
      h.push_back(s.rec.action);
  }
  return h;
}

std::string SmExecutionTrace::to_text() const {
  std::ostringstream out;
  out << "SMTRACE v1 m=" << m << " seed=" << seed << "\n";
  for (const auto& [k, v] : meta) out << "# " << k << " " << v << "\n";
  int idx = 0;
  for (const SmTraceStep& s : steps) {
    out << "STEP " << idx++ << " " << s.rec.tag_name() << " " << s.rec.pid << " "
        << s.rec.label() << " " << (s.rec.reg.empty() ? "-" : s.rec.reg) << " "
        << hex16(s.digest) << "\n";
  }
  return out.str();
}

SmExecutionTrace SmExecutionTrace::from_text(const std::string& text) {
  SmExecutionTrace t;
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
    if (tag == "SMTRACE") {
      std::string ver, mf, sf;
      if (!(ls >> ver >> mf >> sf) || ver != "v1") bad("bad trace header");
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
      t.seed = field(sf, "seed");
      have_header = true;
    } else if (tag == "STEP") {
      if (!have_header) bad("STEP before SMTRACE header");
      long long idx;
      std::string kind, label, reg, digest;
      int pid;
      if (!(ls >> idx >> kind >> pid >> label >> reg >> digest))
        bad("expected STEP <n> <tag> <pid> <label> <reg> <digest>");
      if (idx != static_cast<long long>(t.steps.size())) bad("step index out of order");
      SmTraceStep s;
      s.rec.pid = pid;
      s.rec.tag = SmStepRecord::parse_tag(kind);
      bool visible =
          s.rec.tag == SmStepRecord::Tag::Call || s.rec.tag == SmStepRecord::Tag::Ret;
      if (visible) {
        auto a = Action::parse_label(label);
        if (!a || (s.rec.tag == SmStepRecord::Tag::Call) != a->is_call())
          bad("bad action label '" + label + "'");
        s.rec.action = *a;
      } else if (label != "-") {
        bad("statement step must have label '-'");
      }
      if (reg != "-") {
        if (visible || s.rec.tag == SmStepRecord::Tag::Local)
          bad("only SMR/SMW steps name a register");
        s.rec.reg = reg;
      } else if (s.rec.tag == SmStepRecord::Tag::Read || s.rec.tag == SmStepRecord::Tag::Write) {
        bad("SMR/SMW step must name a register");
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

std::vector<std::pair<Pid, int>> parse_sm_crash_meta(const std::string& s) {
  std::vector<std::pair<Pid, int>> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    std::size_t at = tok.find('@');
    if (at == std::string::npos) fail(Err::ParseError, "bad crash entry '" + tok + "'");
    try {
      out.emplace_back(std::stoi(tok.substr(0, at)), std::stoi(tok.substr(at + 1)));
    } catch (...) {
      fail(Err::ParseError, "bad crash entry '" + tok + "'");
    }
  }
  return out;
}

SmGlobalState sm_replay(const SmProgram& program, const SmExecutionTrace& trace,
                        bool check_digests, const SmReplayObserver& observe) {
  if (program.processes != trace.m)
    fail(Err::ConfigError, "trace header m does not match the program");
  SmGlobalState g(program);
  std::vector<std::pair<Pid, int>> crashes;
  if (auto it = trace.meta.find("crash"); it != trace.meta.end())
    crashes = parse_sm_crash_meta(it->second);
  auto diverged = [](std::size_t idx, const std::string& why) {
    fail(Err::DigestMismatch, "replay diverged at step " + std::to_string(idx) + ": " + why);
  };
  for (std::size_t idx = 0; idx < trace.steps.size(); ++idx) {
    for (const auto& [pid, at] : crashes) {
      if (at == static_cast<int>(idx) && !g.crashed(pid)) g.crash(pid);
    }
    const SmTraceStep& s = trace.steps[idx];
    SmStepRecord rec;
    switch (s.rec.tag) {
      case SmStepRecord::Tag::Call:
        rec = sm_call(g, s.rec.pid, s.rec.action);
        break;
      case SmStepRecord::Tag::Ret:
        rec = sm_return(g, s.rec.pid);
        if (rec.action != s.rec.action)
          diverged(idx, "returned " + rec.action.label() + ", trace has " + s.rec.action.label());
        break;
      default:
        rec = sm_step(g, s.rec.pid);
        if (rec.tag != s.rec.tag)
          diverged(idx, "executed " + rec.tag_name() + ", trace has " + s.rec.tag_name());
        if (rec.reg != s.rec.reg)
          diverged(idx, "touched register " + rec.reg + ", trace has " + s.rec.reg);
        break;
    }
    if (check_digests && g.digest() != s.digest)
      diverged(idx, "digest " + hex16(g.digest()) + ", trace has " + hex16(s.digest));
    if (observe) observe(g, rec, idx);
  }
  return g;
}

}  // namespace sim::sm
