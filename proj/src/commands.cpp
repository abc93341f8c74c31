#include "koradial/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "koradial/classify.hpp"
#include "koradial/functionals.hpp"

namespace koradial {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Non-finite doubles become null in JSON; keep them readable instead.
json jnum(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

json jvec(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(jnum(x));
  return a;
}

struct Stage {
  json doc;
  int code = kExitOk;
  std::string summary;
};

json problem_json(const RunConfig& cfg) {
  const ProblemSpec& s = cfg.spec;
  json j;
  j["name"] = cfg.name;
  j["fingerprint"] = s.fingerprint();
  j["N"] = s.N;
  j["a"] = s.a;
  j["b"] = s.b;
  j["cbar1"] = s.cbar1;
  j["cbar2"] = s.cbar2;
  j["eps"] = s.eps;
  json fns;
  for (const char* k : {"p1", "p2", "f1", "f2", "h1", "h2", "w1", "w2"}) {
    auto it = cfg.sources.find(k);
    fns[k] = it == cfg.sources.end() ? "" : it->second;
  }
  j["functions"] = fns;
  json params = json::object();
  for (const auto& [k, v] : cfg.parameters) params[k] = v;
  j["parameters"] = params;
  return j;
}

json verdict_json(const ConvergenceVerdict& v) {
  json j;
  j["kind"] = to_string(v.kind);
  j["value"] = v.finite() ? jnum(v.value) : json(nullptr);
  j["error_estimate"] = v.finite() ? jnum(v.error_estimate) : json(nullptr);
  j["rate_hint"] = v.rate_hint;
  j["probe_radii"] = jvec(v.probe_radii);
  j["probe_values"] = jvec(v.probe_values);
  return j;
}

json limits_json(const FunctionalLimits& L) {
  json j;
  j["P1"] = verdict_json(L.P1);
  j["Q1"] = verdict_json(L.Q1);
  j["P2"] = verdict_json(L.P2);
  j["Q2"] = verdict_json(L.Q2);
  j["P3"] = verdict_json(L.P3);
  j["Q3"] = verdict_json(L.Q3);
  j["H1"] = verdict_json(L.H1);
  j["H2"] = verdict_json(L.H2);
  return j;
}

json weight_json(const WeightThreshold& w) {
  json j;
  j["pass"] = w.pass;
  j["threshold"] = jnum(w.threshold);
  j["R_probe"] = w.R_probe;
  j["samples"] = w.samples;
  j["reason"] = w.reason;
  return j;
}

Stage check_stage(const RunConfig& cfg) {
  Stage st;
  HypothesisReport rep = check_hypotheses(cfg.spec, cfg.numerics.hypotheses);
  json entries = json::array();
  std::ostringstream sum;
  for (const auto& e : rep.entries) {
    json je;
    je["name"] = e.name;
    je["status"] = to_string(e.status);
    je["sampling"] = e.sampling;
    je["reason"] = e.reason;
    json ws = json::array();
    for (const auto& w : e.witnesses) {
      json jw;
      json inputs;
      for (const auto& [k, v] : w.inputs) inputs[k] = jnum(v);
      jw["inputs"] = inputs;
      jw["lhs"] = jnum(w.lhs);
      jw["rhs"] = jnum(w.rhs);
      jw["relation"] = w.relation;
      ws.push_back(jw);
    }
    je["witnesses"] = ws;
    entries.push_back(je);
    sum << "  " << e.name << ": " << to_string(e.status);
    if (e.status != CheckStatus::Pass && !e.reason.empty()) {
      sum << " (" << e.reason << ")";
    } else if (e.status != CheckStatus::Pass && !e.witnesses.empty()) {
      const Witness& w = e.witnesses.front();
      sum << " (" << w.relation << " violated:";
      for (const auto& [k, v] : w.inputs) sum << " " << k << "=" << num6(v);
      sum << ", lhs " << num6(w.lhs) << ", rhs " << num6(w.rhs) << ")";
    }
    sum << "\n";
  }
  const CheckStatus overall = rep.overall();
  st.code = overall == CheckStatus::Pass ? kExitOk : overall == CheckStatus::Fail ? kExitHypothesis : kExitIndeterminate;
  st.doc["overall"] = to_string(overall);
  st.doc["entries"] = entries;
  st.summary = "hypotheses: " + std::string(to_string(overall)) + "\n" + sum.str();
  return st;
}

struct SolveStage : Stage {
  std::optional<SolutionPair> sol;
};

SolveStage solve_stage(const RunConfig& cfg, bool keep_iterates) {
  SolveStage st;
  const SolveOptions& o = cfg.numerics.solve;
  GridPtr grid = solution_grid(o);
  json grid_j;
  grid_j["R_max"] = o.R_max;
  grid_j["n_panels"] = o.panels;
  grid_j["grading"] = o.grading;
  grid_j["nodes_per_panel"] = o.nodes_per_panel;
  grid_j["nodes"] = grid->size();
  st.doc["method"] = "picard";
  st.doc["grid"] = grid_j;
  st.doc["tol"] = o.tol;
  st.doc["max_iter"] = o.max_iter;
  // A failed iteration near a finite-radius singularity is usually the
  // quadrature losing the steep profile; ask the IVP whether it blows up.
  auto blowup_check = [&](const std::string& why) {
    SolutionPair oracle = ivp_oracle(cfg.spec, grid, cfg.numerics.ivp_h);
    st.doc["picard_failure"] = why;
    if (oracle.status != SolveStatus::BlowUp) return false;
    st.doc["status"] = to_string(SolveStatus::BlowUp);
    st.doc["converged"] = false;
    st.doc["blowup_radius"] = oracle.blowup_radius ? json(*oracle.blowup_radius) : json(nullptr);
    st.doc["blowup_source"] = "ivp_oracle";
    st.code = kExitBlowUp;
    st.summary = "solve: " + why + "\nsolve: blow_up, IVP overflows near r=" +
                 (oracle.blowup_radius ? num6(*oracle.blowup_radius) : std::string("?")) + "\n";
    return true;
  };
  SolutionPair sol;
  try {
    sol = picard_solve(cfg.spec, grid, o.tol, o.max_iter, keep_iterates);
  } catch (const MonotonicityViolation& e) {
    if (blowup_check(e.what())) return st;
    st.doc["status"] = "monotonicity_violation";
    st.doc["converged"] = false;
    st.doc["error"] = e.what();
    st.code = kExitNoConvergence;
    st.summary = std::string("solve: ") + e.what() + "\n";
    return st;
  }
  if (sol.status == SolveStatus::NoConvergence &&
      blowup_check("no convergence after " + std::to_string(sol.iterations) + " iterations")) {
    return st;
  }
  st.doc["status"] = to_string(sol.status);
  st.doc["converged"] = sol.converged();
  st.doc["iterations"] = sol.iterations;
  st.doc["increment_history"] = jvec(sol.increment_history);
  st.doc["blowup_radius"] = sol.blowup_radius ? json(*sol.blowup_radius) : json(nullptr);
  std::ostringstream sum;
  sum << "solve: " << to_string(sol.status) << " after " << sol.iterations << " iterations";
  if (sol.converged()) {
    auto [r1, r2] = residual(cfg.spec, sol);
    st.doc["residual"] = {{"u1", r1}, {"u2", r2}};
    const Index n = grid->size();
    sum << ", u1(R)=" << num6(sol.u1[n - 1]) << ", u2(R)=" << num6(sol.u2[n - 1]) << ", residual "
        << num6(std::max(r1, r2));
    SolutionPair oracle = ivp_oracle(cfg.spec, grid, cfg.numerics.ivp_h);
    json oj;
    oj["method"] = "ivp_oracle";
    oj["step"] = cfg.numerics.ivp_h;
    oj["status"] = to_string(oracle.status);
    if (oracle.converged()) {
      double d1 = (sol.u1 - oracle.u1).cwiseAbs().maxCoeff() / std::max(1.0, oracle.u1.cwiseAbs().maxCoeff());
      double d2 = (sol.u2 - oracle.u2).cwiseAbs().maxCoeff() / std::max(1.0, oracle.u2.cwiseAbs().maxCoeff());
      oj["max_rel_diff"] = {{"u1", d1}, {"u2", d2}};
      sum << ", oracle agreement " << num6(std::max(d1, d2));
    } else {
      oj["max_rel_diff"] = nullptr;
    }
    st.doc["oracle"] = oj;
  } else {
    st.doc["residual"] = nullptr;
    st.doc["oracle"] = nullptr;
    if (sol.blowup_radius) sum << ", blow-up near r=" << num6(*sol.blowup_radius);
  }
  st.code = sol.status == SolveStatus::Converged ? kExitOk
            : sol.status == SolveStatus::BlowUp  ? kExitBlowUp
                                                  : kExitNoConvergence;
  st.summary = sum.str() + "\n";
  st.sol = std::move(sol);
  return st;
}

struct ClassifyStage : Stage {
  GateReport gate;
  BehaviorClass cls;
};

ClassifyStage classify_stage(const RunConfig& cfg) {
  ClassifyStage st;
  st.gate = existence_gate(cfg.spec, cfg.numerics.limits, cfg.numerics.weights);
  st.cls = classify_evidence(st.gate.limits, st.gate.weights);
  json gate;
  gate["regime"] = to_string(st.gate.regime);
  json conds;
  for (const auto& [r, s] : st.gate.conditions) conds[to_string(r)] = to_string(s);
  gate["conditions"] = conds;
  gate["reason"] = st.gate.reason;
  json cls;
  cls["kind"] = to_string(st.cls.kind);
  json matched = json::array();
  for (auto k : st.cls.matched) matched.push_back(to_string(k));
  cls["matched"] = matched;
  cls["reason"] = st.cls.reason;
  st.doc["gate"] = gate;
  st.doc["class"] = cls;
  st.doc["verdicts"] = limits_json(st.gate.limits);
  st.doc["weights"] = {{"p1", weight_json(st.gate.weights.p1)}, {"p2", weight_json(st.gate.weights.p2)}};

  const bool undecided = st.gate.regime == Regime::Indeterminate ||
                         (st.gate.regime == Regime::Classification && st.cls.kind == BehaviorKind::Indeterminate);
  st.code = undecided ? kExitIndeterminate : kExitOk;
  st.summary = "classify: regime " + std::string(to_string(st.gate.regime)) + ", class " + to_string(st.cls.kind) +
               " (" + st.cls.reason + ")\n";
  return st;
}

struct BoundsStage : Stage {
  BoundReport report;
};

json side_json(const SideBounds& s) {
  json j;
  j["worst_lower"] = jnum(s.worst_lower);
  j["r_worst_lower"] = s.r_worst_lower;
  j["worst_upper"] = jnum(s.worst_upper);
  j["r_worst_upper"] = s.r_worst_upper;
  j["saturated_nodes"] = s.saturated_nodes;
  return j;
}

BoundsStage bounds_stage(const RunConfig& cfg, const SolutionPair& sol) {
  BoundsStage st;
  st.report = check_bounds(cfg.spec, sol);
  const bool pass = st.report.pass();
  st.doc["pass"] = pass;
  st.doc["slack"] = 1e-6;
  st.doc["first"] = side_json(st.report.first);
  st.doc["second"] = side_json(st.report.second);
  st.code = pass ? kExitOk : kExitBounds;
  auto worst = std::min({st.report.first.worst_lower, st.report.first.worst_upper, st.report.second.worst_lower,
                         st.report.second.worst_upper});
  st.summary = std::string("bounds: ") + (pass ? "pass" : "VIOLATED") + ", worst relative margin " + num6(worst);
  const Index sat = st.report.first.saturated_nodes + st.report.second.saturated_nodes;
  if (sat) st.summary += ", " + std::to_string(sat) + " saturated nodes";
  st.summary += "\n";
  return st;
}

std::string bounds_csv(const BoundReport& rep) {
  std::string out = "r,lower1,upper1,saturated1,lower2,upper2,saturated2\n";
  const Grid& g = *rep.grid;
  for (Index i = 0; i < g.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    out += num17(g.node(i)) + "," + num17(rep.first.lower_margin[i]) + "," + num17(rep.first.upper_margin[i]) + "," +
           (rep.first.saturated[k] ? "1" : "0") + "," + num17(rep.second.lower_margin[i]) + "," +
           num17(rep.second.upper_margin[i]) + "," + (rep.second.saturated[k] ? "1" : "0") + "\n";
  }
  return out;
}

std::string profile_csv(const Profile& p) {
  std::string out = "r,value\n";
  for (Index i = 0; i < p.size(); ++i) out += num17(p.grid().node(i)) + "," + num17(p.value(i)) + "\n";
  return out;
}

json envelope(const char* command, const RunConfig& cfg) {
  json j;
  j["command"] = command;
  j["config"] = cfg.origin;
  j["problem"] = problem_json(cfg);
  return j;
}

void emit_json(const RunConfig& cfg, const fs::path& out, const char* file, json doc, int code) {
  if (!cfg.output.json) return;
  doc["exit_code"] = code;
  write_atomic(out / file, doc.dump(2) + "\n");
}

}  // namespace

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot write " + tmp.string());
    os << content;
    os.flush();
    if (!os) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

std::string solution_csv(const SolutionPair& sol) {
  std::string out = "r,u1,u2\n";
  for (Index i = 0; i < sol.grid->size(); ++i) {
    out += num17(sol.grid->node(i)) + "," + num17(sol.u1[i]) + "," + num17(sol.u2[i]) + "\n";
  }
  return out;
}

SolutionPair read_solution_csv(const fs::path& path, const GridPtr& grid) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot read solution");
  std::string line;
  if (!std::getline(in, line) || (line != "r,u1,u2" && line != "r,u1,u2\r")) {
    throw ConfigError(path.string() + ":1: expected header r,u1,u2");
  }
  std::vector<double> r, u1, u2;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double v[3];
    char* p = line.data();
    for (int k = 0; k < 3; ++k) {
      char* end = nullptr;
      v[k] = std::strtod(p, &end);
      if (end == p || (k < 2 && *end != ',') || (k == 2 && *end != '\0')) {
        throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": malformed row");
      }
      p = end + 1;
    }
    r.push_back(v[0]);
    u1.push_back(v[1]);
    u2.push_back(v[2]);
  }
  if (static_cast<Index>(r.size()) != grid->size()) {
    throw ConfigError(path.string() + ": grid mismatch: " + std::to_string(r.size()) + " rows, expected " +
                      std::to_string(grid->size()));
  }
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double x = grid->node(static_cast<Index>(i));
    if (std::abs(r[i] - x) > 1e-12 * std::max(1.0, std::abs(x))) {
      throw ConfigError(path.string() + ": grid mismatch at row " + std::to_string(i + 2) + " (r=" + num17(r[i]) +
                        ", expected " + num17(x) + ")");
    }
  }
  SolutionPair sol;
  sol.grid = grid;
  sol.u1 = Eigen::Map<Vector>(u1.data(), static_cast<Index>(u1.size()));
  sol.u2 = Eigen::Map<Vector>(u2.data(), static_cast<Index>(u2.size()));
  sol.status = SolveStatus::Converged;
  sol.method = "file";
  return sol;
}

CommandResult run_check(const RunConfig& cfg, const fs::path& out) {
  Stage st = check_stage(cfg);
  json doc = envelope("check", cfg);
  doc["hypotheses"] = st.doc;
  emit_json(cfg, out, "check.json", doc, st.code);
  return {st.code, st.summary};
}

CommandResult run_solve(const RunConfig& cfg, const fs::path& out) {
  SolveStage st = solve_stage(cfg, false);
  json doc = envelope("solve", cfg);
  doc["solve"] = st.doc;
  if (st.sol && st.sol->status != SolveStatus::BlowUp && cfg.output.csv) {
    write_atomic(out / "solution.csv", solution_csv(*st.sol));
  }
  emit_json(cfg, out, "manifest.json", doc, st.code);
  return {st.code, st.summary};
}

CommandResult run_classify(const RunConfig& cfg, const fs::path& out) {
  ClassifyStage st = classify_stage(cfg);
  json doc = envelope("classify", cfg);
  doc["classify"] = st.doc;
  emit_json(cfg, out, "classify.json", doc, st.code);
  return {st.code, st.summary};
}

CommandResult run_bounds(const RunConfig& cfg, const fs::path& out, const std::optional<fs::path>& solution) {
  json doc = envelope("bounds", cfg);
  SolutionPair sol;
  std::string summary;
  if (solution) {
    sol = read_solution_csv(*solution, solution_grid(cfg.numerics.solve));
    doc["solution_source"] = solution->string();
  } else {
    SolveStage s = solve_stage(cfg, false);
    doc["solution_source"] = "picard";
    doc["solve"] = s.doc;
    summary = s.summary;
    if (!s.sol || !s.sol->converged()) {
      emit_json(cfg, out, "bounds.json", doc, s.code);
      return {s.code, summary + "bounds: skipped, no converged solution\n"};
    }
    sol = std::move(*s.sol);
  }
  BoundsStage b = bounds_stage(cfg, sol);
  doc["bounds"] = b.doc;
  if (cfg.output.csv) write_atomic(out / "bounds.csv", bounds_csv(b.report));
  emit_json(cfg, out, "bounds.json", doc, b.code);
  return {b.code, summary + b.summary};
}

CommandResult run_report(const RunConfig& cfg, const fs::path& out) {
  json doc = envelope("report", cfg);
  int code = kExitOk;
  std::string summary;

  Stage c = check_stage(cfg);
  doc["check"] = c.doc;
  doc["check"]["exit_code"] = c.code;
  code = std::max(code, c.code);
  summary += c.summary;

  SolveStage s = solve_stage(cfg, true);
  doc["solve"] = s.doc;
  doc["solve"]["exit_code"] = s.code;
  code = std::max(code, s.code);
  summary += s.summary;

  ClassifyStage k = classify_stage(cfg);
  doc["classify"] = k.doc;
  doc["classify"]["exit_code"] = k.code;
  code = std::max(code, k.code);
  summary += k.summary;

  if (s.sol && s.sol->converged()) {
    const SolutionPair& sol = *s.sol;
    IterateAudit audit = audit_iterates(cfg.spec, sol);
    json a;
    a["pass"] = audit.pass();
    a["worst_k_margin"] = jnum(audit.worst_k_margin);
    a["worst_r_margin"] = jnum(audit.worst_r_margin);
    a["worst_pen_margin"] = jnum(audit.worst_pen_margin);
    a["pen_checked"] = audit.pen_checked;
    a["pen_skipped"] = audit.pen_skipped;
    a["detail"] = audit.detail;
    doc["audit"] = a;
    const int audit_code = audit.pass() ? kExitOk : kExitBounds;
    code = std::max(code, audit_code);
    summary += std::string("iterates: ") + (audit.pass() ? "monotone, a priori bound holds" : "AUDIT FAILED: " + audit.detail) + "\n";

    NecessityReport nec = check_necessity_v(cfg.spec, sol, k.gate.limits, k.gate.weights);
    doc["necessity"] = {{"applicable", nec.applicable}, {"consistent", nec.consistent}, {"reason", nec.reason}};
    if (!nec.consistent) {
      code = std::max(code, static_cast<int>(kExitIndeterminate));
      summary += "necessity: CONTRADICTION (" + nec.reason + ")\n";
    }

    BoundsStage b = bounds_stage(cfg, sol);
    doc["bounds"] = b.doc;
    doc["bounds"]["exit_code"] = b.code;
    code = std::max(code, b.code);
    summary += b.summary;

    if (cfg.output.csv) {
      write_atomic(out / "solution.csv", solution_csv(sol));
      write_atomic(out / "bounds.csv", bounds_csv(b.report));
      RadialFunctionals rf = RadialFunctionals::compute(cfg.spec, sol.grid);
      for (auto id : {FunctionalId::G1, FunctionalId::G2, FunctionalId::P1, FunctionalId::Q1, FunctionalId::P2,
                      FunctionalId::Q2, FunctionalId::P3, FunctionalId::Q3}) {
        write_atomic(out / (std::string("functional_") + to_string(id) + ".csv"), profile_csv(rf[id].profile));
      }
      write_atomic(out / "functional_H1.csv",
                   profile_csv(eval_H(cfg.spec, 1, std::max(cfg.spec.a, sol.u1.maxCoeff())).profile()));
      write_atomic(out / "functional_H2.csv",
                   profile_csv(eval_H(cfg.spec, 2, std::max(cfg.spec.b, sol.u2.maxCoeff())).profile()));
    }
  } else {
    doc["audit"] = nullptr;
    doc["necessity"] = nullptr;
    doc["bounds"] = nullptr;
    summary += "bounds: skipped, no converged solution\n";
  }
  emit_json(cfg, out, "report.json", doc, code);
  return {code, summary};
}

}  // namespace koradial
