#include "koradial/classify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace koradial {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

CheckStatus all_of(std::initializer_list<CheckStatus> items) {
  bool unknown = false;
  for (CheckStatus s : items) {
    if (s == CheckStatus::Fail) return CheckStatus::Fail;
    if (s == CheckStatus::Indeterminate) unknown = true;
  }
  return unknown ? CheckStatus::Indeterminate : CheckStatus::Pass;
}

CheckStatus is_divergent(const ConvergenceVerdict& v) {
  if (v.indeterminate()) return CheckStatus::Indeterminate;
  return v.divergent() ? CheckStatus::Pass : CheckStatus::Fail;
}

CheckStatus is_finite(const ConvergenceVerdict& v) {
  if (v.indeterminate()) return CheckStatus::Indeterminate;
  return v.finite() ? CheckStatus::Pass : CheckStatus::Fail;
}

CheckStatus holds(bool b) { return b ? CheckStatus::Pass : CheckStatus::Fail; }

}  // namespace

const char* to_string(BehaviorKind k) {
  switch (k) {
    case BehaviorKind::F: return "F";
    case BehaviorKind::I: return "I";
    case BehaviorKind::SF1: return "SF1";
    case BehaviorKind::SF2: return "SF2";
    case BehaviorKind::Indeterminate: return "indeterminate";
  }
  return "?";
}

const char* to_string(Regime r) {
  switch (r) {
    case Regime::Classification: return "classification";
    case Regime::Bounded: return "bounded";
    case Regime::FirstLarge: return "first_large";
    case Regime::SecondLarge: return "second_large";
    case Regime::FirstSideBounded: return "first_side_bounded";
    case Regime::SecondSideBounded: return "second_side_bounded";
    case Regime::None: return "none";
    case Regime::Indeterminate: return "indeterminate";
  }
  return "?";
}

WeightEvidence weight_evidence(const ProblemSpec& spec, const WeightOptions& opts) {
  return {weight_threshold(spec.p1, spec.N, opts.R_probe, opts.samples),
          weight_threshold(spec.p2, spec.N, opts.R_probe, opts.samples)};
}

CheckStatus strictly_below_finite(const ConvergenceVerdict& lhs, const ConvergenceVerdict& rhs) {
  if (rhs.divergent()) return CheckStatus::Fail;
  if (lhs.divergent() && rhs.finite()) return CheckStatus::Fail;
  if (!lhs.finite() || !rhs.finite()) return CheckStatus::Indeterminate;
  const double err = lhs.error_estimate + rhs.error_estimate;
  if (rhs.value - lhs.value > err) return CheckStatus::Pass;
  if (lhs.value - rhs.value >= -err && lhs.value - rhs.value <= err) return CheckStatus::Indeterminate;
  return CheckStatus::Fail;
}

GateReport gate_from_evidence(const FunctionalLimits& L, const WeightEvidence& W) {
  GateReport g;
  g.limits = L;
  g.weights = W;
  const CheckStatus below1 = strictly_below_finite(L.P3, L.H1);
  const CheckStatus below2 = strictly_below_finite(L.Q3, L.H2);
  g.conditions = {
      {Regime::Classification, all_of({is_divergent(L.H1), is_divergent(L.H2)})},
      {Regime::Bounded, all_of({below1, below2})},
      {Regime::FirstLarge, all_of({is_divergent(L.H1), is_divergent(L.P1), below2})},
      {Regime::SecondLarge, all_of({is_divergent(L.H2), is_divergent(L.Q1), below1})},
      {Regime::FirstSideBounded, all_of({holds(W.p1.pass), is_divergent(L.H1), is_finite(L.P2), below2})},
      {Regime::SecondSideBounded, all_of({holds(W.p2.pass), is_divergent(L.H2), is_finite(L.Q2), below1})},
  };
  bool unknown = false;
  for (const auto& [regime, status] : g.conditions) {
    if (status == CheckStatus::Pass) {
      g.regime = regime;
      g.reason = std::string("hypotheses of the ") + to_string(regime) + " regime hold";
      return g;
    }
    if (status == CheckStatus::Indeterminate) unknown = true;
  }
  g.regime = unknown ? Regime::Indeterminate : Regime::None;
  g.reason = unknown ? "some consulted limit is indeterminate" : "no existence hypothesis holds";
  return g;
}

GateReport existence_gate(const ProblemSpec& spec, const LimitOptions& limits, const WeightOptions& weights) {
  spec.validate();
  return gate_from_evidence(functional_limits(spec, limits), weight_evidence(spec, weights));
}

BehaviorClass classify_evidence(const FunctionalLimits& L, const WeightEvidence& W) {
  BehaviorClass c;
  c.evidence = L;
  c.weights = W;
  if (!L.H1.divergent() || !L.H2.divergent()) {
    c.reason = "H1 and H2 must both diverge (H1 " + std::string(to_string(L.H1.kind)) + ", H2 " +
               to_string(L.H2.kind) + ")";
    return c;
  }
  for (const auto* v : {&L.P1, &L.Q1, &L.P2, &L.Q2}) {
    if (v->indeterminate()) {
      c.reason = "indeterminate limit among P1, Q1, P2, Q2";
      return c;
    }
  }
  if (L.P2.finite() && L.Q2.finite() && W.p1.pass && W.p2.pass) c.matched.push_back(BehaviorKind::F);
  if (L.P1.divergent() && L.Q1.divergent()) c.matched.push_back(BehaviorKind::I);
  if (L.P2.finite() && L.Q1.divergent() && W.p1.pass) c.matched.push_back(BehaviorKind::SF1);
  if (L.P1.divergent() && L.Q2.finite() && W.p2.pass) c.matched.push_back(BehaviorKind::SF2);

  if (c.matched.size() == 1) {
    c.kind = c.matched.front();
    c.reason = std::string("evidence matches ") + to_string(c.kind);
  } else if (c.matched.empty()) {
    c.reason = "evidence matches no behavior pattern";
  } else {
    c.reason = "evidence matches several behavior patterns";
  }
  return c;
}

BehaviorClass classify_behavior(const ProblemSpec& spec, const LimitOptions& limits, const WeightOptions& weights) {
  spec.validate();
  return classify_evidence(functional_limits(spec, limits), weight_evidence(spec, weights));
}

NecessityReport check_necessity_v(const ProblemSpec& spec, const SolutionPair& sol, const FunctionalLimits& L,
                                  const WeightEvidence& W, double largeness_factor) {
  NecessityReport rep;
  if (!sol.converged()) {
    rep.reason = "solution did not converge";
    return rep;
  }
  const Index n = sol.grid->size();
  const double threshold = largeness_factor * std::max(spec.a, spec.b);
  auto large = [&](const Vector& u) { return u[n - 1] >= threshold && u[n - 1] - u[n - 2] > 0.0; };
  if (!large(sol.u1) || !large(sol.u2)) {
    rep.reason = "solution is not large in both components (threshold " + fmt(threshold) + ")";
    return rep;
  }
  rep.applicable = true;
  if (!W.p1.pass || !W.p2.pass) {
    rep.reason = "weight monotonicity condition fails; nothing to check";
    return rep;
  }
  if (L.P2.finite() && L.Q2.finite()) {
    rep.consistent = false;
    rep.reason = "large solution but P2 and Q2 both finite";
  } else {
    rep.reason = "P2 or Q2 not finite, as required for a large solution";
  }
  return rep;
}

bool BoundReport::pass(double slack) const {
  return first.worst_lower >= -slack && first.worst_upper >= -slack && second.worst_lower >= -slack &&
         second.worst_upper >= -slack;
}

BoundReport check_bounds(const ProblemSpec& spec, const SolutionPair& sol) {
  spec.validate();
  if (!sol.grid || sol.grid->front() != 0.0) throw InvalidArgument("check_bounds: solution grid must start at 0");
  const GridPtr& grid = sol.grid;
  const Grid& g = *grid;
  const Index n = g.size();
  if (sol.u1.size() != n || sol.u2.size() != n) throw InvalidArgument("check_bounds: solution does not match its grid");

  auto [P1, Q1] = eval_P1_Q1(spec, grid);
  auto [P3, Q3] = eval_P3_Q3(spec, grid);

  BoundReport rep;
  rep.grid = grid;
  for (int c = 1; c <= 2; ++c) {
    SideBounds& s = c == 1 ? rep.first : rep.second;
    const Vector& u = c == 1 ? sol.u1 : sol.u2;
    const Profile& low = c == 1 ? P1 : Q1;
    const Profile& up = c == 1 ? P3 : Q3;
    const double center = c == 1 ? spec.a : spec.b;
    const double root = std::sqrt(c == 1 ? spec.cbar1 : spec.cbar2);

    InverseRootIntegral H = eval_H(spec, c, std::max(center, u.maxCoeff()));
    s.lower_margin.resize(n);
    s.upper_margin.resize(n);
    s.saturated.assign(static_cast<std::size_t>(n), false);
    s.worst_lower = s.worst_upper = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
      const double scale = 1.0 + std::abs(u[i]);
      s.lower_margin[i] = (u[i] - (center + low.value(i))) / scale;
      const double y = root * up.value(i);
      double bound;
      try {
        H = extend_to_cover(H, y);
        bound = H.inverse(y);
      } catch (const RangeError&) {
        bound = H.upper();
        s.saturated[static_cast<std::size_t>(i)] = true;
        ++s.saturated_nodes;
      }
      s.upper_margin[i] = (bound - u[i]) / scale;
      if (s.lower_margin[i] < s.worst_lower) {
        s.worst_lower = s.lower_margin[i];
        s.r_worst_lower = g.node(i);
      }
      if (s.upper_margin[i] < s.worst_upper) {
        s.worst_upper = s.upper_margin[i];
        s.r_worst_upper = g.node(i);
      }
    }
  }
  return rep;
}

}  // namespace koradial
