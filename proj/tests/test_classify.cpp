#include <doctest.h>

#include <array>
#include <cmath>

#include "koradial/classify.hpp"

using namespace koradial;

namespace {

using Kind = ConvergenceVerdict::Kind;

ConvergenceVerdict verdict(Kind k, double value = 1.0, double err = 0.0) {
  switch (k) {
    case Kind::Finite: return ConvergenceVerdict::make_finite(value, err);
    case Kind::Divergent: return ConvergenceVerdict::make_divergent();
    default: return ConvergenceVerdict::make_indeterminate("synthetic");
  }
}

WeightThreshold weight(bool pass) {
  WeightThreshold w;
  w.pass = pass;
  return w;
}

FunctionalLimits limits(Kind p1, Kind q1, Kind p2, Kind q2, Kind h1 = Kind::Divergent, Kind h2 = Kind::Divergent) {
  FunctionalLimits L;
  L.P1 = verdict(p1);
  L.Q1 = verdict(q1);
  L.P2 = verdict(p2);
  L.Q2 = verdict(q2);
  L.P3 = L.Q3 = verdict(Kind::Divergent);
  L.H1 = verdict(h1, 5.0);
  L.H2 = verdict(h2, 5.0);
  return L;
}

// The four behavior patterns as data. 'any' leaves a slot unconstrained.
struct Pattern {
  BehaviorKind kind;
  std::optional<Kind> p1, q1, p2, q2;
  bool needs_w1, needs_w2;
};

const std::array<Pattern, 4> kPatterns = {{
    {BehaviorKind::F, {}, {}, Kind::Finite, Kind::Finite, true, true},
    {BehaviorKind::I, Kind::Divergent, Kind::Divergent, {}, {}, false, false},
    {BehaviorKind::SF1, {}, Kind::Divergent, Kind::Finite, {}, true, false},
    {BehaviorKind::SF2, Kind::Divergent, {}, {}, Kind::Finite, false, true},
}};

BehaviorKind expected(const std::array<Kind, 4>& v, bool w1, bool w2) {
  for (Kind k : v) {
    if (k == Kind::Indeterminate) return BehaviorKind::Indeterminate;
  }
  auto fits = [](std::optional<Kind> want, Kind got) { return !want || *want == got; };
  int hits = 0;
  BehaviorKind found = BehaviorKind::Indeterminate;
  for (const Pattern& p : kPatterns) {
    if (fits(p.p1, v[0]) && fits(p.q1, v[1]) && fits(p.p2, v[2]) && fits(p.q2, v[3]) && (!p.needs_w1 || w1) &&
        (!p.needs_w2 || w2)) {
      ++hits;
      found = p.kind;
    }
  }
  return hits == 1 ? found : BehaviorKind::Indeterminate;
}

BehaviorKind mirror(BehaviorKind k) {
  return k == BehaviorKind::SF1 ? BehaviorKind::SF2 : k == BehaviorKind::SF2 ? BehaviorKind::SF1 : k;
}

constexpr std::array<Kind, 3> kKinds = {Kind::Finite, Kind::Divergent, Kind::Indeterminate};

}  // namespace

TEST_CASE("dispatch over all 3^4 verdict patterns and weight outcomes") {
  int decisive = 0, checked = 0;
  for (Kind p1 : kKinds)
    for (Kind q1 : kKinds)
      for (Kind p2 : kKinds)
        for (Kind q2 : kKinds)
          for (int w = 0; w < 4; ++w) {
            const bool w1 = w & 1, w2 = w & 2;
            WeightEvidence W{weight(w1), weight(w2)};
            BehaviorClass c = classify_evidence(limits(p1, q1, p2, q2), W);
            BehaviorKind want = expected({p1, q1, p2, q2}, w1, w2);
            INFO(to_string(p1), " ", to_string(q1), " ", to_string(p2), " ", to_string(q2), " w1=", w1, " w2=", w2);
            CHECK(c.kind == want);
            if (c.kind != BehaviorKind::Indeterminate) {
              ++decisive;
              CHECK(c.matched.size() == 1);
              CHECK(c.matched.front() == c.kind);
            } else {
              CHECK(c.matched.size() != 1);
              CHECK_FALSE(c.reason.empty());
            }
            ++checked;
          }
  CHECK(checked == 81 * 4);
  CHECK(decisive > 0);
}

TEST_CASE("swap symmetry of the dispatch") {
  for (Kind p1 : kKinds)
    for (Kind q1 : kKinds)
      for (Kind p2 : kKinds)
        for (Kind q2 : kKinds)
          for (int w = 0; w < 4; ++w) {
            const bool w1 = w & 1, w2 = w & 2;
            auto a = classify_evidence(limits(p1, q1, p2, q2), {weight(w1), weight(w2)});
            auto b = classify_evidence(limits(q1, p1, q2, p2), {weight(w2), weight(w1)});
            CHECK(b.kind == mirror(a.kind));
          }
}

TEST_CASE("no class unless both H diverge") {
  for (Kind h1 : kKinds)
    for (Kind h2 : kKinds) {
      if (h1 == Kind::Divergent && h2 == Kind::Divergent) continue;
      auto c = classify_evidence(limits(Kind::Divergent, Kind::Divergent, Kind::Divergent, Kind::Divergent, h1, h2),
                                 {weight(true), weight(true)});
      CHECK(c.kind == BehaviorKind::Indeterminate);
      CHECK(c.matched.empty());
    }
}

TEST_CASE("strict comparison with error bars") {
  auto F = [](double v, double e = 0.0) { return ConvergenceVerdict::make_finite(v, e); };
  auto D = ConvergenceVerdict::make_divergent();
  auto U = ConvergenceVerdict::make_indeterminate("x");
  CHECK(strictly_below_finite(F(1), F(2)) == CheckStatus::Pass);
  CHECK(strictly_below_finite(F(2), F(1)) == CheckStatus::Fail);
  CHECK(strictly_below_finite(F(1, 0.3), F(1.5, 0.3)) == CheckStatus::Indeterminate);
  CHECK(strictly_below_finite(F(1), D) == CheckStatus::Fail);
  CHECK(strictly_below_finite(D, F(1)) == CheckStatus::Fail);
  CHECK(strictly_below_finite(U, F(1)) == CheckStatus::Indeterminate);
  CHECK(strictly_below_finite(F(1), U) == CheckStatus::Indeterminate);
}

TEST_CASE("gate regimes from synthetic evidence") {
  const WeightEvidence yes{weight(true), weight(true)};
  auto with = [](FunctionalLimits L, ConvergenceVerdict P3, ConvergenceVerdict H1, ConvergenceVerdict Q3,
                 ConvergenceVerdict H2) {
    L.P3 = P3;
    L.H1 = H1;
    L.Q3 = Q3;
    L.H2 = H2;
    return L;
  };
  auto F = [](double v) { return ConvergenceVerdict::make_finite(v, 1e-9); };
  auto D = ConvergenceVerdict::make_divergent();
  auto U = ConvergenceVerdict::make_indeterminate("x");
  const auto base = limits(Kind::Divergent, Kind::Divergent, Kind::Finite, Kind::Finite);

  CHECK(gate_from_evidence(with(base, D, D, D, D), yes).regime == Regime::Classification);
  CHECK(gate_from_evidence(with(base, F(1), F(2), F(1), F(2)), yes).regime == Regime::Bounded);
  CHECK(gate_from_evidence(with(base, D, D, F(1), F(2)), yes).regime == Regime::FirstLarge);
  CHECK(gate_from_evidence(with(base, F(1), F(2), D, D), yes).regime == Regime::SecondLarge);
  CHECK(gate_from_evidence(with(base, F(3), F(2), F(3), F(2)), yes).regime == Regime::None);
  CHECK(gate_from_evidence(with(base, U, F(2), U, F(2)), yes).regime == Regime::Indeterminate);

  auto side = limits(Kind::Finite, Kind::Finite, Kind::Finite, Kind::Finite);
  CHECK(gate_from_evidence(with(side, D, D, F(1), F(2)), yes).regime == Regime::FirstSideBounded);
  CHECK(gate_from_evidence(with(side, F(1), F(2), D, D), yes).regime == Regime::SecondSideBounded);
  CHECK(gate_from_evidence(with(side, D, D, F(1), F(2)), {weight(false), weight(true)}).regime == Regime::None);

  auto g = gate_from_evidence(with(base, D, D, D, D), yes);
  CHECK(g.conditions.size() == 6);
  CHECK_FALSE(g.reason.empty());
}

TEST_CASE("gate swap symmetry") {
  const auto F = [](double v) { return ConvergenceVerdict::make_finite(v, 1e-9); };
  const auto D = ConvergenceVerdict::make_divergent();
  auto L = limits(Kind::Divergent, Kind::Finite, Kind::Finite, Kind::Finite);
  L.P3 = D;
  L.H1 = D;
  L.Q3 = F(1);
  L.H2 = F(2);
  FunctionalLimits M = L;
  std::swap(M.P1, M.Q1);
  std::swap(M.P2, M.Q2);
  std::swap(M.P3, M.Q3);
  std::swap(M.H1, M.H2);
  auto a = gate_from_evidence(L, {weight(true), weight(false)});
  auto b = gate_from_evidence(M, {weight(false), weight(true)});
  CHECK(a.regime == Regime::FirstLarge);
  CHECK(b.regime == Regime::SecondLarge);
}

TEST_CASE("end-to-end classification of representative systems") {
  auto make = [](const char* p1, const char* p2, double a, double b) {
    ProblemSpec s;
    s.N = 3;
    s.a = a;
    s.b = b;
    s.p1 = ScalarFn::from_source(p1);
    s.p2 = ScalarFn::from_source(p2);
    s.f1 = s.f2 = s.h1 = s.h2 = s.w1 = s.w2 = ScalarFn::power(0.5);
    return s;
  };
  CHECK(classify_behavior(make("1", "1", 1, 1)).kind == BehaviorKind::I);
  CHECK(classify_behavior(make("(1+x)^(-4)", "(1+x)^(-4)", 100, 100)).kind == BehaviorKind::F);
  CHECK(classify_behavior(make("(1+x)^(-4)", "1", 100, 1)).kind == BehaviorKind::SF1);
  CHECK(classify_behavior(make("1", "(1+x)^(-4)", 1, 100)).kind == BehaviorKind::SF2);
  ProblemSpec s = make("1", "(1+x)^(-4)", 1, 100);
  CHECK(classify_behavior(s.swapped()).kind == BehaviorKind::SF1);
  CHECK(existence_gate(s).regime == Regime::Classification);

  ProblemSpec z = make("0", "0", 2, 3);
  z.f1 = z.f2 = z.h1 = z.h2 = z.w1 = z.w2 = ScalarFn::power(2);
  CHECK(existence_gate(z).regime == Regime::Bounded);
}

TEST_CASE("necessity check on large solutions") {
  ProblemSpec s;
  s.N = 3;
  s.a = s.b = 1;
  s.p1 = s.p2 = ScalarFn::constant(1);
  s.f1 = s.f2 = s.h1 = s.h2 = s.w1 = s.w2 = ScalarFn::power(0.5);
  SolveOptions o;
  o.R_max = 100;
  SolutionPair sol = picard_solve(s, o);
  REQUIRE(sol.converged());
  const WeightEvidence yes{weight(true), weight(true)};
  auto ok = check_necessity_v(s, sol, limits(Kind::Divergent, Kind::Divergent, Kind::Divergent, Kind::Divergent), yes);
  CHECK(ok.applicable);
  CHECK(ok.consistent);
  auto bad = check_necessity_v(s, sol, limits(Kind::Finite, Kind::Finite, Kind::Finite, Kind::Finite), yes);
  CHECK(bad.applicable);
  CHECK_FALSE(bad.consistent);
  o.R_max = 2;
  auto small = check_necessity_v(s, picard_solve(s, o), limits(Kind::Finite, Kind::Finite, Kind::Finite, Kind::Finite),
                                 yes);
  CHECK_FALSE(small.applicable);
  CHECK(small.consistent);
}

TEST_CASE("two-sided bounds hold on computed solutions") {
  auto make = [](const char* p1, const char* p2, double a, double b, double alpha) {
    ProblemSpec s;
    s.N = 3;
    s.a = a;
    s.b = b;
    s.p1 = ScalarFn::from_source(p1);
    s.p2 = ScalarFn::from_source(p2);
    s.f1 = s.f2 = s.h1 = s.h2 = s.w1 = s.w2 = ScalarFn::power(alpha);
    return s;
  };
  SolveOptions o;
  o.R_max = 20;
  for (const ProblemSpec& s : {make("1", "1", 1, 1, 0.5), make("1", "1", 1, 1, 1.0),
                               make("(1+x)^(-4)", "1", 100, 1, 0.5), make("0", "0", 2, 3, 2.0)}) {
    SolutionPair sol = picard_solve(s, o);
    REQUIRE(sol.converged());
    BoundReport rep = check_bounds(s, sol);
    CHECK(rep.pass());
    CHECK(rep.first.lower_margin.size() == sol.grid->size());
  }
}

TEST_CASE("bounds catch a perturbed solution") {
  ProblemSpec s;
  s.N = 3;
  s.a = s.b = 1;
  s.p1 = s.p2 = ScalarFn::constant(1);
  s.f1 = s.f2 = s.h1 = s.h2 = s.w1 = s.w2 = ScalarFn::power(0.5);
  SolutionPair sol = picard_solve(s);
  REQUIRE(sol.converged());
  SolutionPair low = sol;
  low.u1[10] = 0.5 * s.a;  // below the central value
  BoundReport r = check_bounds(s, low);
  CHECK_FALSE(r.pass());
  CHECK(r.first.worst_lower < 0);
  CHECK(r.first.r_worst_lower == sol.grid->node(10));
  SolutionPair high = sol;
  high.u2 *= 1e3;
  CHECK(check_bounds(s, high).second.worst_upper < 0);
}
