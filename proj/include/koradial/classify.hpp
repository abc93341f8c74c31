#pragma once

#include <string>
#include <vector>

#include "koradial/functionals.hpp"
#include "koradial/problem.hpp"
#include "koradial/solver.hpp"

namespace koradial {

/// Behavior at infinity: both bounded (F), both large (I), u1 bounded and
/// u2 large (SF1), u1 large and u2 bounded (SF2).
enum class BehaviorKind { F, I, SF1, SF2, Indeterminate };

const char* to_string(BehaviorKind k);

/// r^(2N-2) p_i nondecreasing for large r, per weight.
struct WeightEvidence {
  WeightThreshold p1, p2;
};

struct WeightOptions {
  double R_probe = 500.0;
  int samples = 1000;
};

WeightEvidence weight_evidence(const ProblemSpec& spec, const WeightOptions& opts = {});

/// Which existence hypothesis the limits support.
enum class Regime {
  Classification,   // H1(inf) = H2(inf) = inf
  Bounded,          // P3 < H1 < inf and Q3 < H2 < inf
  FirstLarge,       // H1, P1 divergent; Q3 < H2 < inf
  SecondLarge,      // H2, Q1 divergent; P3 < H1 < inf
  FirstSideBounded,   // p1 condition, H1 divergent, P2 finite; Q3 < H2 < inf
  SecondSideBounded,  // p2 condition, H2 divergent, Q2 finite; P3 < H1 < inf
  None,
  Indeterminate,
};

const char* to_string(Regime r);

struct GateReport {
  Regime regime = Regime::Indeterminate;
  std::vector<std::pair<Regime, CheckStatus>> conditions;  // every regime's status
  FunctionalLimits limits;
  WeightEvidence weights;
  std::string reason;
};

/// Tri-state test of lhs(inf) < rhs(inf) < inf with error-bar separation.
CheckStatus strictly_below_finite(const ConvergenceVerdict& lhs, const ConvergenceVerdict& rhs);

/// Gate from already computed evidence.
GateReport gate_from_evidence(const FunctionalLimits& limits, const WeightEvidence& weights);

GateReport existence_gate(const ProblemSpec& spec, const LimitOptions& limits = {}, const WeightOptions& weights = {});

struct BehaviorClass {
  BehaviorKind kind = BehaviorKind::Indeterminate;
  FunctionalLimits evidence;
  WeightEvidence weights;
  std::vector<BehaviorKind> matched;  // every pattern that held
  std::string reason;
};

/// Pure dispatch on the four evidence patterns. Requires both H limits
/// divergent; any indeterminate P1/Q1/P2/Q2 verdict, no match, or more than one
/// match yields Indeterminate.
BehaviorClass classify_evidence(const FunctionalLimits& limits, const WeightEvidence& weights);

BehaviorClass classify_behavior(const ProblemSpec& spec, const LimitOptions& limits = {},
                                const WeightOptions& weights = {});

struct NecessityReport {
  bool applicable = false;  // both components numerically large
  bool consistent = true;
  std::string reason;
};

/// If the solution looks large in both components and both weight conditions
/// hold, P2 and Q2 must not both be finite.
NecessityReport check_necessity_v(const ProblemSpec& spec, const SolutionPair& sol, const FunctionalLimits& limits,
                                  const WeightEvidence& weights, double largeness_factor = 1e3);

struct SideBounds {
  Vector lower_margin;  // (u - (c + P1)) / (1 + |u|)
  Vector upper_margin;  // (Hinv(sqrt(cbar) P3) - u) / (1 + |u|)
  std::vector<bool> saturated;  // inversion left H's computable range
  double worst_lower = 0.0, worst_upper = 0.0;
  double r_worst_lower = 0.0, r_worst_upper = 0.0;
  Index saturated_nodes = 0;
};

struct BoundReport {
  SideBounds first, second;
  GridPtr grid;

  bool pass(double slack = 1e-6) const;
};

/// c + P1 <= u1 <= H1^-1(sqrt(cbar1) P3) and the mirror, node by node.
BoundReport check_bounds(const ProblemSpec& spec, const SolutionPair& sol);

}  // namespace koradial
