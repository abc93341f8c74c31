#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "koradial/error.hpp"
#include "koradial/expr.hpp"

namespace koradial {

enum class Monotonicity { Nondecreasing, Unknown };

/// Nonnegative function on [0, inf) with declared metadata. The metadata is
/// informational; the hypothesis checks never trust it.
struct ScalarFn {
  std::function<double(double)> eval;
  Monotonicity declared_monotone = Monotonicity::Unknown;
  bool declared_zero_at_zero = false;
  std::string label;

  double operator()(double x) const { return eval(x); }

  static ScalarFn from_expression(const expr::Expression& e, const expr::Bindings& bindings = {});
  static ScalarFn from_source(std::string_view source, const expr::Bindings& bindings = {});
  static ScalarFn constant(double c);
  static ScalarFn power(double alpha);
};

/// One instance of  Δu₁ = p₁(|x|) f₁(u₂),  Δu₂ = p₂(|x|) f₂(u₁)  in R^N with
/// central values (a, b) and the growth data of the (C2) splitting.
struct ProblemSpec {
  int N = 3;
  double a = 1.0;
  double b = 1.0;
  ScalarFn p1, p2;
  ScalarFn f1, f2;
  ScalarFn h1, h2;
  ScalarFn w1, w2;
  double cbar1 = 1.0;
  double cbar2 = 1.0;
  double eps = 0.5;

  /// Throws InvalidArgument if a structural invariant fails.
  void validate() const;

  /// The same system with the two equations exchanged.
  ProblemSpec swapped() const;

  /// Stable hash of the numeric inputs and function labels, hex encoded.
  std::string fingerprint() const;
};

struct BigM {
  double M1 = 1.0;
  double M2 = 1.0;
};

BigM big_m(const ProblemSpec& spec);

enum class CheckStatus { Pass, Fail, Indeterminate };

const char* to_string(CheckStatus s);

/// A concrete violation: the inputs and both sides of the inequality.
struct Witness {
  std::vector<std::pair<std::string, double>> inputs;
  double lhs = 0.0;
  double rhs = 0.0;
  std::string relation;  // e.g. "f1(t*w) <= cbar1*h1(t)*w1(w)"
};

struct HypothesisEntry {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  std::vector<Witness> witnesses;
  std::string sampling;
  std::string reason;
};

struct HypothesisReport {
  std::vector<HypothesisEntry> entries;

  /// Fail dominates indeterminate, which dominates pass.
  CheckStatus overall() const;
};

inline constexpr double kTolZero = 1e-12;
inline constexpr double kTolC2 = 1e-9;

/// (P1): p sampled nonnegative and finite on Chebyshev points of [0, R].
HypothesisEntry check_p1(const ScalarFn& p, const std::string& name, double R, int n);

/// (C1): f(0) = 0, f >= 0, nondecreasing, f(s) > 0 for sampled s > 0.
HypothesisEntry check_c1(const ScalarFn& f, const std::string& name, double R, int n);

/// Nonnegative and nondecreasing on [0, R]; used for h1, h2, w1, w2.
HypothesisEntry check_growth(const ScalarFn& g, const std::string& name, double R, int n);

/// One half of (C2): f(t*w) <= cbar*h(t)*omega(w) on a log-spaced n x n grid
/// of [t_min, t_max] x [1, w_max].
HypothesisEntry check_c2_side(const ScalarFn& f, const ScalarFn& h, const ScalarFn& omega, double cbar, double t_min,
                              double t_max, double w_max, int n, const std::string& name);

/// Both halves of (C2), starting at M1*f2(a) and M2*f1(b) respectively.
HypothesisEntry check_c2(const ProblemSpec& spec, double t_max, double w_max, int n);

/// Re-evaluates a stored C2 witness; true iff it still violates the inequality.
bool c2_witness_violates(const ScalarFn& f, const ScalarFn& h, const ScalarFn& omega, double cbar, const Witness& w);

struct WeightThreshold {
  bool pass = false;
  double threshold = 0.0;  // smallest sampled R with r^(2N-2) p(r) nondecreasing on [R, R_probe]
  double R_probe = 0.0;
  int samples = 0;
  std::string reason;
};

WeightThreshold weight_threshold(const ScalarFn& p, int N, double R_probe, int n);

struct HypothesisOptions {
  double R_weights = 100.0;  // sampling range for p1, p2
  double R_values = 100.0;   // sampling range for f, h, omega
  int n = 200;
  double c2_t_factor = 100.0;  // t_max = factor * max(M1 f2(a), M2 f1(b))
  double c2_w_max = 100.0;
  int c2_n = 60;
};

HypothesisReport check_hypotheses(const ProblemSpec& spec, const HypothesisOptions& opts = {});

}  // namespace koradial
