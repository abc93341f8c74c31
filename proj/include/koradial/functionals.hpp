#pragma once

#include <array>
#include <functional>
#include <string>
#include <utility>

#include "koradial/problem.hpp"
#include "koradial/quadrature.hpp"

namespace koradial {

enum class FunctionalId { G1, G2, P1, Q1, P2, Q2, P3, Q3, H1, H2 };

const char* to_string(FunctionalId id);

struct FunctionalProfile {
  FunctionalId which;
  Profile profile;
  std::string spec_fingerprint;
  bool saturated = false;  // an integrand overflowed and was clamped
};

/// Integrand values above this are clamped before integration.
inline constexpr double kSaturation = 1e290;

/// G1 = int_0^z s^(N-1) p2, G2 = int_0^z s^(N-1) p1 (note the index swap).
Profile eval_G(const ProblemSpec& spec, int which, const GridPtr& grid);

std::pair<Profile, Profile> eval_P1_Q1(const ProblemSpec& spec, const GridPtr& grid);
std::pair<Profile, Profile> eval_P2_Q2(const ProblemSpec& spec, const GridPtr& grid);
std::pair<Profile, Profile> eval_P3_Q3(const ProblemSpec& spec, const GridPtr& grid);

/// The eight radial functionals G1..Q3 on one shared grid.
class RadialFunctionals {
 public:
  static RadialFunctionals compute(const ProblemSpec& spec, const GridPtr& grid);

  const FunctionalProfile& operator[](FunctionalId id) const;
  const GridPtr& grid() const { return grid_; }

 private:
  GridPtr grid_;
  std::vector<FunctionalProfile> items_;
};

struct ValueGridOptions {
  double R0 = 8.0;  // first segment is [lower, lower * R0]
  int panels_per_octave = 8;
  int nodes_per_panel = 9;
  int mass_panels = 32;  // grid for the mass below the lower limit
  double mass_grading = 3.0;
  int max_octaves = 64;  // extension bound when inverting
  int tail_doublings = 60;  // probes for H(inf) and the classic integral
};

/// H(s) was asked for beyond the largest computed value.
class RangeError : public Error {
 public:
  RangeError(double largest, const std::string& what) : Error(what), largest_(largest) {}
  double largest() const { return largest_; }

 private:
  double largest_;
};

/// H(s) = int_lower^s ( int_0^t g )^(-1/2) dt on a geometric value grid
/// reaching lower * R0 * 2^octaves. H1 and H2 and the classic
/// Keller-Osserman integral are all of this form.
class InverseRootIntegral {
 public:
  InverseRootIntegral(std::function<double(double)> g, double lower, int octaves, ValueGridOptions opts = {});

  double lower() const { return lower_; }
  double upper() const { return grid_->back(); }
  int octaves() const { return octaves_; }
  const ValueGridOptions& options() const { return opts_; }

  const Profile& profile() const { return H_; }
  const Profile& mass() const { return mass_; }
  double max_value() const { return H_.back(); }

  /// H(s) for lower <= s <= upper; nodes are exact, between nodes a local
  /// Gauss-Legendre continuation is used.
  double operator()(double s) const;

  /// (int_0^s g)^(-1/2), the derivative of H.
  double derivative(double s) const;

  /// s with H(s) = y on this range; throws RangeError if y > max_value().
  double inverse(double y) const;

  InverseRootIntegral extended(int octaves) const;

  /// lower * R0 * 2^j for j = 0..octaves; all of them are grid nodes.
  std::vector<double> probe_points() const;
  std::vector<double> probe_values() const;

 private:
  struct Parts;
  explicit InverseRootIntegral(Parts parts);
  static Parts build(std::function<double(double)> g, double lower, int octaves, const ValueGridOptions& opts);

  double mass_at(Index i, double s) const;

  std::function<double(double)> g_;
  double lower_;
  int octaves_;
  ValueGridOptions opts_;
  double mass_lower_ = 0.0;
  GridPtr grid_;
  Profile mass_;
  Profile H_;
  std::vector<Index> probe_index_;
};

/// H1 (which = 1, inner h1(M1 f2(t)), from a) or H2 (which = 2, inner
/// h2(M2 f1(t)), from b), computed at least up to `upper`.
InverseRootIntegral eval_H(const ProblemSpec& spec, int which, double upper, const ValueGridOptions& opts = {});

/// H extended by doubling its upper limit until it reaches y, bounded by
/// opts.max_octaves. Returns H unchanged if it already covers y.
InverseRootIntegral extend_to_cover(const InverseRootIntegral& H, double y);

/// Inverse with on-demand extension; throws RangeError carrying the largest
/// computed value when y lies beyond every allowed extension.
double h_inverse(const InverseRootIntegral& H, double y);

/// Monotone bisection on an interpolated increasing profile, to relative
/// tolerance 1e-10.
double h_inverse(const Profile& H, double y);

/// Verdict on int_t0^inf (int_0^t f)^(-1/2) dt. Divergent means the classic
/// Keller-Osserman condition holds.
ConvergenceVerdict ko_classic(const ScalarFn& f, double t0 = 1.0, const TailOptions& tail = {},
                              const ValueGridOptions& opts = {});

struct LimitOptions {
  TailOptions tail;
  ProbeGridOptions probe;
  ValueGridOptions value;
};

/// The improper limits consulted by the classifier.
struct FunctionalLimits {
  ConvergenceVerdict P1, Q1, P2, Q2, P3, Q3, H1, H2;
  std::string spec_fingerprint;
};

FunctionalLimits functional_limits(const ProblemSpec& spec, const LimitOptions& opts = {});

}  // namespace koradial
