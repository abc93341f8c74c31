#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "koradial/error.hpp"

namespace koradial {

using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Panelled 1-D grid. Each panel carries an odd number (>= 3) of uniformly
/// spaced nodes so that consecutive node pairs form Simpson panels.
class Grid {
 public:
  /// `breaks` strictly increasing; every panel gets `nodes_per_panel` nodes.
  static Grid from_breakpoints(std::span<const double> breaks, int nodes_per_panel);

  const Vector& nodes() const { return nodes_; }
  double node(Index i) const { return nodes_[i]; }
  Index size() const { return nodes_.size(); }
  double front() const { return nodes_[0]; }
  double back() const { return nodes_[nodes_.size() - 1]; }

  int panels() const { return static_cast<int>(breaks_.size()) - 1; }
  Index panel_begin(int p) const { return breaks_[static_cast<std::size_t>(p)]; }
  Index panel_end(int p) const { return breaks_[static_cast<std::size_t>(p) + 1]; }
  std::vector<double> panel_boundaries() const;

  /// Index i with nodes[i] <= r <= nodes[i+1]; r is clamped to the grid.
  Index locate(double r) const;

  bool operator==(const Grid& other) const { return breaks_ == other.breaks_ && nodes_ == other.nodes_; }

 private:
  Vector nodes_;
  std::vector<Index> breaks_;  // node index of each panel boundary
};

using GridPtr = std::shared_ptr<const Grid>;

/// Panel boundaries at R_max * (j / n_panels)^grading.
GridPtr make_grid(double R_max, int n_panels, double grading, int nodes_per_panel = 9);

struct ProbeGridOptions {
  int inner_panels = 32;
  double grading = 2.0;
  int panels_per_octave = 8;
  int nodes_per_panel = 9;
};

/// Graded grid on [0, R0] followed by `doublings` octaves, so that every
/// probe radius R0 * 2^j is a node.
GridPtr make_probe_grid(double R0, int doublings, const ProbeGridOptions& opts = {});

/// Sampled function on a grid with piecewise monotone cubic interpolation.
class Profile {
 public:
  Profile(GridPtr grid, Vector values);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const Vector& values() const { return values_; }
  double value(Index i) const { return values_[i]; }
  Index size() const { return values_.size(); }
  double back() const { return values_[values_.size() - 1]; }

  double operator()(double r) const;

  bool nondecreasing() const;

 private:
  GridPtr grid_;
  Vector values_;
  Vector slopes_;
};

bool same_grid(const Profile& a, const Profile& b);

/// Values of `f` at every node of the grid.
Vector sample(const std::function<double(double)>& f, const Grid& grid);

/// F(r) = integral of f from the first node to r.
Profile cumulative_integral(const Vector& integrand, const GridPtr& grid);
Profile cumulative_integral(const std::function<double(double)>& f, const GridPtr& grid);

/// K[v](r) = int_0^r t^(1-N) int_0^t s^(N-1) v(s) ds dt.
Profile nested_radial(const Profile& v, int N);
Profile nested_radial(const Vector& v, const GridPtr& grid, int N);

/// phi(r_i) = max of p over the nodes r_j <= r_i.
Profile running_max(const std::function<double(double)>& p, const GridPtr& grid);
Profile running_max(const Vector& p, const GridPtr& grid);

/// Numerical answer to "is F(inf) finite?".
struct ConvergenceVerdict {
  enum class Kind { Finite, Divergent, Indeterminate };

  Kind kind = Kind::Indeterminate;
  double value = 0.0;           // Finite only
  double error_estimate = 0.0;  // Finite only
  std::string rate_hint;
  std::vector<double> probe_radii;
  std::vector<double> probe_values;

  bool finite() const { return kind == Kind::Finite; }
  bool divergent() const { return kind == Kind::Divergent; }
  bool indeterminate() const { return kind == Kind::Indeterminate; }

  static ConvergenceVerdict make_finite(double value, double error);
  static ConvergenceVerdict make_divergent(std::string hint = {});
  static ConvergenceVerdict make_indeterminate(std::string reason);
};

const char* to_string(ConvergenceVerdict::Kind k);

struct TailOptions {
  double R0 = 8.0;
  int doublings = 40;
  double tol_tail = 1e-6;
  double cap = 1e12;
};

/// Probes F at R0 * 2^j, j = 0..doublings, and classifies the limit.
ConvergenceVerdict tail_limit(const std::function<double(double)>& F, const TailOptions& opts = {});

/// Same, from already computed probe values F(R0 * 2^j).
ConvergenceVerdict tail_limit_from_probes(std::span<const double> radii, std::span<const double> values,
                                          const TailOptions& opts);

}  // namespace koradial
