#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "koradial/problem.hpp"
#include "koradial/quadrature.hpp"

namespace koradial {

enum class SolveStatus { Converged, NoConvergence, BlowUp };

const char* to_string(SolveStatus s);

struct SolveOptions {
  double R_max = 10.0;
  int panels = 32;
  double grading = 2.0;
  int nodes_per_panel = 9;
  double tol = 1e-8;
  int max_iter = 200;
  bool keep_iterates = false;
};

/// Default solution grid for the given options.
GridPtr solution_grid(const SolveOptions& opts);

struct SolutionPair {
  GridPtr grid;
  Vector u1, u2;
  int iterations = 0;
  std::vector<double> increment_history;  // max over both components per iteration
  SolveStatus status = SolveStatus::NoConvergence;
  std::string method;  // "picard" or "ivp_oracle"
  std::optional<double> blowup_radius;
  std::string spec_fingerprint;
  std::vector<std::pair<Vector, Vector>> iterates;  // k = 0, 1, ... when kept

  bool converged() const { return status == SolveStatus::Converged; }
  Profile profile1() const { return Profile(grid, u1); }
  Profile profile2() const { return Profile(grid, u2); }
};

/// An iterate decreased at some node; the quadrature failed to preserve the
/// order of the exact map.
class MonotonicityViolation : public Error {
 public:
  MonotonicityViolation(int iteration, int component, Index node, double r, double previous, double current);

  int iteration;
  int component;
  Index node;
  double r, previous, current;
};

/// Successive approximation from (a, b): u1^k = a + K[p1 f1(u2^(k-1))],
/// u2^k = b + K[p2 f2(u1^(k-1))].
SolutionPair picard_solve(const ProblemSpec& spec, const GridPtr& grid, double tol = 1e-8, int max_iter = 200,
                          bool keep_iterates = false);
SolutionPair picard_solve(const ProblemSpec& spec, const SolveOptions& opts = {});

/// Fixed-step RK4 on the radial ODE with a series start, landing on the grid
/// nodes; steps never exceed h.
SolutionPair ivp_oracle(const ProblemSpec& spec, const GridPtr& grid, double h = 1e-3);
SolutionPair ivp_oracle(const ProblemSpec& spec, double R_max, double h = 1e-3);

/// Sup over nodes of |u_i - (c_i + K[p_i f_i(u_j)])| / (1 + |u_i|).
std::pair<double, double> residual(const ProblemSpec& spec, const SolutionPair& sol);

struct IterateAudit {
  double worst_k_margin = 0.0;  // min of (u^k - u^(k-1)) / (1 + |u^k|)
  double worst_r_margin = 0.0;  // min of (u(r_(i+1)) - u(r_i)) / (1 + |u|)
  double worst_pen_margin = std::numeric_limits<double>::infinity();  // min of (sqrt(cbar) P3 - H(u)) / (1 + sqrt(cbar) P3)
  Index pen_checked = 0;
  Index pen_skipped = 0;  // u beyond the range where H could be computed
  std::string detail;

  bool monotone_k() const { return worst_k_margin >= -1e-12; }
  bool monotone_r() const { return worst_r_margin >= -1e-12; }
  bool pen_ok() const { return worst_pen_margin >= -1e-6; }
  bool pass() const { return monotone_k() && monotone_r() && pen_ok(); }
};

/// Checks the kept iterates: nondecreasing in k and in r, and the a priori
/// bound H1(u1^k(r)) <= sqrt(cbar1) P3(r) with its mirror.
IterateAudit audit_iterates(const ProblemSpec& spec, const SolutionPair& sol);

}  // namespace koradial
