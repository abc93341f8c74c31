#include "koradial/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include "koradial/functionals.hpp"

namespace koradial {

namespace {

constexpr double kOverflow = 1e300;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

bool overflowed(double v) { return !std::isfinite(v) || std::abs(v) > kOverflow; }

// First node whose value overflowed, if any.
std::optional<Index> first_overflow(const Vector& v) {
  for (Index i = 0; i < v.size(); ++i) {
    if (overflowed(v[i])) return i;
  }
  return std::nullopt;
}

Vector forcing(const Vector& p, const ScalarFn& f, const Vector& u) {
  Vector v(u.size());
  for (Index i = 0; i < u.size(); ++i) v[i] = p[i] * f(u[i]);
  return v;
}

}  // namespace

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::NoConvergence: return "no_convergence";
    case SolveStatus::BlowUp: return "blow_up";
  }
  return "?";
}

GridPtr solution_grid(const SolveOptions& opts) {
  return make_grid(opts.R_max, opts.panels, opts.grading, opts.nodes_per_panel);
}

MonotonicityViolation::MonotonicityViolation(int iteration_, int component_, Index node_, double r_,
                                             double previous_, double current_)
    : Error("monotonicity violated at iteration " + std::to_string(iteration_) + ": u" +
            std::to_string(component_) + " dropped from " + fmt(previous_) + " to " + fmt(current_) + " at r=" +
            fmt(r_) + " (node " + std::to_string(node_) + ")"),
      iteration(iteration_),
      component(component_),
      node(node_),
      r(r_),
      previous(previous_),
      current(current_) {}

SolutionPair picard_solve(const ProblemSpec& spec, const GridPtr& grid, double tol, int max_iter,
                          bool keep_iterates) {
  spec.validate();
  if (!(tol > 0.0)) throw InvalidArgument("picard_solve: tol must be positive");
  if (max_iter < 1) throw InvalidArgument("picard_solve: max_iter must be >= 1");
  if (!grid || grid->front() != 0.0) throw InvalidArgument("picard_solve: grid must start at 0");

  const Grid& g = *grid;
  const Vector p1 = sample(spec.p1.eval, g), p2 = sample(spec.p2.eval, g);

  SolutionPair sol;
  sol.grid = grid;
  sol.method = "picard";
  sol.spec_fingerprint = spec.fingerprint();
  sol.u1 = Vector::Constant(g.size(), spec.a);
  sol.u2 = Vector::Constant(g.size(), spec.b);
  if (keep_iterates) sol.iterates.emplace_back(sol.u1, sol.u2);

  for (int k = 1; k <= max_iter; ++k) {
    Vector v1 = forcing(p1, spec.f1, sol.u2);
    Vector v2 = forcing(p2, spec.f2, sol.u1);
    std::optional<Index> bad = first_overflow(v1);
    std::optional<Index> bad2 = first_overflow(v2);
    if (bad2 && (!bad || *bad2 < *bad)) bad = bad2;
    Vector n1, n2;
    if (!bad) {
      n1 = nested_radial(v1, grid, spec.N).values().array() + spec.a;
      n2 = nested_radial(v2, grid, spec.N).values().array() + spec.b;
      bad = first_overflow(n1);
      bad2 = first_overflow(n2);
      if (bad2 && (!bad || *bad2 < *bad)) bad = bad2;
    }
    if (bad) {
      sol.status = SolveStatus::BlowUp;
      sol.blowup_radius = g.node(*bad);
      sol.iterations = k - 1;
      return sol;
    }

    double inc = 0.0;
    bool small = true;
    for (int c = 1; c <= 2; ++c) {
      const Vector& prev = c == 1 ? sol.u1 : sol.u2;
      const Vector& cur = c == 1 ? n1 : n2;
      for (Index i = 0; i < cur.size(); ++i) {
        const double d = cur[i] - prev[i];
        if (d < -1e-12 * (1.0 + std::abs(cur[i]))) {
          throw MonotonicityViolation(k, c, i, g.node(i), prev[i], cur[i]);
        }
        inc = std::max(inc, std::abs(d));
        if (std::abs(d) > tol * (1.0 + std::abs(cur[i]))) small = false;
      }
    }
    sol.u1 = std::move(n1);
    sol.u2 = std::move(n2);
    sol.iterations = k;
    sol.increment_history.push_back(inc);
    if (keep_iterates) sol.iterates.emplace_back(sol.u1, sol.u2);
    if (small) {
      sol.status = SolveStatus::Converged;
      return sol;
    }
  }
  sol.status = SolveStatus::NoConvergence;
  return sol;
}

SolutionPair picard_solve(const ProblemSpec& spec, const SolveOptions& opts) {
  return picard_solve(spec, solution_grid(opts), opts.tol, opts.max_iter, opts.keep_iterates);
}

SolutionPair ivp_oracle(const ProblemSpec& spec, const GridPtr& grid, double h) {
  spec.validate();
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("ivp_oracle: step must be positive and finite");
  if (!grid || grid->front() != 0.0) throw InvalidArgument("ivp_oracle: grid must start at 0");
  const Grid& g = *grid;
  const double N1 = spec.N - 1;

  using State = std::array<double, 4>;  // u1, u1', u2, u2'
  auto rhs = [&](double r, const State& y) -> State {
    const double s1 = spec.p1(r) * spec.f1(y[2]);
    const double s2 = spec.p2(r) * spec.f2(y[0]);
    return {y[1], s1 - N1 / r * y[1], y[3], s2 - N1 / r * y[3]};
  };
  auto axpy = [](const State& y, double c, const State& k) {
    return State{y[0] + c * k[0], y[1] + c * k[1], y[2] + c * k[2], y[3] + c * k[3]};
  };

  SolutionPair sol;
  sol.grid = grid;
  sol.method = "ivp_oracle";
  sol.spec_fingerprint = spec.fingerprint();
  sol.u1 = Vector::Constant(g.size(), std::numeric_limits<double>::infinity());
  sol.u2 = sol.u1;
  sol.u1[0] = spec.a;
  sol.u2[0] = spec.b;

  State y{spec.a, 0.0, spec.b, 0.0};
  double r = 0.0;
  bool started = false;
  for (Index i = 0; i + 1 < g.size(); ++i) {
    const double r_end = g.node(i + 1);
    const double span = r_end - g.node(i);
    const long steps = std::max(1L, static_cast<long>(std::ceil(span / h - 1e-9)));
    const double dt = span / static_cast<double>(steps);
    for (long s = 0; s < steps; ++s) {
      const double r_next = s + 1 == steps ? r_end : g.node(i) + dt * static_cast<double>(s + 1);
      const double step = r_next - r;
      if (!started) {
        // series start avoids the (N-1)/r singularity at the origin
        const double c1 = spec.p1(0.0) * spec.f1(spec.b), c2 = spec.p2(0.0) * spec.f2(spec.a);
        const double n = spec.N;
        y = {spec.a + c1 * step * step / (2 * n), c1 * step / n, spec.b + c2 * step * step / (2 * n), c2 * step / n};
        started = true;
      } else {
        const State k1 = rhs(r, y);
        const State k2 = rhs(r + step / 2, axpy(y, step / 2, k1));
        const State k3 = rhs(r + step / 2, axpy(y, step / 2, k2));
        const State k4 = rhs(r + step, axpy(y, step, k3));
        for (int c = 0; c < 4; ++c) y[c] += step / 6 * (k1[c] + 2 * k2[c] + 2 * k3[c] + k4[c]);
      }
      r = r_next;
      if (overflowed(y[0]) || overflowed(y[2]) || overflowed(y[1]) || overflowed(y[3])) {
        sol.status = SolveStatus::BlowUp;
        sol.blowup_radius = r;
        return sol;
      }
    }
    sol.u1[i + 1] = y[0];
    sol.u2[i + 1] = y[2];
  }
  sol.status = SolveStatus::Converged;
  return sol;
}

SolutionPair ivp_oracle(const ProblemSpec& spec, double R_max, double h) {
  SolveOptions opts;
  opts.R_max = R_max;
  return ivp_oracle(spec, solution_grid(opts), h);
}

std::pair<double, double> residual(const ProblemSpec& spec, const SolutionPair& sol) {
  const GridPtr& grid = sol.grid;
  const Vector p1 = sample(spec.p1.eval, *grid), p2 = sample(spec.p2.eval, *grid);
  const Vector m1 = nested_radial(forcing(p1, spec.f1, sol.u2), grid, spec.N).values();
  const Vector m2 = nested_radial(forcing(p2, spec.f2, sol.u1), grid, spec.N).values();
  double r1 = 0.0, r2 = 0.0;
  for (Index i = 0; i < grid->size(); ++i) {
    r1 = std::max(r1, std::abs(sol.u1[i] - spec.a - m1[i]) / (1.0 + std::abs(sol.u1[i])));
    r2 = std::max(r2, std::abs(sol.u2[i] - spec.b - m2[i]) / (1.0 + std::abs(sol.u2[i])));
  }
  return {r1, r2};
}

IterateAudit audit_iterates(const ProblemSpec& spec, const SolutionPair& sol) {
  IterateAudit audit;
  const auto& its = sol.iterates;
  if (its.empty()) {
    audit.detail = "no iterates kept";
    return audit;
  }
  const Grid& g = *sol.grid;
  auto note = [&](const std::string& s) {
    if (audit.detail.empty()) audit.detail = s;
  };

  for (std::size_t k = 0; k < its.size(); ++k) {
    for (int c = 0; c < 2; ++c) {
      const Vector& u = c == 0 ? its[k].first : its[k].second;
      for (Index i = 0; i + 1 < u.size(); ++i) {
        const double m = (u[i + 1] - u[i]) / (1.0 + std::abs(u[i + 1]));
        if (m < audit.worst_r_margin) {
          audit.worst_r_margin = m;
          if (m < -1e-12) note("u" + std::to_string(c + 1) + " decreases in r at iteration " + std::to_string(k));
        }
      }
      if (k == 0) continue;
      const Vector& prev = c == 0 ? its[k - 1].first : its[k - 1].second;
      for (Index i = 0; i < u.size(); ++i) {
        const double m = (u[i] - prev[i]) / (1.0 + std::abs(u[i]));
        if (m < audit.worst_k_margin) {
          audit.worst_k_margin = m;
          if (m < -1e-12) note("u" + std::to_string(c + 1) + " decreases in k at iteration " + std::to_string(k));
        }
      }
    }
  }

  auto [P3, Q3] = eval_P3_Q3(spec, sol.grid);
  for (int c = 1; c <= 2; ++c) {
    const double lower = c == 1 ? spec.a : spec.b;
    const double root = std::sqrt(c == 1 ? spec.cbar1 : spec.cbar2);
    const Profile& bound = c == 1 ? P3 : Q3;
    double umax = lower;
    for (const auto& it : its) umax = std::max(umax, (c == 1 ? it.first : it.second).maxCoeff());
    ValueGridOptions vo;
    const double cap = std::ldexp(lower * vo.R0, vo.max_octaves);
    std::optional<InverseRootIntegral> H;
    try {
      H = eval_H(spec, c, std::min(umax, cap), vo);
    } catch (const Error& e) {
      note(std::string("H") + std::to_string(c) + " unavailable: " + e.what());
      audit.pen_skipped += static_cast<Index>(its.size()) * g.size();
      continue;
    }
    for (const auto& it : its) {
      const Vector& u = c == 1 ? it.first : it.second;
      for (Index i = 0; i < u.size(); ++i) {
        if (u[i] > H->upper()) {
          ++audit.pen_skipped;
          continue;
        }
        const double rhs = root * bound.value(i);
        const double m = (rhs - (*H)(u[i])) / (1.0 + std::abs(rhs));
        ++audit.pen_checked;
        if (m < audit.worst_pen_margin) {
          audit.worst_pen_margin = m;
          if (m < -1e-6) note("a priori bound fails for u" + std::to_string(c) + " at r=" + fmt(g.node(i)));
        }
      }
    }
  }
  return audit;
}

}  // namespace koradial
