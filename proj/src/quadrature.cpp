#include "koradial/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

namespace koradial {

namespace {

std::string num(double v, const char* fmt = "%.6g") {
  char buf[40];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

// Integral over [z[1]-ish interval] of the cubic through (z[k], f[k]), k=0..3,
// taken over [lo, hi]. Two-point Gauss-Legendre is exact for cubics.
std::array<double, 4> cubic_interval_weights(const std::array<double, 4>& z, double lo, double hi) {
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  const double off = half / std::sqrt(3.0);
  std::array<double, 4> w{};
  for (double xi : {mid - off, mid + off}) {
    for (int k = 0; k < 4; ++k) {
      double l = 1.0;
      for (int m = 0; m < 4; ++m) {
        if (m != k) l *= (xi - z[m]) / (z[k] - z[m]);
      }
      w[k] += half * l;
    }
  }
  return w;
}

double sign(double v) { return v > 0 ? 1.0 : v < 0 ? -1.0 : 0.0; }

Vector pchip_slopes(const Vector& x, const Vector& y) {
  const Index n = x.size();
  Vector d = Vector::Zero(n);
  if (n < 2) return d;
  Vector h = x.tail(n - 1) - x.head(n - 1);
  Vector delta = (y.tail(n - 1) - y.head(n - 1)).cwiseQuotient(h);
  if (n == 2) {
    d.setConstant(delta[0]);
    return d;
  }
  for (Index k = 1; k < n - 1; ++k) {
    if (delta[k - 1] == 0.0 || delta[k] == 0.0 || sign(delta[k - 1]) != sign(delta[k])) continue;
    double w1 = 2.0 * h[k] + h[k - 1];
    double w2 = h[k] + 2.0 * h[k - 1];
    d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
  }
  auto edge = [](double h0, double h1, double m0, double m1) {
    double e = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if (sign(e) != sign(m0)) return 0.0;
    if (sign(m0) != sign(m1) && std::abs(e) > 3.0 * std::abs(m0)) return 3.0 * m0;
    return e;
  };
  d[0] = edge(h[0], h[1], delta[0], delta[1]);
  d[n - 1] = edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  return d;
}

}  // namespace

Grid Grid::from_breakpoints(std::span<const double> breaks, int nodes_per_panel) {
  if (breaks.size() < 2) throw InvalidArgument("grid needs at least two breakpoints");
  if (nodes_per_panel < 3 || nodes_per_panel % 2 == 0) {
    throw InvalidArgument("nodes per panel must be odd and at least 3, got " + std::to_string(nodes_per_panel));
  }
  for (std::size_t i = 0; i < breaks.size(); ++i) {
    if (!std::isfinite(breaks[i])) throw InvalidArgument("grid breakpoints must be finite");
    if (i > 0 && !(breaks[i] > breaks[i - 1])) throw InvalidArgument("grid breakpoints must be strictly increasing");
  }
  Grid g;
  const Index per = nodes_per_panel - 1;
  const Index panels = static_cast<Index>(breaks.size()) - 1;
  g.nodes_.resize(panels * per + 1);
  g.breaks_.reserve(breaks.size());
  for (Index p = 0; p < panels; ++p) {
    double lo = breaks[static_cast<std::size_t>(p)];
    double hi = breaks[static_cast<std::size_t>(p) + 1];
    g.breaks_.push_back(p * per);
    for (Index k = 0; k < per; ++k) g.nodes_[p * per + k] = lo + (hi - lo) * static_cast<double>(k) / per;
  }
  g.breaks_.push_back(panels * per);
  g.nodes_[panels * per] = breaks.back();
  for (Index i = 1; i < g.nodes_.size(); ++i) {
    if (!(g.nodes_[i] > g.nodes_[i - 1])) throw InvalidArgument("grid panel too narrow to hold distinct nodes");
  }
  return g;
}

std::vector<double> Grid::panel_boundaries() const {
  std::vector<double> out;
  out.reserve(breaks_.size());
  for (Index b : breaks_) out.push_back(nodes_[b]);
  return out;
}

Index Grid::locate(double r) const {
  const Index n = nodes_.size();
  auto begin = nodes_.data();
  auto it = std::upper_bound(begin, begin + n, r);
  Index i = static_cast<Index>(it - begin) - 1;
  return std::clamp<Index>(i, 0, n - 2);
}

GridPtr make_grid(double R_max, int n_panels, double grading, int nodes_per_panel) {
  if (!(R_max > 0.0)) throw InvalidArgument("make_grid: R_max must be positive");
  if (n_panels < 1) throw InvalidArgument("make_grid: need at least one panel");
  if (!(grading >= 1.0)) throw InvalidArgument("make_grid: grading must be >= 1");
  std::vector<double> breaks(static_cast<std::size_t>(n_panels) + 1);
  for (int j = 0; j <= n_panels; ++j) {
    breaks[static_cast<std::size_t>(j)] = R_max * std::pow(static_cast<double>(j) / n_panels, grading);
  }
  breaks.back() = R_max;
  return std::make_shared<const Grid>(Grid::from_breakpoints(breaks, nodes_per_panel));
}

GridPtr make_probe_grid(double R0, int doublings, const ProbeGridOptions& opts) {
  if (!(R0 > 0.0) || doublings < 0) throw InvalidArgument("make_probe_grid: need R0 > 0 and doublings >= 0");
  std::vector<double> breaks;
  for (int j = 0; j <= opts.inner_panels; ++j) {
    breaks.push_back(R0 * std::pow(static_cast<double>(j) / opts.inner_panels, opts.grading));
  }
  breaks.back() = R0;
  for (int o = 1; o <= doublings; ++o) {
    double lo = std::ldexp(R0, o - 1);
    for (int k = 1; k < opts.panels_per_octave; ++k) {
      breaks.push_back(lo * std::exp2(static_cast<double>(k) / opts.panels_per_octave));
    }
    breaks.push_back(std::ldexp(R0, o));
  }
  return std::make_shared<const Grid>(Grid::from_breakpoints(breaks, opts.nodes_per_panel));
}

Profile::Profile(GridPtr grid, Vector values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw InvalidArgument("profile needs a grid");
  if (values_.size() != grid_->size()) throw InvalidArgument("profile values do not match grid size");
  slopes_ = pchip_slopes(grid_->nodes(), values_);
}

double Profile::operator()(double r) const {
  const Vector& x = grid_->nodes();
  const double span = x[x.size() - 1] - x[0];
  if (r < x[0] - 1e-12 * span || r > x[x.size() - 1] + 1e-12 * span || std::isnan(r)) {
    throw InvalidArgument("profile evaluated outside its grid at " + num(r));
  }
  Index i = grid_->locate(r);
  if (r <= x[i]) return values_[i];
  if (r >= x[i + 1]) return values_[i + 1];
  double h = x[i + 1] - x[i];
  double t = (r - x[i]) / h;
  double t2 = t * t;
  double t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * values_[i] + (t3 - 2 * t2 + t) * h * slopes_[i] + (-2 * t3 + 3 * t2) * values_[i + 1] +
         (t3 - t2) * h * slopes_[i + 1];
}

bool Profile::nondecreasing() const {
  for (Index i = 1; i < values_.size(); ++i) {
    if (values_[i] < values_[i - 1]) return false;
  }
  return true;
}

bool same_grid(const Profile& a, const Profile& b) {
  return a.grid_ptr() == b.grid_ptr() || a.grid() == b.grid();
}

Vector sample(const std::function<double(double)>& f, const Grid& grid) {
  Vector v(grid.size());
  for (Index i = 0; i < grid.size(); ++i) v[i] = f(grid.node(i));
  return v;
}

Profile cumulative_integral(const Vector& f, const GridPtr& grid) {
  const Grid& g = *grid;
  const Index n = g.size();
  if (f.size() != n) throw InvalidArgument("integrand size does not match grid");
  for (Index i = 0; i < n; ++i) {
    if (!std::isfinite(f[i])) {
      throw Error("non-finite integrand value " + num(f[i]) + " at node " + std::to_string(i) + " (r=" +
                  num(g.node(i), "%.17g") + ")");
    }
  }
  const Vector& x = g.nodes();
  Vector F(n);
  F[0] = 0.0;
  for (int p = 0; p < g.panels(); ++p) {
    const Index s = g.panel_begin(p);
    const Index e = g.panel_end(p);
    const double h = (x[e] - x[s]) / static_cast<double>(e - s);
    for (Index i = s; i < e; i += 2) {
      F[i + 2] = F[i] + h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
      // odd node: cubic through four neighbours, preferring the same panel
      if (n < 4) {
        F[i + 1] = F[i] + h / 12.0 * (5.0 * f[i] + 8.0 * f[i + 1] - f[i + 2]);
        continue;
      }
      Index j = e - s >= 4 ? std::clamp<Index>(i - 1, s, e - 3) : std::clamp<Index>(i - 1, 0, n - 4);
      std::array<double, 4> z{x[j], x[j + 1], x[j + 2], x[j + 3]};
      auto w = cubic_interval_weights(z, x[i], x[i + 1]);
      F[i + 1] = F[i] + w[0] * f[j] + w[1] * f[j + 1] + w[2] * f[j + 2] + w[3] * f[j + 3];
    }
  }
  return Profile(grid, std::move(F));
}

Profile cumulative_integral(const std::function<double(double)>& f, const GridPtr& grid) {
  return cumulative_integral(sample(f, *grid), grid);
}

Profile nested_radial(const Vector& v, const GridPtr& grid, int N) {
  const Grid& g = *grid;
  if (g.front() != 0.0) throw InvalidArgument("nested_radial needs a grid starting at 0");
  if (v.size() != g.size()) throw InvalidArgument("nested_radial: profile size does not match grid");
  for (Index i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0)) {
      throw Error("nested_radial: negative or NaN input " + num(v[i]) + " at node " + std::to_string(i) + " (r=" +
                  num(g.node(i), "%.17g") + ")");
    }
  }
  const Vector& r = g.nodes();
  Vector weighted(v.size());
  for (Index i = 0; i < v.size(); ++i) weighted[i] = std::pow(r[i], N - 1) * v[i];
  Profile inner = cumulative_integral(weighted, grid);
  // t^(1-N) I(t) -> v(0) t / N as t -> 0; the limit at the origin is 0.
  Vector outer(v.size());
  outer[0] = 0.0;
  for (Index i = 1; i < v.size(); ++i) outer[i] = inner.value(i) / std::pow(r[i], N - 1);
  return cumulative_integral(outer, grid);
}

Profile nested_radial(const Profile& v, int N) { return nested_radial(v.values(), v.grid_ptr(), N); }

Profile running_max(const Vector& p, const GridPtr& grid) {
  if (p.size() != grid->size()) throw InvalidArgument("running_max: size mismatch");
  Vector phi(p.size());
  double m = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < p.size(); ++i) {
    m = std::max(m, p[i]);
    phi[i] = m;
  }
  return Profile(grid, std::move(phi));
}

Profile running_max(const std::function<double(double)>& p, const GridPtr& grid) {
  return running_max(sample(p, *grid), grid);
}

ConvergenceVerdict ConvergenceVerdict::make_finite(double value, double error) {
  ConvergenceVerdict v;
  v.kind = Kind::Finite;
  v.value = value;
  v.error_estimate = error;
  return v;
}

ConvergenceVerdict ConvergenceVerdict::make_divergent(std::string hint) {
  ConvergenceVerdict v;
  v.kind = Kind::Divergent;
  v.rate_hint = std::move(hint);
  return v;
}

ConvergenceVerdict ConvergenceVerdict::make_indeterminate(std::string reason) {
  ConvergenceVerdict v;
  v.kind = Kind::Indeterminate;
  v.rate_hint = std::move(reason);
  return v;
}

const char* to_string(ConvergenceVerdict::Kind k) {
  switch (k) {
    case ConvergenceVerdict::Kind::Finite:
      return "finite";
    case ConvergenceVerdict::Kind::Divergent:
      return "divergent";
    case ConvergenceVerdict::Kind::Indeterminate:
      return "indeterminate";
  }
  return "?";
}

ConvergenceVerdict tail_limit_from_probes(std::span<const double> radii, std::span<const double> F,
                                          const TailOptions& opts) {
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  const std::size_t J = F.size() - 1;
  auto finish = [&](ConvergenceVerdict v) {
    v.probe_radii.assign(radii.begin(), radii.end());
    v.probe_values.assign(F.begin(), F.end());
    return v;
  };
  if (F.size() < 4 || radii.size() != F.size()) {
    return finish(ConvergenceVerdict::make_indeterminate("need at least 4 probes"));
  }
  for (std::size_t j = 0; j <= J; ++j) {
    if (std::isnan(F[j])) return finish(ConvergenceVerdict::make_indeterminate("NaN at R=" + num(radii[j])));
  }
  if (F[J] > opts.cap) {
    return finish(ConvergenceVerdict::make_divergent("exceeds cap " + num(opts.cap) + " at R=" + num(radii[J])));
  }

  // Increments at round-off level count as zero.
  std::vector<double> inc(J + 1, 0.0);
  for (std::size_t j = 1; j <= J; ++j) {
    double d = F[j] - F[j - 1];
    double floor = 8.0 * kEps * std::max(std::abs(F[j]), std::abs(F[j - 1]));
    if (d < -floor) {
      return finish(ConvergenceVerdict::make_indeterminate("non-monotone samples between R=" + num(radii[j - 1]) +
                                                           " and R=" + num(radii[j])));
    }
    inc[j] = std::abs(d) <= floor ? 0.0 : d;
  }
  auto ratio = [&](std::size_t j) {
    if (inc[j - 1] == 0.0) return inc[j] == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return inc[j] / inc[j - 1];
  };
  const double r1 = ratio(J - 2);
  const double r2 = ratio(J - 1);
  const double r3 = ratio(J);
  const std::string ratios = num(r1, "%.4g") + ", " + num(r2, "%.4g") + ", " + num(r3, "%.4g");

  const bool shrinking = r1 <= 0.75 && r2 <= 0.75 && r3 <= 0.75;
  const bool flat_enough = inc[J] <= opts.tol_tail * std::max(1.0, std::abs(F[J]));
  if (shrinking && flat_enough) {
    double tail = inc[J] == 0.0 ? 0.0 : inc[J] * r3 / (1.0 - r3);
    double err = std::max(tail, 8.0 * kEps * std::max(1.0, std::abs(F[J])));
    ConvergenceVerdict v = ConvergenceVerdict::make_finite(F[J] + tail, err);
    v.rate_hint = inc[J] == 0.0 ? "constant over the last doublings"
                                : "increments shrink by " + num(r3, "%.4g") + " per doubling (tail ~ R^-" +
                                      num(-std::log2(r3), "%.3g") + ")";
    return finish(v);
  }
  if (r1 >= 0.95 && r2 >= 0.95 && r3 >= 0.95 && inc[J] > 0.0) {
    std::string hint = r3 < 1.05 ? "increments roughly constant per doubling (logarithmic growth), ratios " + ratios
                                 : "increments grow by " + num(r3, "%.4g") + " per doubling (power growth ~ R^" +
                                       num(std::log2(r3), "%.3g") + ")";
    return finish(ConvergenceVerdict::make_divergent(hint));
  }
  return finish(ConvergenceVerdict::make_indeterminate("last increment " + num(inc[J]) + ", increment ratios " + ratios));
}

ConvergenceVerdict tail_limit(const std::function<double(double)>& F, const TailOptions& opts) {
  if (!(opts.R0 > 0.0) || opts.doublings < 3) throw InvalidArgument("tail_limit: need R0 > 0 and doublings >= 3");
  std::vector<double> radii;
  std::vector<double> values;
  for (int j = 0; j <= opts.doublings; ++j) {
    double R = std::ldexp(opts.R0, j);
    radii.push_back(R);
    values.push_back(F(R));
  }
  return tail_limit_from_probes(radii, values, opts);
}

}  // namespace koradial
