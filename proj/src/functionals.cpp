#include "koradial/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>

#include "koradial/parallel.hpp"

namespace koradial {

namespace {

// 8-point Gauss-Legendre on [-1, 1].
constexpr double kGLx[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
                            0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr double kGLw[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
                            0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

template <class F>
double gauss8(F&& f, double lo, double hi) {
  const double c = 0.5 * (lo + hi);
  const double h = 0.5 * (hi - lo);
  double s = 0.0;
  for (int k = 0; k < 8; ++k) s += kGLw[k] * f(c + h * kGLx[k]);
  return h * s;
}

double clamp_integrand(double v, bool& saturated) {
  if (std::isnan(v)) return v;
  if (v > kSaturation) {
    saturated = true;
    return kSaturation;
  }
  return v;
}

double clamp_integrand(double v) {
  bool ignored = false;
  return clamp_integrand(v, ignored);
}

Vector clamp_all(Vector v, bool& saturated) {
  for (Index i = 0; i < v.size(); ++i) v[i] = clamp_integrand(v[i], saturated);
  return v;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// One side of each functional pair. Swapping the equations feeds the other
// side exactly the same inputs, so P and Q results are bit-identical under swap.
struct Side {
  const ScalarFn& p;        // own weight
  const ScalarFn& f;        // own nonlinearity
  const ScalarFn& omega;    // own growth factor
  double partner_center;    // b for the first equation
  double coupling;          // f2(a) for the first equation
};

Side side_one(const ProblemSpec& s) { return {s.p1, s.f1, s.w1, s.b, s.f2(s.a)}; }
Side side_two(const ProblemSpec& s) { return {s.p2, s.f2, s.w2, s.a, s.f1(s.b)}; }

// K[p_own f_own(center + coupling K[p_other])]
Profile first_functional(const Side& side, const Vector& p_own, const Profile& K_other, const GridPtr& grid, int N,
                         bool& saturated) {
  Vector v(grid->size());
  for (Index i = 0; i < v.size(); ++i) {
    v[i] = p_own[i] * side.f(side.partner_center + side.coupling * K_other.value(i));
  }
  return nested_radial(clamp_all(std::move(v), saturated), grid, N);
}

// int_0^r z^(1+eps) p_own omega_own(1 + K[p_other]) dz
Profile second_functional(const Side& side, const Vector& p_own, const Profile& K_other, const GridPtr& grid,
                          double eps, bool& saturated) {
  Vector v(grid->size());
  for (Index i = 0; i < v.size(); ++i) {
    v[i] = std::pow(grid->node(i), 1.0 + eps) * p_own[i] * side.omega(1.0 + K_other.value(i));
  }
  return cumulative_integral(clamp_all(std::move(v), saturated), grid);
}

// int_0^r sqrt(2 phi_own omega_own(1 + K[p_other])), phi = running max of p_own
Profile third_functional(const Side& side, const Vector& p_own, const Profile& K_other, const GridPtr& grid,
                         bool& saturated) {
  Profile phi = running_max(p_own, grid);
  Vector v(grid->size());
  for (Index i = 0; i < v.size(); ++i) {
    v[i] = std::sqrt(2.0 * phi.value(i) * side.omega(1.0 + K_other.value(i)));
  }
  return cumulative_integral(clamp_all(std::move(v), saturated), grid);
}

Vector weighted_radial(const Vector& p, const Grid& g, int N) {
  Vector v(p.size());
  for (Index i = 0; i < v.size(); ++i) v[i] = std::pow(g.node(i), N - 1) * p[i];
  return v;
}

void require_origin(const GridPtr& grid) {
  if (!grid || grid->front() != 0.0) throw InvalidArgument("radial functionals need a grid starting at 0");
}

}  // namespace

const char* to_string(FunctionalId id) {
  switch (id) {
    case FunctionalId::G1: return "G1";
    case FunctionalId::G2: return "G2";
    case FunctionalId::P1: return "P1";
    case FunctionalId::Q1: return "Q1";
    case FunctionalId::P2: return "P2";
    case FunctionalId::Q2: return "Q2";
    case FunctionalId::P3: return "P3";
    case FunctionalId::Q3: return "Q3";
    case FunctionalId::H1: return "H1";
    case FunctionalId::H2: return "H2";
  }
  return "?";
}

Profile eval_G(const ProblemSpec& spec, int which, const GridPtr& grid) {
  require_origin(grid);
  const ScalarFn& p = which == 1 ? spec.p2 : spec.p1;
  return cumulative_integral(weighted_radial(sample(p.eval, *grid), *grid, spec.N), grid);
}

std::pair<Profile, Profile> eval_P1_Q1(const ProblemSpec& spec, const GridPtr& grid) {
  require_origin(grid);
  Vector p1 = sample(spec.p1.eval, *grid), p2 = sample(spec.p2.eval, *grid);
  Profile K1 = nested_radial(p1, grid, spec.N), K2 = nested_radial(p2, grid, spec.N);
  bool sat = false;
  return {first_functional(side_one(spec), p1, K2, grid, spec.N, sat),
          first_functional(side_two(spec), p2, K1, grid, spec.N, sat)};
}

std::pair<Profile, Profile> eval_P2_Q2(const ProblemSpec& spec, const GridPtr& grid) {
  require_origin(grid);
  Vector p1 = sample(spec.p1.eval, *grid), p2 = sample(spec.p2.eval, *grid);
  Profile K1 = nested_radial(p1, grid, spec.N), K2 = nested_radial(p2, grid, spec.N);
  bool sat = false;
  return {second_functional(side_one(spec), p1, K2, grid, spec.eps, sat),
          second_functional(side_two(spec), p2, K1, grid, spec.eps, sat)};
}

std::pair<Profile, Profile> eval_P3_Q3(const ProblemSpec& spec, const GridPtr& grid) {
  require_origin(grid);
  Vector p1 = sample(spec.p1.eval, *grid), p2 = sample(spec.p2.eval, *grid);
  Profile K1 = nested_radial(p1, grid, spec.N), K2 = nested_radial(p2, grid, spec.N);
  bool sat = false;
  return {third_functional(side_one(spec), p1, K2, grid, sat), third_functional(side_two(spec), p2, K1, grid, sat)};
}

RadialFunctionals RadialFunctionals::compute(const ProblemSpec& spec, const GridPtr& grid) {
  require_origin(grid);
  const std::string fp = spec.fingerprint();
  Vector p1, p2;
  parallel_invoke({[&] { p1 = sample(spec.p1.eval, *grid); }, [&] { p2 = sample(spec.p2.eval, *grid); }});

  std::optional<Profile> K1, K2, G1, G2;
  parallel_invoke({[&] { K1 = nested_radial(p1, grid, spec.N); }, [&] { K2 = nested_radial(p2, grid, spec.N); },
                   [&] { G1 = cumulative_integral(weighted_radial(p2, *grid, spec.N), grid); },
                   [&] { G2 = cumulative_integral(weighted_radial(p1, *grid, spec.N), grid); }});

  const Side one = side_one(spec), two = side_two(spec);
  std::optional<Profile> out[6];
  bool sat[6] = {};
  parallel_invoke({
      [&] { out[0] = first_functional(one, p1, *K2, grid, spec.N, sat[0]); },
      [&] { out[1] = first_functional(two, p2, *K1, grid, spec.N, sat[1]); },
      [&] { out[2] = second_functional(one, p1, *K2, grid, spec.eps, sat[2]); },
      [&] { out[3] = second_functional(two, p2, *K1, grid, spec.eps, sat[3]); },
      [&] { out[4] = third_functional(one, p1, *K2, grid, sat[4]); },
      [&] { out[5] = third_functional(two, p2, *K1, grid, sat[5]); },
  });

  RadialFunctionals r;
  r.grid_ = grid;
  r.items_.push_back({FunctionalId::G1, std::move(*G1), fp, false});
  r.items_.push_back({FunctionalId::G2, std::move(*G2), fp, false});
  const FunctionalId ids[6] = {FunctionalId::P1, FunctionalId::Q1, FunctionalId::P2,
                               FunctionalId::Q2, FunctionalId::P3, FunctionalId::Q3};
  for (int k = 0; k < 6; ++k) r.items_.push_back({ids[k], std::move(*out[k]), fp, sat[k]});
  return r;
}

const FunctionalProfile& RadialFunctionals::operator[](FunctionalId id) const {
  for (const auto& it : items_) {
    if (it.which == id) return it;
  }
  throw InvalidArgument(std::string("functional ") + to_string(id) + " is not a radial functional");
}

struct InverseRootIntegral::Parts {
  std::function<double(double)> g;
  double lower;
  int octaves;
  ValueGridOptions opts;
  double mass_lower;
  GridPtr grid;
  Profile mass;
  Profile H;
  std::vector<Index> probe_index;
};

InverseRootIntegral::InverseRootIntegral(std::function<double(double)> g, double lower, int octaves,
                                         ValueGridOptions opts)
    : InverseRootIntegral(build(std::move(g), lower, octaves, opts)) {}

InverseRootIntegral::InverseRootIntegral(Parts p)
    : g_(std::move(p.g)),
      lower_(p.lower),
      octaves_(p.octaves),
      opts_(p.opts),
      mass_lower_(p.mass_lower),
      grid_(std::move(p.grid)),
      mass_(std::move(p.mass)),
      H_(std::move(p.H)),
      probe_index_(std::move(p.probe_index)) {}

InverseRootIntegral::Parts InverseRootIntegral::build(std::function<double(double)> g, double lower, int octaves,
                                                      const ValueGridOptions& opts) {
  if (!(lower > 0.0) || !std::isfinite(lower)) throw InvalidArgument("H: lower limit must be positive and finite");
  if (octaves < 0) throw InvalidArgument("H: octaves must be >= 0");
  if (!(opts.R0 > 1.0)) throw InvalidArgument("H: R0 must exceed 1");

  auto clamped = [&g](double t) {
    double v = g(t);
    if (std::isnan(v)) throw Error("H: inner integrand is NaN at t=" + fmt(t));
    if (v < 0.0) throw Error("H: inner integrand is negative at t=" + fmt(t));
    return clamp_integrand(v);
  };

  // Node values by interval-wise Gauss-Legendre: the same rule used between
  // nodes, so off-node evaluation and inversion agree with the profile.
  GridPtr below = make_grid(lower, opts.mass_panels, opts.mass_grading, opts.nodes_per_panel);
  double mass_lower = 0.0;
  for (Index i = 0; i + 1 < below->size(); ++i) mass_lower += gauss8(clamped, below->node(i), below->node(i + 1));
  if (!(mass_lower > 0.0)) throw Error("H: inner mass vanishes at the lower limit " + fmt(lower));

  std::vector<double> breaks{lower};
  const double top0 = lower * opts.R0;
  const int n0 = opts.panels_per_octave * std::max(1, static_cast<int>(std::ceil(std::log2(opts.R0) - 1e-12)));
  for (int k = 1; k < n0; ++k) breaks.push_back(lower * std::pow(opts.R0, static_cast<double>(k) / n0));
  breaks.push_back(top0);
  for (int o = 1; o <= octaves; ++o) {
    const double lo = std::ldexp(top0, o - 1);
    for (int k = 1; k < opts.panels_per_octave; ++k) {
      breaks.push_back(lo * std::exp2(static_cast<double>(k) / opts.panels_per_octave));
    }
    breaks.push_back(std::ldexp(top0, o));
  }
  auto grid = std::make_shared<const Grid>(Grid::from_breakpoints(breaks, opts.nodes_per_panel));

  const Index n = grid->size();
  Vector m(n), Hv(n);
  m[0] = mass_lower;
  Hv[0] = 0.0;
  for (Index i = 0; i + 1 < n; ++i) {
    const double x0 = grid->node(i), x1 = grid->node(i + 1);
    const double mi = m[i];
    m[i + 1] = mi + gauss8(clamped, x0, x1);
    Hv[i + 1] = Hv[i] + gauss8([&](double t) { return 1.0 / std::sqrt(mi + gauss8(clamped, x0, t)); }, x0, x1);
  }
  Profile H(grid, std::move(Hv));

  std::vector<Index> probes;
  for (int j = 0; j <= octaves; ++j) {
    const double r = std::ldexp(top0, j);
    Index i = grid->locate(r);
    if (grid->node(i + 1) == r) ++i;
    probes.push_back(i);
  }
  return Parts{std::move(g), lower, octaves, opts, mass_lower, grid, Profile(grid, std::move(m)), std::move(H),
               std::move(probes)};
}

double InverseRootIntegral::mass_at(Index i, double s) const {
  const double t0 = grid_->node(i);
  if (s == t0) return mass_.value(i);
  return mass_.value(i) + gauss8([this](double t) { return clamp_integrand(g_(t)); }, t0, s);
}

double InverseRootIntegral::operator()(double s) const {
  const double lo = grid_->front(), hi = grid_->back();
  if (!(s >= lo * (1 - 1e-14)) || s > hi * (1 + 1e-14)) {
    throw RangeError(max_value(), "H evaluated at " + fmt(s) + " outside [" + fmt(lo) + ", " + fmt(hi) + "]");
  }
  s = std::clamp(s, lo, hi);
  const Index i = grid_->locate(s);
  if (s == grid_->node(i)) return H_.value(i);
  if (s == grid_->node(i + 1)) return H_.value(i + 1);
  return H_.value(i) + gauss8([&](double t) { return 1.0 / std::sqrt(mass_at(i, t)); }, grid_->node(i), s);
}

double InverseRootIntegral::derivative(double s) const {
  const Index i = grid_->locate(std::clamp(s, grid_->front(), grid_->back()));
  return 1.0 / std::sqrt(mass_at(i, s));
}

double InverseRootIntegral::inverse(double y) const {
  if (std::isnan(y)) throw InvalidArgument("H inverse of NaN");
  if (y <= 0.0) return lower_;
  const Vector& Hv = H_.values();
  if (y > max_value()) {
    throw RangeError(max_value(), "H inverse: " + fmt(y) + " exceeds the largest computed value " +
                                      fmt(max_value()) + " at s=" + fmt(upper()));
  }
  const Index n = Hv.size();
  Index i = static_cast<Index>(std::lower_bound(Hv.data(), Hv.data() + n, y) - Hv.data());
  if (Hv[i] == y) return grid_->node(i);
  i -= 1;  // Hv[i] < y < Hv[i+1]
  double lo = grid_->node(i), hi = grid_->node(i + 1);
  double s = lo + (hi - lo) * (y - Hv[i]) / (Hv[i + 1] - Hv[i]);
  for (int it = 0; it < 200; ++it) {
    const double phi = H_.value(i) + gauss8([&](double t) { return 1.0 / std::sqrt(mass_at(i, t)); }, grid_->node(i), s) - y;
    if (phi == 0.0) return s;
    if (phi > 0.0) hi = s; else lo = s;
    double next = s - phi * std::sqrt(mass_at(i, s));
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) <= 1e-15 * s || hi - lo <= 1e-15 * hi) return next;
    s = next;
  }
  return s;
}

InverseRootIntegral InverseRootIntegral::extended(int octaves) const {
  return InverseRootIntegral(g_, lower_, octaves, opts_);
}

std::vector<double> InverseRootIntegral::probe_points() const {
  std::vector<double> out;
  for (Index i : probe_index_) out.push_back(grid_->node(i));
  return out;
}

std::vector<double> InverseRootIntegral::probe_values() const {
  std::vector<double> out;
  for (Index i : probe_index_) out.push_back(H_.value(i));
  return out;
}

InverseRootIntegral eval_H(const ProblemSpec& spec, int which, double upper, const ValueGridOptions& opts) {
  if (which != 1 && which != 2) throw InvalidArgument("eval_H: which must be 1 or 2");
  const BigM M = big_m(spec);
  std::function<double(double)> g;
  double lower;
  if (which == 1) {
    g = [h = spec.h1, f = spec.f2, M1 = M.M1](double t) { return h(M1 * f(t)); };
    lower = spec.a;
  } else {
    g = [h = spec.h2, f = spec.f1, M2 = M.M2](double t) { return h(M2 * f(t)); };
    lower = spec.b;
  }
  const double ratio = upper / (lower * opts.R0);
  const int octaves = ratio > 1.0 ? static_cast<int>(std::ceil(std::log2(ratio) - 1e-12)) : 0;
  return InverseRootIntegral(std::move(g), lower, octaves, opts);
}

InverseRootIntegral extend_to_cover(const InverseRootIntegral& H, double y) {
  if (y <= H.max_value()) return H;
  InverseRootIntegral cur = H;
  while (cur.max_value() < y && cur.octaves() < cur.options().max_octaves) {
    cur = cur.extended(std::min(cur.options().max_octaves, cur.octaves() + 1));
  }
  return cur;
}

double h_inverse(const InverseRootIntegral& H, double y) { return extend_to_cover(H, y).inverse(y); }

double h_inverse(const Profile& H, double y) {
  const Grid& g = H.grid();
  if (!(y >= H.value(0))) return g.front();
  if (y > H.back()) {
    throw RangeError(H.back(), "inverse: " + fmt(y) + " exceeds the largest value " + fmt(H.back()));
  }
  double lo = g.front(), hi = g.back();
  for (int it = 0; it < 200 && hi - lo > 1e-10 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (H(mid) < y) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

ConvergenceVerdict ko_classic(const ScalarFn& f, double t0, const TailOptions& tail, const ValueGridOptions& opts) {
  ValueGridOptions vo = opts;
  vo.R0 = tail.R0;
  TailOptions t = tail;
  t.doublings = std::max(tail.doublings, opts.tail_doublings);
  try {
    InverseRootIntegral H(f.eval, t0, t.doublings, vo);
    auto radii = H.probe_points();
    auto values = H.probe_values();
    return tail_limit_from_probes(radii, values, t);
  } catch (const Error& e) {
    return ConvergenceVerdict::make_indeterminate(e.what());
  }
}

FunctionalLimits functional_limits(const ProblemSpec& spec, const LimitOptions& opts) {
  FunctionalLimits out;
  out.spec_fingerprint = spec.fingerprint();
  const TailOptions& tail = opts.tail;

  try {
    GridPtr grid = make_probe_grid(tail.R0, tail.doublings, opts.probe);
    RadialFunctionals rf = RadialFunctionals::compute(spec, grid);
    std::vector<double> radii;
    for (int j = 0; j <= tail.doublings; ++j) radii.push_back(std::ldexp(tail.R0, j));
    auto verdict = [&](FunctionalId id) {
      const Profile& p = rf[id].profile;
      std::vector<double> vals;
      for (double r : radii) vals.push_back(p(r));
      ConvergenceVerdict v = tail_limit_from_probes(radii, vals, tail);
      if (rf[id].saturated && v.finite()) {
        return ConvergenceVerdict::make_indeterminate("integrand saturated");
      }
      return v;
    };
    out.P1 = verdict(FunctionalId::P1);
    out.Q1 = verdict(FunctionalId::Q1);
    out.P2 = verdict(FunctionalId::P2);
    out.Q2 = verdict(FunctionalId::Q2);
    out.P3 = verdict(FunctionalId::P3);
    out.Q3 = verdict(FunctionalId::Q3);
  } catch (const Error& e) {
    auto ind = ConvergenceVerdict::make_indeterminate(std::string("radial functionals: ") + e.what());
    out.P1 = out.Q1 = out.P2 = out.Q2 = out.P3 = out.Q3 = ind;
  }

  ValueGridOptions vo = opts.value;
  vo.R0 = tail.R0;
  TailOptions htail = tail;
  htail.doublings = std::max(tail.doublings, vo.tail_doublings);
  auto h_verdict = [&](int which) {
    try {
      const double lower = which == 1 ? spec.a : spec.b;
      InverseRootIntegral H = eval_H(spec, which, std::ldexp(lower * tail.R0, htail.doublings), vo);
      auto radii = H.probe_points();
      auto values = H.probe_values();
      return tail_limit_from_probes(radii, values, htail);
    } catch (const Error& e) {
      return ConvergenceVerdict::make_indeterminate(std::string("H") + std::to_string(which) + ": " + e.what());
    }
  };
  out.H1 = h_verdict(1);
  out.H2 = h_verdict(2);
  return out;
}

}  // namespace koradial
