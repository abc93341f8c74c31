#include "koradial/problem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <sstream>

namespace koradial {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> uniform_samples(double R, int n) {
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = R * i / (n - 1);
  return xs;
}

std::vector<double> log_samples(double lo, double hi, int n) {
  std::vector<double> xs(static_cast<std::size_t>(n));
  double ratio = std::log(hi / lo);
  for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = lo * std::exp(ratio * i / (n - 1));
  xs.front() = lo;
  xs.back() = hi;
  return xs;
}

}  // namespace

ScalarFn ScalarFn::from_expression(const expr::Expression& e, const expr::Bindings& bindings) {
  expr::BoundExpression bound(e, bindings);
  ScalarFn f;
  f.eval = [bound](double x) { return bound(x); };
  f.label = e.to_string();
  std::string bound_values;
  for (const auto& name : e.parameters()) {
    auto it = bindings.find(name);
    if (it == bindings.end()) continue;
    bound_values += (bound_values.empty() ? "" : ", ") + name + "=" + num(it->second);
  }
  if (!bound_values.empty()) f.label += " {" + bound_values + "}";
  return f;
}

ScalarFn ScalarFn::from_source(std::string_view source, const expr::Bindings& bindings) {
  return from_expression(expr::parse(source), bindings);
}

ScalarFn ScalarFn::constant(double c) {
  ScalarFn f;
  f.eval = [c](double) { return c; };
  f.declared_monotone = Monotonicity::Nondecreasing;
  f.declared_zero_at_zero = c == 0.0;
  f.label = num(c);
  return f;
}

ScalarFn ScalarFn::power(double alpha) {
  ScalarFn f;
  f.eval = [alpha](double x) { return std::pow(x, alpha); };
  f.declared_monotone = alpha >= 0 ? Monotonicity::Nondecreasing : Monotonicity::Unknown;
  f.declared_zero_at_zero = alpha > 0;
  f.label = "(x ^ " + num(alpha) + ")";
  return f;
}

void ProblemSpec::validate() const {
  if (N < 3) throw InvalidArgument("dimension N must be at least 3, got " + std::to_string(N));
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("central values a, b must be positive");
  if (!(cbar1 > 0.0) || !(cbar2 > 0.0)) throw InvalidArgument("constants cbar1, cbar2 must be positive");
  if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
  for (const ScalarFn* f : {&p1, &p2, &f1, &f2, &h1, &h2, &w1, &w2}) {
    if (!f->eval) throw InvalidArgument("problem function left unset");
  }
  double f1b = f1(b);
  double f2a = f2(a);
  if (!(f1b > 0.0) || !std::isfinite(f1b)) throw InvalidArgument("f1(b) must be positive and finite, got " + num(f1b));
  if (!(f2a > 0.0) || !std::isfinite(f2a)) throw InvalidArgument("f2(a) must be positive and finite, got " + num(f2a));
}

ProblemSpec ProblemSpec::swapped() const {
  ProblemSpec s = *this;
  std::swap(s.a, s.b);
  std::swap(s.p1, s.p2);
  std::swap(s.f1, s.f2);
  std::swap(s.h1, s.h2);
  std::swap(s.w1, s.w2);
  std::swap(s.cbar1, s.cbar2);
  return s;
}

std::string ProblemSpec::fingerprint() const {
  std::ostringstream os;
  os << N << '|' << num(a) << '|' << num(b) << '|' << num(cbar1) << '|' << num(cbar2) << '|' << num(eps);
  for (const ScalarFn* f : {&p1, &p2, &f1, &f2, &h1, &h2, &w1, &w2}) os << '|' << f->label;
  // FNV-1a, 64 bit: stable across platforms unlike std::hash.
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

BigM big_m(const ProblemSpec& spec) {
  double f2a = spec.f2(spec.a);
  double f1b = spec.f1(spec.b);
  if (!(f2a > 0.0)) throw InvalidArgument("big_m: f2(a) must be positive, got " + num(f2a));
  if (!(f1b > 0.0)) throw InvalidArgument("big_m: f1(b) must be positive, got " + num(f1b));
  BigM m;
  m.M1 = spec.b > f2a ? spec.b / f2a : 1.0;
  m.M2 = spec.a > f1b ? spec.a / f1b : 1.0;
  return m;
}

const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass:
      return "pass";
    case CheckStatus::Fail:
      return "fail";
    case CheckStatus::Indeterminate:
      return "indeterminate";
  }
  return "?";
}

CheckStatus HypothesisReport::overall() const {
  CheckStatus worst = CheckStatus::Pass;
  for (const auto& e : entries) {
    if (e.status == CheckStatus::Fail) return CheckStatus::Fail;
    if (e.status == CheckStatus::Indeterminate) worst = CheckStatus::Indeterminate;
  }
  return worst;
}

HypothesisEntry check_p1(const ScalarFn& p, const std::string& name, double R, int n) {
  HypothesisEntry e;
  e.name = "P1:" + name;
  auto xs = expr::chebyshev_samples(R, n);
  e.sampling = std::to_string(xs.size()) + " Chebyshev points on [0, " + num(R) + "]";
  try {
    for (double x : xs) {
      double v = p(x);
      if (!(v >= 0.0) || !std::isfinite(v)) {
        e.status = CheckStatus::Fail;
        e.witnesses.push_back({{{"r", x}}, v, 0.0, name + "(r) >= 0 and finite"});
        return e;
      }
    }
  } catch (const expr::EvalError& err) {
    e.status = CheckStatus::Fail;
    e.reason = err.what();
  }
  return e;
}

HypothesisEntry check_c1(const ScalarFn& f, const std::string& name, double R, int n) {
  if (!(R > 0.0) || n < 3) throw InvalidArgument("check_c1: need R > 0 and n >= 3");
  HypothesisEntry e;
  e.name = "C1:" + name;
  e.sampling = std::to_string(n) + " uniform points on [0, " + num(R) + "]";
  auto fail = [&](Witness w) {
    e.status = CheckStatus::Fail;
    e.witnesses.push_back(std::move(w));
    return e;
  };
  try {
    auto xs = uniform_samples(R, n);
    std::vector<double> ys(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = f(xs[i]);
    if (!(std::abs(ys[0]) <= kTolZero)) return fail({{{"s", 0.0}}, ys[0], 0.0, name + "(0) == 0"});
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!std::isfinite(ys[i]) || ys[i] < 0.0) return fail({{{"s", xs[i]}}, ys[i], 0.0, name + "(s) >= 0"});
      if (i > 0 && !(ys[i] > 0.0)) return fail({{{"s", xs[i]}}, ys[i], 0.0, name + "(s) > 0 for s > 0"});
      if (i > 0 && ys[i - 1] > ys[i]) {
        return fail({{{"s0", xs[i - 1]}, {"s1", xs[i]}}, ys[i - 1], ys[i], name + "(s0) <= " + name + "(s1)"});
      }
    }
  } catch (const expr::EvalError& err) {
    e.status = CheckStatus::Indeterminate;
    e.reason = err.what();
  }
  return e;
}

HypothesisEntry check_growth(const ScalarFn& g, const std::string& name, double R, int n) {
  HypothesisEntry e;
  e.name = "C2-growth:" + name;
  e.sampling = std::to_string(n) + " uniform points on [0, " + num(R) + "]";
  try {
    auto xs = uniform_samples(R, n);
    double prev = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double v = g(xs[i]);
      if (!std::isfinite(v) || v < 0.0) {
        e.status = CheckStatus::Fail;
        e.witnesses.push_back({{{"s", xs[i]}}, v, 0.0, name + "(s) >= 0"});
        return e;
      }
      if (i > 0 && prev > v) {
        e.status = CheckStatus::Fail;
        e.witnesses.push_back({{{"s0", xs[i - 1]}, {"s1", xs[i]}}, prev, v, name + "(s0) <= " + name + "(s1)"});
        return e;
      }
      prev = v;
    }
  } catch (const expr::EvalError& err) {
    e.status = CheckStatus::Indeterminate;
    e.reason = err.what();
  }
  return e;
}

bool c2_witness_violates(const ScalarFn& f, const ScalarFn& h, const ScalarFn& omega, double cbar, const Witness& w) {
  double t = 0.0;
  double s = 0.0;
  for (const auto& [k, v] : w.inputs) {
    if (k == "t") t = v;
    if (k == "w") s = v;
  }
  double lhs = f(t * s);
  double rhs = cbar * h(t) * omega(s);
  return lhs > rhs * (1.0 + kTolC2);
}

HypothesisEntry check_c2_side(const ScalarFn& f, const ScalarFn& h, const ScalarFn& omega, double cbar, double t_min,
                              double t_max, double w_max, int n, const std::string& name) {
  if (!(t_max > t_min) || !(t_min > 0.0) || !(w_max > 1.0) || n < 2) {
    throw InvalidArgument("check_c2: need 0 < t_min < t_max, w_max > 1, n >= 2");
  }
  HypothesisEntry e;
  e.name = name;
  e.sampling = std::to_string(n) + "x" + std::to_string(n) + " log-spaced grid on [" + num(t_min) + ", " + num(t_max) +
               "] x [1, " + num(w_max) + "]";
  try {
    auto ts = log_samples(t_min, t_max, n);
    auto ws = log_samples(1.0, w_max, n);
    for (double t : ts) {
      double ht = h(t);
      for (double w : ws) {
        double lhs = f(t * w);
        double rhs = cbar * ht * omega(w);
        if (!std::isfinite(lhs) || !std::isfinite(rhs)) {
          e.status = CheckStatus::Indeterminate;
          e.reason = "non-finite value at t=" + num(t) + ", w=" + num(w);
          return e;
        }
        if (lhs > rhs * (1.0 + kTolC2)) {
          e.status = CheckStatus::Fail;
          e.witnesses.push_back({{{"t", t}, {"w", w}}, lhs, rhs, "f(t*w) <= cbar*h(t)*omega(w)"});
          return e;
        }
      }
    }
  } catch (const expr::EvalError& err) {
    e.status = CheckStatus::Indeterminate;
    e.reason = err.what();
  }
  return e;
}

HypothesisEntry check_c2(const ProblemSpec& spec, double t_max, double w_max, int n) {
  BigM m = big_m(spec);
  double t1 = m.M1 * spec.f2(spec.a);
  double t2 = m.M2 * spec.f1(spec.b);
  if (!(t_max > t1) || !(t_max > t2)) throw InvalidArgument("check_c2: t_max must exceed M1*f2(a) and M2*f1(b)");
  HypothesisEntry first = check_c2_side(spec.f1, spec.h1, spec.w1, spec.cbar1, t1, t_max, w_max, n, "C2:c21");
  HypothesisEntry second = check_c2_side(spec.f2, spec.h2, spec.w2, spec.cbar2, t2, t_max, w_max, n, "C2:c22");
  HypothesisEntry e;
  e.name = "C2";
  e.sampling = "c21: " + first.sampling + "; c22: " + second.sampling;
  for (auto* side : {&first, &second}) {
    for (auto w : side->witnesses) {
      w.relation = side->name + ": " + w.relation;
      e.witnesses.push_back(std::move(w));
    }
    if (side->status == CheckStatus::Fail) e.status = CheckStatus::Fail;
    if (side->status == CheckStatus::Indeterminate && e.status == CheckStatus::Pass) e.status = CheckStatus::Indeterminate;
    if (!side->reason.empty()) e.reason += side->name + ": " + side->reason + " ";
  }
  return e;
}

WeightThreshold weight_threshold(const ScalarFn& p, int N, double R_probe, int n) {
  if (!(R_probe > 0.0) || n < 2) throw InvalidArgument("weight_threshold: need R_probe > 0 and n >= 2");
  WeightThreshold out;
  out.R_probe = R_probe;
  out.samples = n;
  try {
    auto rs = uniform_samples(R_probe, n);
    std::vector<double> q(rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) {
      q[i] = std::pow(rs[i], 2 * N - 2) * p(rs[i]);
      if (!std::isfinite(q[i])) {
        out.reason = "non-finite r^(2N-2) p(r) at r=" + num(rs[i]);
        return out;
      }
    }
    std::size_t j = q.size() - 1;
    while (j > 0 && q[j - 1] <= q[j]) --j;
    if (j == q.size() - 1) {
      out.reason = "r^(2N-2) p(r) is decreasing at the end of [0, " + num(R_probe) + "]";
      return out;
    }
    out.pass = true;
    out.threshold = rs[j];
  } catch (const expr::EvalError& err) {
    out.reason = err.what();
  }
  return out;
}

HypothesisReport check_hypotheses(const ProblemSpec& spec, const HypothesisOptions& opts) {
  HypothesisReport r;
  r.entries.push_back(check_p1(spec.p1, "p1", opts.R_weights, opts.n));
  r.entries.push_back(check_p1(spec.p2, "p2", opts.R_weights, opts.n));
  r.entries.push_back(check_c1(spec.f1, "f1", opts.R_values, opts.n));
  r.entries.push_back(check_c1(spec.f2, "f2", opts.R_values, opts.n));
  r.entries.push_back(check_growth(spec.h1, "h1", opts.R_values, opts.n));
  r.entries.push_back(check_growth(spec.h2, "h2", opts.R_values, opts.n));
  r.entries.push_back(check_growth(spec.w1, "w1", opts.R_values, opts.n));
  r.entries.push_back(check_growth(spec.w2, "w2", opts.R_values, opts.n));

  double f2a = spec.f2(spec.a);
  double f1b = spec.f1(spec.b);
  if (!(f2a > 0.0) || !(f1b > 0.0) || !std::isfinite(f2a) || !std::isfinite(f1b)) {
    HypothesisEntry e;
    e.name = "C2";
    e.status = CheckStatus::Fail;
    e.witnesses.push_back({{{"a", spec.a}, {"b", spec.b}}, f2a, f1b, "f2(a) > 0 and f1(b) > 0"});
    e.reason = "M1, M2 undefined";
    r.entries.push_back(std::move(e));
    return r;
  }
  BigM m = big_m(spec);
  double t_max = opts.c2_t_factor * std::max(m.M1 * f2a, m.M2 * f1b);
  r.entries.push_back(check_c2(spec, t_max, opts.c2_w_max, opts.c2_n));
  return r;
}

}  // namespace koradial
