#include <doctest.h>

#include <cmath>
#include <random>

#include "koradial/quadrature.hpp"

using namespace koradial;

namespace {

double max_rel_err(const Profile& p, const std::function<double(double)>& exact) {
  double err = 0;
  for (Index i = 0; i < p.size(); ++i) {
    double e = exact(p.grid().node(i));
    err = std::max(err, std::abs(p.value(i) - e) / std::max(1.0, std::abs(e)));
  }
  return err;
}

// K[s](r) for v(s) = s: inner r^(N+1)/(N+1), outer r^2/(N+1), so r^3/(3(N+1)).
double nested_error(int N, int panels) {
  GridPtr g = make_grid(10, panels, 2.0);
  Vector v = g->nodes();
  Profile k = nested_radial(v, g, N);
  double err = 0;
  for (Index i = 0; i < k.size(); ++i) {
    double r = g->node(i);
    err = std::max(err, std::abs(k.value(i) - r * r * r / (3.0 * (N + 1))));
  }
  return err;
}

}  // namespace

TEST_CASE("graded grid layout") {
  GridPtr g = make_grid(10, 4, 2.0, 5);
  CHECK(g->size() == 4 * 4 + 1);
  CHECK(g->front() == 0.0);
  CHECK(g->back() == 10.0);
  auto b = g->panel_boundaries();
  REQUIRE(b.size() == 5);
  for (int j = 0; j <= 4; ++j) CHECK(b[std::size_t(j)] == doctest::Approx(10.0 * (j / 4.0) * (j / 4.0)));
  CHECK(g->locate(-1) == 0);
  CHECK(g->locate(100) == g->size() - 2);
  Index i = g->locate(3.3);
  CHECK(g->node(i) <= 3.3);
  CHECK(g->node(i + 1) >= 3.3);
  CHECK_THROWS(make_grid(10, 4, 2.0, 4));  // even node count per panel
}

TEST_CASE("probe grid contains every probe radius") {
  GridPtr g = make_probe_grid(8, 10);
  for (int j = 0; j <= 10; ++j) {
    double R = 8 * std::ldexp(1.0, j);
    Index i = g->locate(R);
    const bool hit = g->node(i) == doctest::Approx(R).epsilon(1e-14) ||
                     g->node(i + 1) == doctest::Approx(R).epsilon(1e-14);
    CHECK(hit);
  }
}

TEST_CASE("cumulative integral is exact on cubics") {
  GridPtr g = make_grid(3, 6, 1.7);
  auto F = cumulative_integral([](double x) { return 1 - 2 * x + 3 * x * x - 0.5 * x * x * x; }, g);
  CHECK(max_rel_err(F, [](double x) { return x - x * x + x * x * x - x * x * x * x / 8; }) < 1e-13);
}

TEST_CASE("K[1] = r^2 / (2N)") {
  // Exact while s^(N-1) is at most cubic.
  for (int N : {3, 4}) {
    GridPtr g = make_grid(10, 32, 2.0);
    Profile k = nested_radial(Vector::Ones(g->size()), g, N);
    CHECK(max_rel_err(k, [N](double r) { return r * r / (2.0 * N); }) < 1e-12);
  }
  for (int N : {5, 7}) {
    double e[3];
    for (int j = 0; j < 3; ++j) {
      GridPtr g = make_grid(10, 8 << j, 2.0);
      e[j] = max_rel_err(nested_radial(Vector::Ones(g->size()), g, N), [N](double r) { return r * r / (2.0 * N); });
    }
    INFO("N=", N, " errors ", e[0], " ", e[1], " ", e[2]);
    CHECK(std::log2(e[1] / e[2]) >= 3.5);
    CHECK(e[2] < e[1]);
  }
}

TEST_CASE("nested_radial is exact for v = s at N = 3") {
  CHECK(nested_error(3, 4) < 1e-12);
}

TEST_CASE("nested_radial convergence order on v = s") {
  for (int N : {4, 5}) {
    double e1 = nested_error(N, 4), e2 = nested_error(N, 8), e3 = nested_error(N, 16);
    double order1 = std::log2(e1 / e2), order2 = std::log2(e2 / e3);
    INFO("N=", N, " errors ", e1, " ", e2, " ", e3);
    CHECK(order1 >= 3.5);
    CHECK(order2 >= 3.5);
  }
}

TEST_CASE("nested_radial rejects negative input") {
  GridPtr g = make_grid(1, 2, 1.0);
  Vector v = Vector::Ones(g->size());
  v[3] = -1;
  CHECK_THROWS_AS(nested_radial(v, g, 3), Error);
}

TEST_CASE("profile interpolation reproduces nodes and keeps monotonicity") {
  GridPtr g = make_grid(5, 5, 1.0, 3);
  Vector v(g->size());
  for (Index i = 0; i < v.size(); ++i) v[i] = std::floor(g->node(i));  // staircase
  Profile p(g, v);
  CHECK(p.nondecreasing());
  for (Index i = 0; i < v.size(); ++i) CHECK(p(g->node(i)) == v[i]);
  double prev = -1;
  for (int k = 0; k <= 2000; ++k) {
    double y = p(5.0 * k / 2000);
    CHECK(y >= prev - 1e-15);
    prev = y;
  }
  CHECK_THROWS(Profile(nullptr, Vector()));
}

TEST_CASE("running max") {
  GridPtr g = make_grid(4, 4, 1.0, 3);
  Profile m = running_max([](double r) { return std::sin(r); }, g);
  CHECK(m.nondecreasing());
  double top = 0;
  for (Index i = 0; i < g->size(); ++i) {
    top = std::max(top, std::sin(g->node(i)));
    CHECK(m.value(i) == top);
  }
}

TEST_CASE("tail_limit fixtures") {
  auto fin = tail_limit([](double R) { return 1 - 1 / R; });
  REQUIRE(fin.finite());
  CHECK(std::abs(fin.value - 1) <= 1e-6);
  CHECK(tail_limit([](double R) { return std::log1p(R); }).divergent());
  CHECK(tail_limit([](double R) { return R * R / 6; }).divergent());
  auto nan = tail_limit([](double R) { return R > 100 ? std::nan("") : 1.0; });
  CHECK(nan.indeterminate());
}

TEST_CASE("property: tail_limit on algebraic and logarithmic families") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> gam(0.5, 3.0), C(0.1, 10), L(-5, 5), grow(0.1, 2.0);
  TailOptions opts;
  opts.doublings = 60;
  for (int trial = 0; trial < 200; ++trial) {
    double g = gam(rng), c = C(rng), l = L(rng);
    auto v = tail_limit([&](double R) { return l - c * std::pow(R, -g); }, opts);
    INFO("finite family gamma=", g, " C=", c, " L=", l);
    REQUIRE(v.finite());
    CHECK(std::abs(v.value - l) <= 1e-5 * std::max(1.0, std::abs(l)));
    CHECK(v.error_estimate >= 0);
  }
  for (int trial = 0; trial < 200; ++trial) {
    double g = grow(rng), c = C(rng);
    INFO("divergent family gamma=", g, " C=", c);
    CHECK(tail_limit([&](double R) { return c * std::pow(R, g); }, opts).divergent());
    CHECK(tail_limit([&](double R) { return c * std::log(R); }, opts).divergent());
  }
}

TEST_CASE("tail_limit_from_probes matches tail_limit") {
  TailOptions o;
  o.doublings = 20;
  std::vector<double> r, v;
  for (int j = 0; j <= o.doublings; ++j) {
    r.push_back(o.R0 * std::ldexp(1.0, j));
    v.push_back(2 - 1 / (r.back() * r.back()));
  }
  auto a = tail_limit_from_probes(r, v, o);
  auto b = tail_limit([](double R) { return 2 - 1 / (R * R); }, o);
  CHECK(a.kind == b.kind);
  CHECK(a.value == b.value);
}
