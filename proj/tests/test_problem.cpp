#include <doctest.h>

#include <cmath>
#include <random>

#include "koradial/problem.hpp"

using namespace koradial;

namespace {

ProblemSpec power_spec(double alpha, double beta, double a = 1, double b = 1) {
  ProblemSpec s;
  s.N = 3;
  s.a = a;
  s.b = b;
  s.p1 = ScalarFn::constant(1);
  s.p2 = ScalarFn::constant(1);
  s.f1 = s.h1 = s.w1 = ScalarFn::power(alpha);
  s.f2 = s.h2 = s.w2 = ScalarFn::power(beta);
  return s;
}

// For f = s^p, h = t^q, omega = w^s the C2 inequality in log variables is
// linear, so it holds on a rectangle iff it holds at the four corners.
bool c2_power_holds(double p, double q, double s, double cbar, double t0, double t1, double w1) {
  for (double t : {t0, t1}) {
    for (double w : {1.0, w1}) {
      if (p * std::log(t * w) > std::log(cbar) + q * std::log(t) + s * std::log(w) + 1e-9) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("from_source builds labelled functions") {
  ScalarFn f = ScalarFn::from_source("x^alpha", {{"alpha", 0.5}});
  CHECK(f(9) == doctest::Approx(3));
  CHECK(f.label.find("alpha=0.5") != std::string::npos);
  CHECK(ScalarFn::constant(2)(123) == 2);
  CHECK(ScalarFn::power(3)(2) == 8);
}

TEST_CASE("fingerprints are stable and sensitive") {
  ProblemSpec s = power_spec(0.5, 0.5);
  CHECK(s.fingerprint() == power_spec(0.5, 0.5).fingerprint());
  CHECK(s.fingerprint() != power_spec(0.5, 0.6).fingerprint());
  CHECK(s.fingerprint() != power_spec(0.5, 0.5, 2, 1).fingerprint());
  ProblemSpec t = s;
  t.f1 = ScalarFn::from_source("x^k", {{"k", 0.5}});
  ProblemSpec u = s;
  u.f1 = ScalarFn::from_source("x^k", {{"k", 0.6}});
  CHECK(t.fingerprint() != u.fingerprint());
}

TEST_CASE("swapping twice is the identity") {
  ProblemSpec s = power_spec(0.5, 2, 3, 7);
  s.cbar1 = 2;
  ProblemSpec w = s.swapped();
  CHECK(w.a == 7);
  CHECK(w.b == 3);
  CHECK(w.cbar2 == 2);
  CHECK(w.f1(2) == doctest::Approx(4));
  CHECK(w.swapped().fingerprint() == s.fingerprint());
}

TEST_CASE("validation rejects structural errors") {
  ProblemSpec s = power_spec(1, 1);
  CHECK_NOTHROW(s.validate());
  ProblemSpec t = s;
  t.N = 2;
  CHECK_THROWS_AS(t.validate(), InvalidArgument);
  t = s;
  t.a = 0;
  CHECK_THROWS_AS(t.validate(), InvalidArgument);
  t = s;
  t.cbar2 = -1;
  CHECK_THROWS_AS(t.validate(), InvalidArgument);
  t = s;
  t.f2 = ScalarFn::constant(0);
  CHECK_THROWS_AS(t.validate(), InvalidArgument);
}

TEST_CASE("big M from the central values") {
  ProblemSpec s = power_spec(1, 1, 2, 5);
  BigM m = big_m(s);
  CHECK(m.M1 == doctest::Approx(2.5));  // b / f2(a) = 5 / 2
  CHECK(m.M2 == 1.0);                   // a = 2 < f1(b) = 5
}

TEST_CASE("C1 and weight checks") {
  CHECK(check_c1(ScalarFn::power(2), "f", 10, 50).status == CheckStatus::Pass);
  auto shifted = check_c1(ScalarFn::from_source("1+x"), "f", 10, 50);
  CHECK(shifted.status == CheckStatus::Fail);
  REQUIRE(shifted.witnesses.size() == 1);
  CHECK(shifted.witnesses[0].lhs == 1.0);
  auto wavy = check_c1(ScalarFn::from_source("x + sqrt(x)*0 + max(0, 2 - abs(x - 5))*0 - min(x, 0)"), "f", 10, 50);
  CHECK(wavy.status == CheckStatus::Pass);
  auto drop = check_c1(ScalarFn::from_source("x*exp(-x)"), "f", 10, 50);
  CHECK(drop.status == CheckStatus::Fail);
  CHECK(check_p1(ScalarFn::from_source("x - 1"), "p", 10, 50).status == CheckStatus::Fail);
  // A weight undefined somewhere on [0, R] violates the hypothesis outright.
  auto undefined = check_p1(ScalarFn::from_source("log(x - 1)"), "p", 10, 50);
  CHECK(undefined.status == CheckStatus::Fail);
  CHECK(undefined.reason.find("log") != std::string::npos);
  // For f an evaluation error is not a witness, so the verdict is open.
  CHECK(check_c1(ScalarFn::from_source("log(x - 1)"), "f", 10, 50).status == CheckStatus::Indeterminate);
}

TEST_CASE("weight threshold on r^(2N-2) p(r)") {
  auto w = weight_threshold(ScalarFn::from_source("(1+x)^(-4)"), 3, 500, 1000);
  CHECK(w.pass);
  CHECK(w.threshold < 2.0);  // r^4/(1+r)^4 increases everywhere
  auto bump = weight_threshold(ScalarFn::from_source("exp(-x)"), 3, 500, 1000);
  CHECK_FALSE(bump.pass);
}

TEST_CASE("property: C2 sampling agrees with the analytic corner test") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> exps(0.2, 3.0), cb(0.5, 4.0);
  int fails = 0, passes = 0;
  for (int trial = 0; trial < 300; ++trial) {
    double p = exps(rng), q = exps(rng), s = exps(rng), cbar = cb(rng);
    const double t0 = 1.5, t1 = 150, w1 = 100;
    auto e = check_c2_side(ScalarFn::power(p), ScalarFn::power(q), ScalarFn::power(s), cbar, t0, t1, w1, 40, "c2");
    bool expect = c2_power_holds(p, q, s, cbar, t0, t1, w1);
    INFO("p=", p, " q=", q, " s=", s, " cbar=", cbar);
    CHECK((e.status == CheckStatus::Pass) == expect);
    if (e.status == CheckStatus::Fail) {
      ++fails;
      REQUIRE(e.witnesses.size() == 1);
      CHECK(c2_witness_violates(ScalarFn::power(p), ScalarFn::power(q), ScalarFn::power(s), cbar, e.witnesses[0]));
    } else {
      ++passes;
    }
  }
  CHECK(fails > 20);
  CHECK(passes > 20);
}

TEST_CASE("property: C2 sampling agrees with brute force on the same points") {
  // Non-power data: the check must fail exactly when some sampled point fails.
  auto f = ScalarFn::from_source("x^2/(1+x)");
  auto h = ScalarFn::from_source("x");
  auto w = ScalarFn::from_source("x");
  for (double cbar : {0.5, 0.9, 1.0, 1.1, 2.0}) {
    const int n = 25;
    const double t0 = 0.5, t1 = 50, w1 = 20;
    bool violated = false;
    for (int i = 0; i < n; ++i) {
      double t = t0 * std::pow(t1 / t0, double(i) / (n - 1));
      for (int j = 0; j < n; ++j) {
        double ww = std::pow(w1, double(j) / (n - 1));
        if (f(t * ww) > cbar * h(t) * w(ww) * (1 + kTolC2)) violated = true;
      }
    }
    auto e = check_c2_side(f, h, w, cbar, t0, t1, w1, n, "c2");
    INFO("cbar=", cbar);
    CHECK((e.status == CheckStatus::Fail) == violated);
  }
}

TEST_CASE("hypothesis report ordering of statuses") {
  HypothesisReport r;
  r.entries.resize(3);
  CHECK(r.overall() == CheckStatus::Pass);
  r.entries[1].status = CheckStatus::Indeterminate;
  CHECK(r.overall() == CheckStatus::Indeterminate);
  r.entries[2].status = CheckStatus::Fail;
  CHECK(r.overall() == CheckStatus::Fail);
}

TEST_CASE("full hypothesis sweep on a power system") {
  auto rep = check_hypotheses(power_spec(0.5, 0.5));
  CHECK(rep.overall() == CheckStatus::Pass);
  ProblemSpec bad = power_spec(0.5, 0.5);
  bad.h1 = ScalarFn::constant(1e-3);  // f1(t w) <= cbar h1(t) w1(w) fails
  bad.w1 = ScalarFn::constant(1e-3);
  auto rep2 = check_hypotheses(bad);
  CHECK(rep2.overall() == CheckStatus::Fail);
}
