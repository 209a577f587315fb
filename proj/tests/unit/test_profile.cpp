#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cvxint/error.hpp"
#include "cvxint/profile.hpp"

using namespace cvxint;

TEST_CASE("smoothstep is a C3 ramp from 0 to 1") {
  CHECK(smoothstep::value(0.0) == 0.0);
  CHECK(smoothstep::value(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(smoothstep::value(0.5) == doctest::Approx(0.5).epsilon(1e-15));
  for (double t : {0.0, 1.0}) {
    CHECK(std::abs(smoothstep::d1(t)) < 1e-14);
    CHECK(std::abs(smoothstep::d2(t)) < 1e-13);
  }
  CHECK(smoothstep::d1(0.5) == doctest::Approx(smoothstep::kMaxD1));
  // Derivatives against central differences, antiderivatives against Simpson quadrature.
  const double h = 1e-5;
  double max_d2 = 0.0;
  for (int i = 1; i < 100; ++i) {
    const double t = i / 100.0;
    CHECK(smoothstep::d1(t) == doctest::Approx((smoothstep::value(t + h) - smoothstep::value(t - h)) / (2 * h)).epsilon(1e-8));
    CHECK(smoothstep::d2(t) == doctest::Approx((smoothstep::d1(t + h) - smoothstep::d1(t - h)) / (2 * h)).epsilon(1e-7));
    max_d2 = std::max(max_d2, std::abs(smoothstep::d2(t)));
  }
  CHECK(max_d2 <= smoothstep::kMaxD2 + 1e-12);
  const int N = 2000;
  double s = 0.0;
  for (int i = 0; i <= N; ++i) {
    const double t = static_cast<double>(i) / N;
    const double w = (i == 0 || i == N) ? 1 : (i % 2 ? 4 : 2);
    s += w * smoothstep::value(t);
  }
  s /= 3.0 * N;
  CHECK(smoothstep::integral1(1.0) == doctest::Approx(s).epsilon(1e-12));
  CHECK(smoothstep::integral1(1.0) == doctest::Approx(0.5).epsilon(1e-14));
}

namespace {

struct Quadrature {
  double integral_ddu = 0.0;
  double max_du_error = 0.0;
  double max_u_error = 0.0;
  double min_ddu = 1e300;
  double max_ddu = -1e300;
  double sup_u = 0.0;
  double sup_du = 0.0;
  bool support_ok = true;
};

// Integrates (u²)″ twice with the trapezoid rule and compares with the closed forms.
Quadrature integrate(const Profile& p, std::size_t N) {
  Quadrature q;
  const double h = 1.0 / static_cast<double>(N);
  double F = 0.0, G = 0.0;
  Profile::Sample prev = p.eval(0.0);
  for (std::size_t i = 1; i <= N; ++i) {
    const Profile::Sample cur = p.eval(static_cast<double>(i) * h);
    const double Fn = F + 0.5 * h * (prev.ddu + cur.ddu);
    G += 0.5 * h * (F + Fn);
    F = Fn;
    q.max_du_error = std::max(q.max_du_error, std::abs(F - cur.du));
    q.max_u_error = std::max(q.max_u_error, std::abs(G - cur.u));
    q.min_ddu = std::min(q.min_ddu, cur.ddu);
    q.max_ddu = std::max(q.max_ddu, cur.ddu);
    q.sup_u = std::max(q.sup_u, std::abs(cur.u));
    q.sup_du = std::max(q.sup_du, std::abs(cur.du));
    const double t = static_cast<double>(i) * h;
    if ((t < p.margin() || t > 1.0 - p.margin()) && (cur.u != 0.0 || cur.du != 0.0)) q.support_ok = false;
    prev = cur;
  }
  q.integral_ddu = F;
  return q;
}

}  // namespace

TEST_CASE("build_profile contract") {
  SUBCASE("lambda 0.5, tau 0.1") {
    const Profile p = build_profile(0.5, 0.1, 0.01);
    CHECK(p.measure_I1() > 0.45);
    CHECK(p.measure_I1() < 0.55);
  }
  SUBCASE("lambda 0.3, tau 0.05, delta 0.01 against quadrature") {
    const double lam = 0.3, tau = 0.05, delta = 0.01;
    const Profile p = build_profile(lam, tau, delta);
    const Quadrature q = integrate(p, 400000);
    CHECK(std::abs(q.integral_ddu) < 1e-10);
    CHECK(q.max_du_error < 1e-8);
    CHECK(q.max_u_error < 1e-8);
    CHECK(q.min_ddu >= -lam - 1e-15);
    CHECK(q.max_ddu <= 1 - lam + 1e-15);
    CHECK(q.sup_u < delta);
    CHECK(q.sup_du < delta);
    CHECK(q.sup_u <= p.sup_u() + 1e-15);
    CHECK(q.sup_du <= p.sup_du() + 1e-15);
    CHECK(q.support_ok);
    CHECK(std::abs(p.measure_I1() - lam) < tau / 2);
    CHECK(std::abs(p.measure_I2() - (1 - lam)) < tau / 2);
  }
  SUBCASE("plateaus carry the exact levels") {
    const double lam = 0.37;
    const Profile p = build_profile(lam, 0.1, 0.05);
    double sum1 = 0.0, sum2 = 0.0;
    for (auto [a, b] : p.intervals_I1()) {
      sum1 += b - a;
      for (int i = 0; i <= 10; ++i) CHECK(p.eval(a + (b - a) * i / 10.0).ddu == 1 - lam);
    }
    for (auto [a, b] : p.intervals_I2()) {
      sum2 += b - a;
      for (int i = 0; i <= 10; ++i) CHECK(p.eval(a + (b - a) * i / 10.0).ddu == -lam);
    }
    CHECK(sum1 == doctest::Approx(p.measure_I1()).epsilon(1e-12));
    CHECK(sum2 == doctest::Approx(p.measure_I2()).epsilon(1e-12));
  }
  SUBCASE("sweep of parameters") {
    for (double lam : {0.1, 0.5, 0.9})
      for (double tau : {0.2, 0.05})
        for (double delta : {0.1, 1e-3}) {
          const Profile p = build_profile(lam, tau, delta);
          CHECK(p.sup_u() < delta);
          CHECK(p.sup_du() < delta);
          CHECK(std::abs(p.measure_I1() - lam) < tau / 2);
          const Quadrature q = integrate(p, 200000);
          const double scale = std::max({1.0, q.max_ddu, -q.min_ddu});
          CHECK(std::abs(q.integral_ddu) < 1e-8 * scale);
        }
  }
  CHECK_THROWS_AS(build_profile(0.0, 0.1, 0.1), Error);
  CHECK_THROWS_AS(build_profile(0.5, 0.0, 0.1), Error);
  CHECK_THROWS_AS(build_profile(0.5, 0.1, 0.0), Error);
}

TEST_CASE("cutoff") {
  const Cutoff c(0.05, 0.1);
  CHECK(c.plateau_fraction_1d() == doctest::Approx(0.7));
  const std::vector<double> len{2.0, 0.5};
  double max_g = 0.0, max_h = 0.0;
  for (int i = 0; i <= 200; ++i)
    for (int j = 0; j <= 200; ++j) {
      const std::vector<double> y{len[0] * i / 200.0, len[1] * j / 200.0};
      std::vector<double> g(2), H(4);
      const double v = c.eval(y, len, g, H);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      const double z0 = y[0] / len[0], z1 = y[1] / len[1];
      if (z0 <= 0.05 || z0 >= 0.95 || z1 <= 0.05 || z1 >= 0.95) CHECK(v == 0.0);
      if (z0 > 0.1501 && z0 < 0.8499 && z1 > 0.1501 && z1 < 0.8499) CHECK(v == 1.0);
      max_g = std::max(max_g, std::hypot(g[0], g[1]));
      double fro = 0.0;
      for (double e : H) fro += e * e;
      max_h = std::max(max_h, std::sqrt(fro));
    }
  CHECK(max_g <= c.grad_bound(len) + 1e-12);
  CHECK(max_h <= c.hess_bound(len) + 1e-12);

  // Gradient against central differences in the ramp zone.
  const std::vector<double> y{0.2, 0.04};
  std::vector<double> g(2), H(4), gp(2), Hp(4);
  c.eval(y, len, g, H);
  const double h = 1e-6;
  for (int a = 0; a < 2; ++a) {
    std::vector<double> yp = y, ym = y;
    yp[a] += h;
    ym[a] -= h;
    const double fd = (c.eval(yp, len, gp, Hp) - c.eval(ym, len, gp, Hp)) / (2 * h);
    CHECK(g[a] == doctest::Approx(fd).epsilon(1e-6));
  }
  CHECK_THROWS_AS(Cutoff(0.3, 0.3), Error);
}
