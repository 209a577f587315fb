#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cvxint/applications.hpp"
#include "cvxint/error.hpp"
#include "cvxint/integrator.hpp"
#include "cvxint/realization.hpp"
#include "support/generators.hpp"
#include "support/targets.hpp"

using namespace cvxint;
using cvxint::testing::Rng;

namespace {

const LinearConstraint kTrace(Mat::identity(2), 0.0);
const Mat kW = outer(Vec{0, 1}, Vec{1, 0});  // trace free, rank one

GradientField flat_field(const Mat& eta, std::size_t res) {
  return GradientField::from_boundary(Box::unit(2), res, kTrace, BoundaryMap::affine(eta, Vec{0.25, -0.5}));
}

}  // namespace

TEST_CASE("iteration schedule") {
  const IterationSchedule s = IterationSchedule::make(0.1, 5);
  CHECK(s.valid());
  CHECK(s.delta[0] == 0.5);
  for (std::size_t j = 1; j <= 5; ++j) {
    CHECK(s.eps[j - 1] < std::ldexp(1.0, -static_cast<int>(j)));
    if (j >= 2) {
      CHECK(s.delta[j - 1] == std::min(std::ldexp(0.1, -static_cast<int>(j)), s.delta[j - 2] * s.eps[j - 2] / 2));
      CHECK(s.eps[j - 1] < s.eps[j - 2]);
    }
  }
  double tail = 0.0;
  for (std::size_t j = 2; j <= 5; ++j) tail += s.delta[j - 1];
  CHECK(tail <= 0.1 / 2);
  CHECK_THROWS_AS(IterationSchedule::make(0.0, 3), Error);
  CHECK_THROWS_AS(IterationSchedule::make(0.1, 0), Error);
}

TEST_CASE("boundary map and base field") {
  const Mat eta = Mat::from_rows({{0.5, 0.2}, {0.1, -0.5}});
  const BoundaryMap v = BoundaryMap::affine(eta, Vec{1, 2});
  Vec u(2);
  Mat g(2, 2);
  v.eval(Vec{0.5, 0.25}, u, g);
  CHECK(u[0] == doctest::Approx(1 + 0.25 + 0.05));
  CHECK(u[1] == doctest::Approx(2 + 0.05 - 0.125));
  CHECK(max_abs(g - eta) == 0.0);

  const GradientField f = GradientField::from_boundary(Box::unit(2), 16, kTrace, v);
  CHECK(f.node_count() == 17 * 17);
  CHECK(f.boundary_trace_error() == 0.0);
  CHECK(f.sup_distance_to_base() == 0.0);
  CHECK(f.max_constraint_residual() == 0.0);
  CHECK(f.exceptional_fraction() == 0.0);
  for (std::size_t i = 0; i < f.node_count(); ++i) CHECK(f.stage(i) == 0);

  std::ostringstream os;
  f.write_csv(os);
  CHECK(os.str().rfind("x1,x2,u1,u2,g11,g12,g21,g22,constraint_residual,stage,in_target\n", 0) == 0);

  SUBCASE("smooth boundary data gets dyadic roots") {
    const BoundaryMap sm = BoundaryMap::smooth(2, 2, [](std::span<const double> x, std::span<double> uu, Mat& gg) {
      uu[0] = x[0] * x[0];
      uu[1] = -x[1] * x[0];
      gg = Mat::from_rows({{2 * x[0], 0}, {-x[1], -x[0]}});
    });
    const GradientField fs = GradientField::from_boundary(Box::unit(2), 16, kTrace, sm, {}, 0.5);
    CHECK(fs.root_depth() >= 1);
    CHECK(fs.boundary_trace_error() == 0.0);
  }
}

TEST_CASE("realize_laminate") {
  SUBCASE("Dirac gives a zero perturbation") {
    const RealizeResult r = realize_laminate(Mat(2, 2), dirac(Mat(2, 2)), Box::unit(2), kTrace, 0.1, 8);
    CHECK(r.root->kind() == Realization::Kind::Leaf);
    CHECK(r.stats.sup_measured == 0.0);
    REQUIRE(r.stats.measured.size() == 1);
    CHECK(r.stats.measured[0] == 1.0);
  }
  SUBCASE("symmetric two-atom laminate") {
    const double eps = 0.05;
    const Laminate nu = dirac(Mat(2, 2)).split(0, kW, -1.0 * kW, 0.5);
    const RealizeResult r = realize_laminate(Mat(2, 2), nu, Box::unit(2), kTrace, eps, 8);
    REQUIRE(r.stats.measured.size() == 2);
    CHECK(std::abs(r.stats.measured[0] - 0.5) < eps);
    CHECK(std::abs(r.stats.measured[1] - 0.5) < eps);
    CHECK(std::abs(r.stats.expected[0] - 0.5) < eps);
    CHECK(r.stats.sup_measured < eps);
    CHECK(r.stats.sup_bound < eps);
    CHECK(r.stats.boundary_max == 0.0);
    CHECK(r.stats.max_residual < 1e-12);
  }
  SUBCASE("T4 staircase corner mass") {
    for (int d : {2, 4}) {
      const double eps = 0.1;
      const Laminate nu = t4_staircase(Mat(2, 2), d);
      const RealizeResult r = realize_laminate(Mat(2, 2), nu, Box::unit(2), t4_constraint(1.0), eps, 32, {}, 256);
      double corner = 0.0;
      const T4Config t4 = T4Config::standard();
      for (std::size_t a = 0; a < nu.atoms().size(); ++a)
        for (const Mat& A : t4.A)
          if (hs_norm(nu.atoms()[a].matrix - A) < 1e-12) corner += r.stats.measured[a];
      CHECK(corner >= 1 - std::ldexp(1.0, -d) - eps);
      CHECK(r.stats.max_residual < 1e-10);
      CHECK(r.stats.boundary_max == 0.0);
    }
  }
  CHECK_THROWS_AS(realize_laminate(Mat::diag2(1, 0), dirac(Mat(2, 2)), Box::unit(2), kTrace, 0.1, 4), Error);
}

TEST_CASE("refine_field") {
  const TargetSpec target = testing::two_atom_target(kTrace, kW, -1.0 * kW, 0.05);
  RefineOptions opt;
  SUBCASE("gradient already in the target") {
    const GradientField f = flat_field(kW, 64);
    const RefineResult r = refine_field(f, target, 0.05, opt);
    CHECK(r.stats.fraction_after == 1.0);
    CHECK(r.stats.leaves_refined == 0);
    CHECK(r.field.sup_distance(f) == 0.0);
  }
  SUBCASE("gradient at the barycenter") {
    const double eps = 0.1;
    const GradientField f = flat_field(Mat(2, 2), 128);
    const RefineResult r = refine_field(f, target, eps / 4, opt);
    CHECK(r.stats.fraction_before == 0.0);
    CHECK(r.stats.fraction_after >= 1 - eps);
    CHECK(r.stats.budget_honored());
    CHECK(r.stats.max_residual < 1e-8);
    CHECK(r.field.boundary_trace_error() == 0.0);
    for (std::size_t i = 0; i < f.node_count(); ++i)
      if (f.on_boundary(i)) {
        for (std::size_t k = 0; k < 2; ++k) CHECK(r.field.u(i)[k] == f.u(i)[k]);
      }
  }
  SUBCASE("oracle failure leaves the field untouched") {
    const GradientField f = flat_field(Mat::from_rows({{0.3, 0}, {0, -0.3}}), 32);
    const RefineResult r = refine_field(f, target, 0.05, opt);
    CHECK(r.stats.oracle_failures > 0);
    CHECK(r.field.sup_distance(f) == 0.0);
  }
}

TEST_CASE("solve_open") {
  const TargetSpec target = testing::two_atom_target(kTrace, kW, -1.0 * kW, 0.05);
  RefineOptions opt;
  opt.realize.grid_hint = 256;
  const double eps = 0.1;
  const GradientField f = flat_field(Mat(2, 2), 256);
  SUBCASE("one stage equals one refinement") {
    const SolveResult s = solve_open(f, target, eps, 1, opt);
    RefineOptions one = opt;
    one.exceptional_fraction = 0.1 / 2;
    const RefineResult r = refine_field(f, target, eps / 4, one);
    REQUIRE(s.report.stages.size() == 1);
    CHECK(s.report.stages[0].fraction_after == r.stats.fraction_after);
    CHECK(s.report.stages[0].sup_change == r.stats.sup_change);
    CHECK(s.field.sup_distance(r.field) == 0.0);
  }
  SUBCASE("three stages") {
    const SolveResult s = solve_open(f, target, eps, 3, opt);
    CHECK(s.report.budgets_honored);
    REQUIRE(s.report.stages.size() == 3);
    for (std::size_t k = 1; k <= 3; ++k) CHECK(s.report.stages[k - 1].sup_change <= std::ldexp(eps, -static_cast<int>(k + 1)));
    CHECK(s.report.sup_distance <= eps / 2);
    CHECK(s.report.max_residual < 1e-8);
    CHECK(s.report.boundary_trace_error == 0.0);
    // The region outside the target shrinks at every stage.
    for (std::size_t k = 1; k < s.report.fractions.size(); ++k) CHECK(s.report.fractions[k] >= s.report.fractions[k - 1]);
    // Only boundary nodes, where φ and ∇φ vanish, may stay outside the target.
    std::size_t inside = 0, interior = 0;
    for (std::size_t i = 0; i < s.field.node_count(); ++i) {
      if (s.field.on_boundary(i)) continue;
      ++interior;
      inside += target.contains(s.field.grad(i)) ? 1 : 0;
    }
    CHECK(static_cast<double>(inside) >= 0.999 * static_cast<double>(interior));
    // Exact measure of the atom regions: at least 1 − ε³.
    const auto vf = volume_fractions(*s.field.construction().roots[0], 2);
    CHECK(vf.atoms[0] + vf.atoms[1] >= 1.0 - eps * eps * eps);
    CHECK(vf.exceptional + vf.parent + vf.base <= eps * eps * eps);
    const Json j = s.report.to_json();
    CHECK(j["stages"].size() == 3);
  }
  CHECK_THROWS_AS(solve_open(f, target, eps, 0, opt), Error);
}

TEST_CASE("solve_in_approx") {
  // Nested two-atom balls shrinking towards K = {w, −w}.
  InApproximation approx;
  for (int j = 1; j <= 3; ++j) {
    TargetSpec s = testing::two_atom_target(kTrace, kW, -1.0 * kW, std::ldexp(0.2, -j));
    if (j == 1) {
      s.contains = [](const Mat&) { return true; };
      s.laminate_oracle = [](const Mat&, double) { return std::optional<Laminate>{}; };
    }
    approx.sets.push_back(std::move(s));
  }
  approx.bound_M = 2.0;
  approx.limit_distance = [](const Mat& xi) { return std::min(hs_norm(xi - kW), hs_norm(xi + kW)); };
  const double eps = 0.2;
  const IterationSchedule sched = IterationSchedule::make(eps, 3);
  const GradientField f = flat_field(Mat(2, 2), 128);
  RefineOptions opt;
  SUBCASE("one stage is the identity") {
    const InApproxResult r = solve_in_approx(f, approx, sched, 1, opt);
    CHECK(r.field.sup_distance(f) == 0.0);
    CHECK(r.report.stages.size() == 1);
    CHECK(r.report.stages[0].fraction == 1.0);
  }
  SUBCASE("all stages") {
    const InApproxResult r = solve_in_approx(f, approx, sched, 3, opt);
    CHECK(r.report.budgets_honored);
    CHECK(r.report.cumulative_sup_change <= eps / 2);
    CHECK(r.report.max_residual < 1e-8);
    CHECK(r.report.boundary_trace_error == 0.0);
    for (std::size_t k = 1; k < r.report.stages.size(); ++k)
      CHECK(r.report.stages[k].median_limit_distance <= r.report.stages[k - 1].median_limit_distance);
  }
  CHECK_THROWS_AS(solve_in_approx(f, approx, sched, 4, opt), Error);
}

TEST_CASE("sampling is independent of the thread count") {
  const TargetSpec target = testing::two_atom_target(kTrace, kW, -1.0 * kW, 0.05);
  RefineOptions one, four;
  four.sample.threads = 4;
  const GradientField f = flat_field(Mat(2, 2), 64);
  const SolveResult a = solve_open(f, target, 0.1, 2, one);
  const SolveResult b = solve_open(f, target, 0.1, 2, four);
  std::ostringstream sa, sb;
  a.field.write_csv(sa);
  b.field.write_csv(sb);
  CHECK(sa.str() == sb.str());
}
