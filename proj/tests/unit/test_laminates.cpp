#include <doctest.h>

#include <cmath>

#include "cvxint/applications.hpp"
#include "cvxint/error.hpp"
#include "cvxint/hulls.hpp"
#include "cvxint/laminates.hpp"
#include "support/generators.hpp"

using namespace cvxint;
using cvxint::testing::Rng;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected cvxint::Error");
  return ErrorKind::InvalidArgument;
}

Mat weighted_sum(const Laminate& nu) {
  Mat s(nu.root().rows(), nu.root().cols());
  for (const Atom& a : nu.atoms()) s += a.weight * a.matrix;
  return s;
}

double det2(const Mat& x) { return x(0, 0) * x(1, 1) - x(0, 1) * x(1, 0); }

}  // namespace

TEST_CASE("dirac") {
  const Laminate z = dirac(Mat(2, 2));
  CHECK(z.order() == 0);
  REQUIRE(z.atoms().size() == 1);
  CHECK(z.atoms()[0].weight == 1.0);
  CHECK(max_abs(z.atoms()[0].matrix) == 0.0);
  const Mat A1 = Mat::diag2(3, -1);
  CHECK(max_abs(barycenter(dirac(A1)) - A1) == 0.0);
}

TEST_CASE("split examples") {
  const Mat A1 = Mat::diag2(3, -1), J1 = Mat::diag2(-1, -1), J2 = Mat::diag2(1, -1);
  const Laminate nu = dirac(J2).split(0, A1, J1, 0.5);
  CHECK(nu.order() == 1);
  REQUIRE(nu.atoms().size() == 2);
  CHECK(nu.find_atom(A1) >= 0);
  CHECK(nu.find_atom(J1) >= 0);
  CHECK(max_abs(nu.barycenter() - J2) < 1e-15);
  CHECK(nu.weight_sum() == doctest::Approx(1.0));

  SUBCASE("eikonal endpoint split keeps the barycenter") {
    const Mat eta = Mat::from_rows({{0.5, 0}, {0, 0}});
    const Vec a{0, 1}, b{1, 0};
    const EikonalEndpoints e = eikonal_endpoints(eta, a, b);
    const double s = -e.s_minus / (e.s_plus - e.s_minus);
    const Laminate lam = dirac(eta).split(0, e.eta_plus, e.eta_minus, s);
    CHECK(max_abs(lam.barycenter() - eta) < 1e-12);
    CHECK(max_abs(weighted_sum(lam) - eta) < 1e-12);
  }

  CHECK(kind_of([&] { dirac(Mat(2, 2)).split(0, Mat::diag2(1, 1), Mat::diag2(-1, -1), 0.5); }) == ErrorKind::NotRankOne);
  CHECK(kind_of([&] { dirac(Mat(2, 2)).split(0, Mat::diag2(1, 0), Mat::diag2(-1, 0), 0.3); }) == ErrorKind::NotOnSegment);
  CHECK(kind_of([&] { dirac(Mat(2, 2)).split(0, Mat::diag2(1, 0), Mat::diag2(-1, 0), 1.0); }) == ErrorKind::BadWeight);
  CHECK(kind_of([&] { nu.split(static_cast<std::size_t>(nu.find_atom(J1)), A1, Mat::diag2(-5, -1), 0.5); }) == ErrorKind::DuplicateAtom);
}

TEST_CASE("barycenter and replay on random laminates") {
  Rng rng(31);
  for (int it = 0; it < 50; ++it) {
    const std::size_t m = 1 + rng() % 3, n = 1 + rng() % 3;
    const Laminate nu = testing::random_laminate(rng, m, n, 50);
    CHECK(nu.order() == 50);
    CHECK(max_abs(nu.barycenter() - nu.root()) < 1e-12 * std::max(1.0, hs_norm(nu.root())));
    CHECK(std::abs(nu.weight_sum() - 1.0) < 1e-12);
    CHECK(nu.replay_matches());
    for (const Atom& a : nu.atoms()) CHECK(a.weight > 0.0);
    for (const SplitRecord& s : nu.splits()) CHECK(rank(s.eta1 - s.eta2) == 1);
  }
}

TEST_CASE("split tree view") {
  Rng rng(32);
  const Laminate nu = testing::random_laminate(rng, 2, 2, 6);
  const SplitTree t = nu.tree();
  std::size_t leaves = 0;
  double leaf_weight = 0.0;
  for (const auto& node : t.nodes)
    if (node.is_leaf()) {
      ++leaves;
      leaf_weight += node.weight;
    }
  CHECK(leaves == nu.atoms().size());
  CHECK(leaf_weight == doctest::Approx(1.0));
  CHECK(t.depth() >= 1);
  CHECK(t.depth() <= 6);
}

TEST_CASE("JSON round trip") {
  Rng rng(33);
  const Laminate nu = testing::random_laminate(rng, 2, 3, 8);
  const Laminate back = Laminate::from_json(nu.to_json());
  REQUIRE(back.atoms().size() == nu.atoms().size());
  for (std::size_t k = 0; k < nu.atoms().size(); ++k) {
    CHECK(back.atoms()[k].weight == nu.atoms()[k].weight);
    CHECK(max_abs(back.atoms()[k].matrix - nu.atoms()[k].matrix) == 0.0);
  }
}

TEST_CASE("jensen_check") {
  Rng rng(34);
  for (int it = 0; it < 200; ++it) {
    const Laminate nu = testing::random_laminate(rng, 2, 2, 1 + rng() % 12);
    CHECK(jensen_check(nu, TestFunction::norm()).pass);
    const JensenResult p = jensen_check(nu, TestFunction::plus_det());
    const JensenResult q = jensen_check(nu, TestFunction::minus_det());
    CHECK(std::abs(p.lhs - p.rhs) < 1e-10);
    CHECK(std::abs(q.lhs - q.rhs) < 1e-10);
    CHECK(p.pass);
    CHECK(q.pass);
    // Independent oracle for the determinant values.
    double lhs = 0.0;
    for (const Atom& a : nu.atoms()) lhs += a.weight * det2(a.matrix);
    CHECK(std::abs(p.lhs - lhs) < 1e-10);
  }
  const Mat xi = Mat::diag2(2, 0);
  const JensenResult d = jensen_check(dirac(xi), TestFunction::dist_to_ball(Mat(2, 2), 1.0));
  CHECK(d.lhs == d.rhs);
  CHECK(d.rhs == doctest::Approx(1.0));
}

TEST_CASE("determinant is affine along rank-one lines") {
  Rng rng(35);
  for (int it = 0; it < 100; ++it) {
    const Mat xi = testing::random_mat(rng, 2, 2);
    const Mat w = outer(testing::random_vec(rng, 2), testing::random_vec(rng, 2));
    const double f0 = det2(xi - w), f1 = det2(xi), f2 = det2(xi + w);
    CHECK(std::abs(f0 + f2 - 2 * f1) < 1e-10);
  }
}

TEST_CASE("t4_staircase") {
  const T4Config t4 = T4Config::standard();
  SUBCASE("J2 at depth 1") {
    const Laminate nu = t4_staircase(t4.J[1], 1);
    REQUIRE(nu.atoms().size() == 2);
    const int a = nu.find_atom(t4.A[0]);
    const int j = nu.find_atom(t4.J[0]);
    REQUIRE(a >= 0);
    REQUIRE(j >= 0);
    CHECK(nu.atoms()[a].weight == doctest::Approx(0.5));
    CHECK(nu.atoms()[j].weight == doctest::Approx(0.5));
  }
  SUBCASE("corner input is a Dirac") {
    const Laminate nu = t4_staircase(t4.A[2], 5);
    CHECK(nu.order() == 0);
    CHECK(max_abs(nu.root() - t4.A[2]) == 0.0);
  }
  SUBCASE("remainder weight shrinks with depth") {
    for (int d = 1; d <= 12; ++d) {
      const Laminate nu = t4_staircase(Mat::diag2(0, 0), d);
      CHECK(t4_corner_weight(nu) >= 1.0 - std::ldexp(1.0, -d) - 1e-12);
      CHECK(max_abs(nu.barycenter()) < 1e-12);
      for (double k : {1.0, -1.0, 3.0}) {
        const LinearConstraint c = t4_constraint(k);
        for (const Atom& at : nu.atoms()) CHECK(apply_constraint(c, at.matrix) == 0.0);
      }
      for (const SplitRecord& s : nu.splits()) {
        const Mat diff = s.eta1 - s.eta2;
        CHECK(diff(0, 1) == 0.0);
        CHECK(diff(1, 0) == 0.0);
        CHECK((diff(0, 0) == 0.0 || diff(1, 1) == 0.0));
      }
    }
  }
  SUBCASE("random hull points") {
    Rng rng(36);
    for (int it = 0; it < 200; ++it) {
      Mat eta;
      if (rng() % 2) {
        eta = Mat::diag2(testing::uniform(rng, -1, 1), testing::uniform(rng, -1, 1));
      } else {
        const int i = static_cast<int>(rng() % 4);
        const double s = testing::uniform(rng, 0, 1);
        eta = s * t4.A[i] + (1 - s) * t4.J[(i + 1) % 4];
      }
      const Laminate nu = t4_staircase(eta, 6);
      CHECK(max_abs(nu.barycenter() - eta) < 1e-12);
      CHECK(t4_corner_weight(nu) >= 1.0 - std::ldexp(1.0, -6) - 1e-12);
    }
  }
  CHECK(kind_of([] { t4_staircase(Mat::diag2(2, 2), 3); }) == ErrorKind::NotInHull);
}
