#include <doctest.h>

#include <cmath>

#include "cvxint/error.hpp"
#include "cvxint/oscillation.hpp"
#include "support/fd.hpp"
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

double orthogonality_defect(const Mat& Q) { return max_abs(matmul(Q.transpose(), Q) - Mat::identity(Q.rows())); }

// Independent symbol oracle: max over k of |sym(Σ_i L_ij a^i_{kl})|.
double symbol_oracle(const CoefficientTensor& T, const Mat& L) {
  double worst = 0.0;
  for (std::size_t k = 0; k < T.m(); ++k)
    for (std::size_t l = 0; l < T.n(); ++l)
      for (std::size_t j = 0; j < T.n(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < T.m(); ++i) s += L(i, j) * T(i, k, l) + L(i, l) * T(i, k, j);
        worst = std::max(worst, std::abs(s));
      }
  return worst;
}

Mat random_canonical(Rng& rng, std::size_t m, std::size_t n, std::size_t r) {
  Mat L(m, n);
  for (std::size_t j = 0; j < n; ++j) L(0, j) = testing::uniform(rng, -2, 2);
  L(0, 0) = testing::uniform(rng, 0.5, 2.0) * (rng() % 2 ? 1 : -1);
  for (std::size_t j = 1; j < r; ++j) L(j, j) = testing::uniform(rng, 0.5, 2.0) * (rng() % 2 ? 1 : -1);
  return L;
}

}  // namespace

TEST_CASE("canonicalize") {
  SUBCASE("already canonical input gives the identity chain") {
    const LinearConstraint c(Mat::from_rows({{2, 1}, {0, 3}}), 0.0);
    const RankOnePair pair = RankOnePair::from_factors(Mat(2, 2), Vec{0, 5}, Vec{1, 0});
    const Reduction r = canonicalize(c, pair);
    CHECK(r.case_id == 1);
    CHECK(max_abs(r.left - Mat::identity(2)) == 0.0);
    CHECK(max_abs(r.right - Mat::identity(2)) == 0.0);
    CHECK(max_abs(r.L_canonical - c.L()) == 0.0);
    CHECK(r.a_canonical == Vec{0, 5});
    CHECK(r.rank == 2);
  }
  SUBCASE("b = e2 needs a rotation") {
    const LinearConstraint c(Mat::from_rows({{1, 2}, {3, 0}}), 0.0);
    // a ⟂ Lb = (2, 0).
    const RankOnePair pair = RankOnePair::from_factors(Mat(2, 2), Vec{0, 1}, Vec{0, 1});
    const Reduction r = canonicalize(c, pair);
    CHECK(r.case_id == 3);
    const Vec Re1 = matvec(r.R, Vec{1, 0});
    CHECK(std::abs(Re1[0]) < 1e-15);
    CHECK(std::abs(std::abs(Re1[1]) - 1.0) < 1e-15);
    const Vec PLb = matvec(r.P, matvec(c.L(), pair.b));
    CHECK(std::abs(PLb[0] - r.L_canonical(0, 0)) < 1e-12);
    CHECK(std::abs(PLb[1]) < 1e-12);
    CHECK(std::abs(r.L_canonical(0, 0)) > 0.0);
  }
  SUBCASE("random instances over the three cases") {
    Rng rng(41);
    for (int it = 0; it < 150; ++it) {
      const std::size_t m = 2 + rng() % 3, n = 2 + rng() % 3;
      const std::size_t r = 1 + rng() % std::min(m, n);
      const int requested = 1 + static_cast<int>(rng() % 3);
      const testing::PatchInstance inst = testing::random_patch_instance(rng, m, n, r, requested);
      const Reduction red = canonicalize(inst.c, inst.pair);
      if (requested == 1) CHECK(red.case_id == 1);
      if (requested == 2) CHECK(red.case_id >= 1);
      if (requested == 2) CHECK(red.case_id <= 2);
      if (requested == 3) CHECK(red.case_id == 3);
      CHECK(orthogonality_defect(red.left) < 1e-12);
      CHECK(orthogonality_defect(red.right) < 1e-12);
      // Replay the chain and compare with the stored canonical pair.
      const Mat Lc = matmul(matmul(red.left, inst.c.L()), red.right);
      CHECK(max_abs(Lc - red.L_canonical) < 1e-12 * std::max(1.0, hs_norm(inst.c.L())));
      const Vec ac = matvec(red.left, inst.pair.a);
      for (std::size_t i = 1; i < m; ++i) CHECK(std::abs(ac[i] - red.a_canonical[i]) < 1e-12 * std::max(1.0, norm(ac)));
      CHECK(std::abs(ac[0]) < 1e-10 * std::max(1.0, norm(ac)));
      const Vec be = matvec(red.right.transpose(), inst.pair.b);
      CHECK(std::abs(be[0] - 1.0) < 1e-12);
      CHECK(red.rank == rank(inst.c.L()));
    }
  }
  SUBCASE("errors") {
    const LinearConstraint c(Mat::identity(2), 0.0);
    CHECK(kind_of([&] { canonicalize(c, RankOnePair::from_factors(Mat(2, 2), Vec{1, 0}, Vec{1, 0})); }) ==
          ErrorKind::ConstraintViolated);
    const LinearConstraint d(Mat::from_rows({{0, 1}, {0, 0}}), 0.0);
    CHECK(kind_of([&] { canonicalize(d, RankOnePair::from_factors(Mat(2, 2), Vec{1, 0}, Vec{1, 0})); }) ==
          ErrorKind::DegenerateDirection);
  }
}

TEST_CASE("solve_coefficients") {
  SUBCASE("closed forms on a 2x2 example") {
    const Mat Lc = Mat::from_rows({{2, 1}, {0, 3}});
    const Vec ac{0, 5};
    const CoefficientTensor T = solve_coefficients(Lc, ac);
    // Storage is 0-based: a^i_{kl} ↦ T(i−1, k−1, l−1).
    CHECK(T(0, 1, 1) == -7.5);
    CHECK(T(1, 1, 0) == 5.0);
    CHECK(T(1, 1, 1) == 2.5);
    CHECK(T(0, 1, 0) == 0.0);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t l = 0; l < 2; ++l) CHECK(T(i, 0, l) == 0.0);
    CHECK(listed_equation_residual(T, Lc) == 0.0);
    CHECK(symbol_oracle(T, Lc) == 0.0);
    CHECK(normalization_holds(T, ac));
  }
  SUBCASE("zero a gives the zero tensor") {
    const CoefficientTensor T = solve_coefficients(Mat::from_rows({{1, 4, 2}, {0, 2, 0}, {0, 0, 0}}), Vec{0, 0, 0});
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t l = 0; l < 3; ++l) CHECK(T(i, k, l) == 0.0);
  }
  SUBCASE("random canonical inputs") {
    Rng rng(42);
    for (int it = 0; it < 300; ++it) {
      const std::size_t m = 1 + rng() % 4, n = 1 + rng() % 4;
      const std::size_t r = 1 + rng() % std::min(m, n);
      const Mat Lc = random_canonical(rng, m, n, r);
      Vec ac = testing::random_vec(rng, m);
      ac[0] = 0.0;
      const CoefficientTensor T = solve_coefficients(Lc, ac);
      CHECK(T.rank() == static_cast<int>(r));
      CHECK(listed_equation_residual(T, Lc) < 1e-12);
      CHECK(symbol_oracle(T, Lc) < 1e-12);
      CHECK(normalization_holds(T, ac));
      for (std::size_t k = 0; k < m; ++k) CHECK(T(0, k, 0) == 0.0);
    }
  }
  SUBCASE("non-canonical input") {
    CHECK(kind_of([] { solve_coefficients(Mat::from_rows({{1, 0}, {1, 1}}), Vec{0, 1}); }) == ErrorKind::NonCanonical);
    CHECK(kind_of([] { solve_coefficients(Mat::from_rows({{1, 0}, {0, 1}}), Vec{1, 1}); }) == ErrorKind::NonCanonical);
    CHECK(kind_of([] { solve_coefficients(Mat::from_rows({{0, 1}, {0, 1}}), Vec{0, 1}); }) == ErrorKind::NonCanonical);
  }
}

TEST_CASE("make_patch on the 2x2 trace constraint") {
  const LinearConstraint c(Mat::identity(2), 0.0);
  const RankOnePair pair = RankOnePair::from_factors(Mat(2, 2), Vec{0, 1}, Vec{1, 0});
  const double lam = 0.4, tau = 0.1;
  const OscillationPatch p = make_patch(c, pair, lam, Box::unit(2), tau);
  CHECK(p.axis_aligned());
  CHECK(p.sup_bound() < tau);
  CHECK(p.segment_bound() < tau);
  CHECK(p.symbol_defect() < 1e-15);

  const PatchPropertyReport rep = check_patch_properties(p, tau, 256 * 256);
  CHECK(rep.support);
  CHECK(rep.segment);
  CHECK(rep.plateaus);
  CHECK(rep.measures);
  CHECK(rep.sup);
  CHECK(rep.constraint);
  CHECK(std::abs(rep.sampled_A - lam) < tau);
  CHECK(std::abs(rep.sampled_B - (1 - lam)) < tau);

  const Mat D = pair.difference();
  Rng rng(43);
  int hitA = 0, hitB = 0;
  Mat mean(2, 2);
  const int N = 200;
  for (int i = 0; i <= N; ++i)
    for (int j = 0; j <= N; ++j) {
      const Vec x{static_cast<double>(i) / N, static_cast<double>(j) / N};
      const PatchSample s = evaluate_patch(p, x);
      if (s.region == PatchRegion::PlateauA) {
        ++hitA;
        CHECK(max_abs(s.gradient - (1 - lam) * D) <= 1e-12);
      }
      if (s.region == PatchRegion::PlateauB) {
        ++hitB;
        CHECK(max_abs(s.gradient - (-lam) * D) <= 1e-12);
      }
      if (s.region == PatchRegion::Margin || s.region == PatchRegion::CutoffZero) {
        CHECK(norm(s.value) == 0.0);
        CHECK(max_abs(s.gradient) == 0.0);
      }
      if (i == 0 || j == 0 || i == N || j == N) CHECK(norm(s.value) == 0.0);
      mean += s.gradient;
    }
  CHECK(hitA > 0);
  CHECK(hitB > 0);
  mean *= 1.0 / ((N + 1.0) * (N + 1.0));
  CHECK(hs_norm(mean) < 3 * tau);

  CHECK(kind_of([&] { evaluate_patch(p, Vec{1.5, 0.5}); }) == ErrorKind::OutOfDomain);
  CHECK(kind_of([&] { make_patch(c, pair, 1.0, Box::unit(2), tau); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { make_patch(c, RankOnePair::from_factors(Mat(2, 2), Vec{1, 0}, Vec{1, 0}), 0.5, Box::unit(2), tau); }) ==
        ErrorKind::ConstraintViolated);
}

TEST_CASE("first canonical row of the gradient vanishes where the cutoff is flat") {
  Rng rng(44);
  for (int it = 0; it < 6; ++it) {
    const std::size_t m = 2 + rng() % 2, n = 2;
    const testing::PatchInstance inst = testing::random_patch_instance(rng, m, n, 1 + rng() % 2, 1 + it % 3);
    const OscillationPatch p = make_patch(inst.c, inst.pair, 0.5, Box::unit(n), 0.2);
    const Mat& left = p.reduction().left;
    const Mat& right = p.reduction().right;
    for (int s = 0; s < 2000; ++s) {
      const Vec x{testing::uniform(rng, 0, 1), testing::uniform(rng, 0, 1)};
      const PatchSample smp = p.evaluate(x);
      if (smp.region != PatchRegion::PlateauA && smp.region != PatchRegion::PlateauB && smp.region != PatchRegion::Ramp) continue;
      const Mat Gc = matmul(matmul(left, smp.gradient), right);
      for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(Gc(0, j)) < 1e-12 * std::max(1.0, max_abs(smp.gradient)));
    }
  }
}

TEST_CASE("random valid patches satisfy the properties") {
  Rng rng(45);
  for (int it = 0; it < 6; ++it) {
    const std::size_t m = 2 + rng() % 2, n = 2 + rng() % 2;
    const testing::PatchInstance inst = testing::random_patch_instance(rng, m, n, 1 + rng() % 2, 1 + it % 3);
    const double lam = testing::uniform(rng, 0.2, 0.8);
    const double tau = 0.15;
    const OscillationPatch p = make_patch(inst.c, inst.pair, lam, Box::unit(n), tau);
    const PatchPropertyReport rep = check_patch_properties(p, tau, n == 2 ? 200 * 200 : 40 * 40 * 40);
    CHECK(rep.support);
    CHECK(rep.segment);
    CHECK(rep.measures);
    CHECK(rep.sup);
    CHECK(rep.constraint);
    CHECK(rep.plateau_error <= 1e-12);
  }
}

TEST_CASE("patch gradient matches central differences to second order") {
  const LinearConstraint c(Mat::identity(2), 0.0);
  const RankOnePair pair = RankOnePair::from_factors(Mat(2, 2), Vec{0, 1}, Vec{1, 0});
  SUBCASE("explicit geometry") {
    PatchGeometry g;
    g.periods = 2;
    g.margin = 0.05;
    g.ramp = 0.1;
    g.cutoff_gap = 0.05;
    g.cutoff_ramp = 0.2;
    const OscillationPatch p = make_patch_with_geometry(c, pair, 0.5, Box::unit(2), g);
    const auto probes = testing::fd_probes(p, 4);
    REQUIRE(!probes.empty());
    for (double r : testing::fd_ratios(p, probes, 3)) CHECK(std::abs(r - 4.0) < 0.8);
  }
  SUBCASE("tau-built patch") {
    const OscillationPatch p = make_patch(c, pair, 0.3, Box::unit(2), 0.1);
    const auto probes = testing::fd_probes(p, 8);
    REQUIRE(!probes.empty());
    for (double r : testing::fd_ratios(p, probes, 3)) CHECK(std::abs(r - 4.0) < 0.8);
  }
}

TEST_CASE("patch JSON dump") {
  const LinearConstraint c(Mat::identity(2), 0.0);
  const RankOnePair pair = RankOnePair::from_factors(Mat(2, 2), Vec{0, 1}, Vec{1, 0});
  const OscillationPatch p = make_patch(c, pair, 0.5, Box::unit(2), 0.1);
  const Json j = p.to_json();
  CHECK(j.contains("profile"));
  CHECK(j.contains("cutoff"));
  CHECK(j["sup_bound"].get<double>() == p.sup_bound());
  CHECK(p.coefficients().to_json().is_object());
}
