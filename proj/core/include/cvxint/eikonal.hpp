#pragma once

#include <optional>

#include "cvxint/integrator.hpp"
#include "cvxint/laminates.hpp"
#include "cvxint/matcore.hpp"

namespace cvxint {

/// v_{η,γ}(x) = ηx + γ.
struct AffineBoundary {
  Mat eta;
  Vec gamma;

  Vec value(std::span<const double> x) const;
  BoundaryMap map() const { return BoundaryMap::affine(eta, gamma); }
};

/// η± = η + s±·a⊗b with |η±| = 1 and s⁺ > 0 > s⁻.
struct EikonalEndpoints {
  double s_plus = 0.0;
  double s_minus = 0.0;
  Mat eta_plus;
  Mat eta_minus;
};

EikonalEndpoints eikonal_endpoints(const Mat& eta, const Vec& a, const Vec& b);

/// The sets B_t, V_α, U = V_α ∩ B_t and the caps K± of the eikonal problem, inside Σ_t.
class EikonalGeometry {
 public:
  /// Chooses α by bisection so that both caps have sampled diameter below ε/2.
  static EikonalGeometry build(const LinearConstraint& c, const Mat& eta, const Vec& a, const Vec& b, double epsilon);

  const LinearConstraint& constraint() const noexcept { return c_; }
  double t() const noexcept { return c_.t(); }
  const Mat& eta() const noexcept { return eta_; }
  const Mat& direction() const noexcept { return ab_; }  // a⊗b
  const EikonalEndpoints& endpoints() const noexcept { return ends_; }
  double alpha() const noexcept { return alpha_; }
  double epsilon() const noexcept { return epsilon_; }

  double line_distance(const Mat& xi) const;
  bool in_U(const Mat& xi) const;
  /// Lower bound on the distance from ξ to the relative boundary of U (≤ 0 outside U).
  double boundary_margin(const Mat& xi) const;
  /// sign = +1 for K⁺, −1 for K⁻.
  double cap_distance(const Mat& xi, int sign) const;
  double dist_to_K(const Mat& xi) const { return std::min(cap_distance(xi, 1), cap_distance(xi, -1)); }
  double dist_to_endpoints(const Mat& xi) const;
  double cap_diameter(int sign) const { return cap_diameter(sign, alpha_); }

  /// s with ±s > 0, ξ + s·a⊗b ∈ B_t, and dist(ξ + s·a⊗b, set) = d; nullopt if unreachable.
  /// `sign_set` = 0 measures the distance to K, ±1 to K±.
  std::optional<double> shoot(const Mat& xi, int sign, double d, int sign_set) const;

 private:
  EikonalGeometry(const LinearConstraint& c, const Mat& eta, const Vec& a, const Vec& b, double epsilon);
  double cap_diameter(int sign, double alpha) const;
  Vec flat(const Mat& xi) const { return xi.entries(); }
  // Coordinates of ξ: normal offset from Σ_t, σ along the line direction, q orthogonal part.
  void coords(const Mat& xi, double& normal, double& sigma, Vec& q) const;
  double cap_distance_alpha(const Mat& xi, int sign, double alpha) const;

  LinearConstraint c_;
  Mat eta_;
  Mat ab_;
  EikonalEndpoints ends_;
  double alpha_ = 0.0;
  double epsilon_ = 0.0;
  Vec lhat_;   // unit normal of Σ_t
  Vec c0_;     // point of Σ_t nearest the origin
  double rho0_ = 0.0;
  Vec dhat_;   // unit a⊗b
  Vec p_;      // foot of the line, orthogonal to dhat_ within Σ_t − c0
  std::vector<Vec> basis_;  // orthonormal basis of the directions orthogonal to lhat_ and dhat_
};

/// U_1 = {dist(ξ,K) > 1/k₀} and U_k = {1/(k₀+k+1) < dist(ξ,K) < 1/(k₀+k)} inside U.
struct EikonalInApprox {
  InApproximation approx;
  int k0 = 1;
  std::shared_ptr<const EikonalGeometry> geometry;
};

EikonalInApprox eikonal_in_approx(const Mat& eta, const Vec& a, const Vec& b, const LinearConstraint& c,
                                  double epsilon, std::size_t J);
EikonalInApprox eikonal_in_approx(std::shared_ptr<const EikonalGeometry> geom, std::size_t J);

struct BaireStats {
  double delta = 0.0;
  double theta = 0.0;
  double budget = 0.0;
  std::size_t selected = 0;  // grid nodes with dist(∇u,K) > δ/8 before the step
  double mean_distance_before = 0.0;
  double mean_distance_after = 0.0;
  double admissible_fraction = 0.0;  // fraction of nodes with ∇u ∈ U
  RefineStats refine;
  Json to_json() const;
};

struct BaireResult {
  GradientField field;
  BaireStats stats;
};

/// One density step: leaves with dist(ξ,K) > δ/8 are split along a⊗b to points at distance δ/8 from K±,
/// moving the map by less than θ.
BaireResult baire_refine(const GradientField& field, double delta, double theta, const EikonalGeometry& geom,
                         const RefineOptions& opt);

}  // namespace cvxint
