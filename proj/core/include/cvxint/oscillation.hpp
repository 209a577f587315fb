#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cvxint/box.hpp"
#include "cvxint/io.hpp"
#include "cvxint/matcore.hpp"
#include "cvxint/profile.hpp"

namespace cvxint {

/// Orthogonal change of frames taking (L, a⊗b) to the canonical (L′, a′⊗e₁).
/// L′ = left·L·right and a′ = left·a, with left = UᵀP and right = R·V.
struct Reduction {
  int case_id = 1;  // 1: already canonical, 2: block SVD only, 3: reflections needed
  Mat P, R, U, V;
  Mat left;
  Mat right;
  Mat L_canonical;
  Vec a_canonical;
  int rank = 0;
};

Reduction canonicalize(const LinearConstraint& c, const RankOnePair& pair);

/// Coefficients a^i_{kl} of Φⁱv = Σ_{k,l} a^i_{kl} ∂_l v^k (0-based storage).
class CoefficientTensor {
 public:
  CoefficientTensor(std::size_t m, std::size_t n, int r);

  std::size_t m() const noexcept { return m_; }
  std::size_t n() const noexcept { return n_; }
  int rank() const noexcept { return r_; }
  double& operator()(std::size_t i, std::size_t k, std::size_t l) { return a_[(i * m_ + k) * n_ + l]; }
  double operator()(std::size_t i, std::size_t k, std::size_t l) const { return a_[(i * m_ + k) * n_ + l]; }
  /// Matrix (i,l) ↦ a^i_{kl} for fixed k.
  Mat slice(std::size_t k) const;
  Json to_json() const;

 private:
  std::size_t m_, n_;
  int r_;
  std::vector<double> a_;
};

/// Validates the canonical shape and returns r; throws NonCanonical otherwise.
int canonical_rank(const Mat& Lc, const Vec& ac);

CoefficientTensor solve_coefficients(const Mat& Lc, const Vec& ac);

/// Largest residual over the enumerated algebraic system for every k.
double listed_equation_residual(const CoefficientTensor& a, const Mat& Lc);
/// Largest entry of sym(Σ_i L_ij a^i_{kl}) over k, valid for any L.
double symbol_residual(const CoefficientTensor& a, const Mat& L);
/// Exact check of the normalization a^j_{21} = a′_j (j ≥ 2), a^j_{k1} = 0 otherwise.
bool normalization_holds(const CoefficientTensor& a, const Vec& ac);

/// Explicit patch geometry (fractions of the patch box) used by nested constructions.
struct PatchGeometry {
  std::size_t periods = 1;
  double margin = 0.002;
  double ramp = 0.002;
  double cutoff_gap = 0.0005;
  double cutoff_ramp = 0.0025;

  /// Widths in the default proportions, scaled so ramps, cutoff bands, margins and cutoff zero zones of
  /// an n-dimensional patch cover at most `mu` of its box.
  static PatchGeometry for_exceptional_fraction(double mu, std::size_t n);
  /// Upper bound on that covered fraction for the current widths.
  double exceptional_fraction(std::size_t n) const;
};

enum class PatchRegion { Outside, Margin, CutoffZero, CutoffBand, Ramp, PlateauA, PlateauB };

std::string_view to_string(PatchRegion r);

/// Where a point sits inside an axis-aligned patch; `box` is the constant region it lies in
/// for PlateauA/PlateauB/Margin/CutoffZero. Slots: 0 = A, 1 = B, 2 = margin, 3 + j = cutoff zero
/// zone whose first violated transverse axis is j.
struct PatchLocation {
  PatchRegion region = PatchRegion::Outside;
  std::size_t slot = 0;
  Box box;
};

struct PatchSample {
  Vec value;
  Mat gradient;
  PatchRegion region = PatchRegion::Outside;
};

class OscillationPatch {
 public:
  const LinearConstraint& constraint() const noexcept { return constraint_; }
  const RankOnePair& pair() const noexcept { return pair_; }
  double lambda() const noexcept { return lambda_; }
  /// τ the patch was built for; 0 for explicit-geometry patches.
  double tau() const noexcept { return tau_; }
  const Box& domain() const noexcept { return domain_; }
  const Reduction& reduction() const noexcept { return reduction_; }
  const CoefficientTensor& coefficients() const noexcept { return coeffs_; }
  const Profile& profile() const noexcept { return profile_; }
  const Cutoff& cutoff() const noexcept { return cutoff_; }
  bool axis_aligned() const noexcept { return axis_; }
  std::size_t axis() const noexcept { return axis_index_; }
  double tile_side() const noexcept { return tile_side_; }
  std::size_t tile_count() const noexcept { return tile_count_; }
  const Mat& operator_matrix() const noexcept { return Bx_; }

  double measure_A() const noexcept { return measure_A_; }
  double measure_B() const noexcept { return measure_B_; }
  /// Rigorous bound on sup|Φg|.
  double sup_bound() const noexcept { return sup_bound_; }
  /// Rigorous bound on dist(∇Φg, [−λ(A−B), (1−λ)(A−B)]).
  double segment_bound() const noexcept { return segment_bound_; }
  /// max(sup|u²|, sup|(u²)′|) of the normalized profile.
  double delta() const noexcept { return std::max(profile_.sup_u(), profile_.sup_du()); }
  /// Largest entry of sym(Bᵀ L) in the x frame: the analytic constraint defect per unit Hessian.
  double symbol_defect() const noexcept { return symbol_defect_; }

  PatchSample evaluate(std::span<const double> x) const;
  /// Adds Φg(x) and ∇Φg(x) into value/grad; returns the region. `loc` is filled for axis patches.
  PatchRegion accumulate(std::span<const double> x, std::span<double> value, Mat& grad,
                         PatchLocation* loc) const;
  /// Extents of the child box for a slot (axis patches only).
  Vec slot_extent(std::size_t slot) const;
  std::size_t slot_count() const noexcept { return 3 + (domain_.dim() - 1); }

  Json to_json() const;

  friend OscillationPatch make_patch(const LinearConstraint&, const RankOnePair&, double, const Box&, double);
  friend OscillationPatch make_patch_with_geometry(const LinearConstraint&, const RankOnePair&, double,
                                                   const Box&, const PatchGeometry&);

 private:
  OscillationPatch(const LinearConstraint& c, const RankOnePair& pair, double lambda, const Box& omega,
                   Reduction red, CoefficientTensor coeffs);
  void setup_frame();
  void finalize();
  bool tile_inside(std::span<const long> k) const;
  PatchRegion eval_tile(std::span<const double> yl, std::span<double> value, Mat& grad,
                        PatchLocation* loc) const;
  void count_tiles();

  LinearConstraint constraint_;
  RankOnePair pair_;
  double lambda_;
  double tau_ = 0.0;
  Box domain_;
  Reduction reduction_;
  CoefficientTensor coeffs_;
  Profile profile_;
  Cutoff cutoff_;
  Mat Bx_;  // Φ = Bx ∇ₓg
  Mat By_;  // Bx·R, acting on tile-frame derivatives
  Mat Rt_;  // tile frame rotation: y = Rᵀ(x − origin)
  bool axis_ = true;
  std::size_t axis_index_ = 0;
  std::vector<std::size_t> perm_;  // axis mode: tile axis j ↔ x axis perm_[j]
  std::vector<int> sign_;          // axis mode: orientation of tile axis j
  Vec tile_len_;                   // tile extents in tile frame (ℓ₁ first)
  Vec center_;                     // rotated mode lattice anchor
  double tile_side_ = 0.0;
  std::size_t tile_count_ = 1;
  double measure_A_ = 0.0;
  double measure_B_ = 0.0;
  double sup_bound_ = 0.0;
  double segment_bound_ = 0.0;
  double symbol_defect_ = 0.0;
};

OscillationPatch make_patch(const LinearConstraint& c, const RankOnePair& pair, double lambda,
                            const Box& omega, double tau);
/// Axis-aligned patch with caller-chosen geometry; property (b) is not enforced inside cutoff bands.
OscillationPatch make_patch_with_geometry(const LinearConstraint& c, const RankOnePair& pair,
                                          double lambda, const Box& omega, const PatchGeometry& geom);
PatchSample evaluate_patch(const OscillationPatch& p, std::span<const double> x);

/// Distance from ξ to the segment [−λ·D, (1−λ)·D].
double distance_to_segment(const Mat& xi, const Mat& D, double lambda);

/// Sampled check of the patch properties on a uniform node grid of the patch box.
struct PatchPropertyReport {
  std::size_t samples_per_axis = 0;
  double tau = 0.0;
  double boundary_max = 0.0;        // max |Φg| on the box boundary
  double max_residual = 0.0;        // max |𝓛(∇Φg)|
  double max_segment_distance = 0.0;
  double plateau_error = 0.0;       // max deviation from the exact plateau gradients
  double measure_A = 0.0;           // exact, relative to |Ω|
  double measure_B = 0.0;
  double sampled_A = 0.0;           // node fraction
  double sampled_B = 0.0;
  double sup_value = 0.0;
  bool support = false;       // (a)
  bool segment = false;       // (b)
  bool plateaus = false;      // (c)
  bool measures = false;      // (d)
  bool sup = false;           // (e)
  bool constraint = false;

  bool all() const { return support && segment && plateaus && measures && sup && constraint; }
  Json to_json() const;
};

/// Samples about `total_samples` nodes (per axis: ⌊total^{1/n}⌋ + 1) and checks (a)–(e) against τ.
PatchPropertyReport check_patch_properties(const OscillationPatch& p, double tau,
                                           std::size_t total_samples = 512 * 512);

}  // namespace cvxint
