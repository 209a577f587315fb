#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace cvxint {

/// C³ septic smoothstep S(t) = 35t⁴ − 84t⁵ + 70t⁶ − 20t⁷ and its derivatives/antiderivatives.
namespace smoothstep {
double value(double t);
double d1(double t);
double d2(double t);
double integral1(double t);  // ∫₀ᵗ S
double integral2(double t);  // ∫₀ᵗ∫₀ˢ S
inline constexpr double kMaxD1 = 2.1875;             // 140/64 at t = 1/2
inline constexpr double kMaxD2 = 7.513188404399293;  // 420/√3125
}  // namespace smoothstep

enum class ProfilePiece { Margin, RampIn, PlateauB1, RampUp, PlateauA, RampDown, PlateauB2, RampOut };

/// u² on the unit interval: N identical periods of a two-level second derivative
/// (levels 1−λ on I₁ and −λ on I₂) between zero margins of width `margin`.
class Profile {
 public:
  struct Sample {
    double u = 0.0;    // u²
    double du = 0.0;   // (u²)′
    double ddu = 0.0;  // (u²)″
    ProfilePiece piece = ProfilePiece::Margin;
    std::size_t period = 0;
    double piece_lo = 0.0;  // unit-interval extent of the current piece
    double piece_hi = 0.0;
  };

  static Profile with_periods(double lambda, std::size_t periods, double margin, double ramp_cap);

  double lambda() const noexcept { return lambda_; }
  std::size_t periods() const noexcept { return periods_; }
  double margin() const noexcept { return margin_; }
  double ramp() const noexcept { return ramp_; }
  double period_length() const noexcept { return p_; }

  Sample eval(double t) const;

  double sup_u() const noexcept { return p_ * p_ * unit_sup_G_; }
  double sup_du() const noexcept { return p_ * unit_sup_F_; }
  double unit_sup_F() const noexcept { return unit_sup_F_; }
  double unit_sup_G() const noexcept { return unit_sup_G_; }

  double measure_I1() const;
  double measure_I2() const;
  std::vector<std::pair<double, double>> intervals_I1() const;
  std::vector<std::pair<double, double>> intervals_I2() const;

 private:
  struct Piece {
    ProfilePiece kind;
    double start, len;  // in unit-period coordinates
    double level0, level1;
    double F0, G0;
  };
  void build_pieces();
  std::pair<double, double> piece_extent(std::size_t period, std::size_t piece) const;

  double lambda_ = 0.5;
  std::size_t periods_ = 1;
  double margin_ = 0.0;
  double ramp_ = 0.0;
  double p_ = 1.0;
  std::array<Piece, 7> pieces_{};
  double unit_sup_F_ = 0.0;
  double unit_sup_G_ = 0.0;
};

/// Largest ramp fraction compatible with both plateaus having positive width.
double max_ramp_fraction(double lambda);

/// Builds u² with margin τ/16, ramps ≤ τ/16 per period and the least N with sup|u²|, sup|(u²)′| < δ.
Profile build_profile(double lambda, double tau, double delta);

/// Tensor-product bump on the transverse box ∏[0, ℓ_j]: zero within `gap` of each face,
/// septic ramp of width `ramp` (both as fractions of ℓ_j), one in between.
class Cutoff {
 public:
  Cutoff() = default;
  Cutoff(double gap, double ramp);

  double gap() const noexcept { return gap_; }
  double ramp() const noexcept { return ramp_; }
  double plateau_fraction_1d() const noexcept { return 1.0 - 2.0 * (gap_ + ramp_); }

  struct Axis {
    double h, dh, ddh;
  };
  Axis axis(double y, double length) const;
  /// Fills grad (k) and hess (k×k row-major) for transverse coordinates y with lengths ℓ.
  double eval(std::span<const double> y, std::span<const double> lengths, std::span<double> grad,
              std::span<double> hess) const;

  /// Bounds on |∇η| and Frobenius |∇²η| for the given transverse lengths.
  double grad_bound(std::span<const double> lengths) const;
  double hess_bound(std::span<const double> lengths) const;
  /// C with sup|∇η| ≤ C/τ and sup|∇²η| ≤ C/τ² on the unit transverse cube.
  double constant(std::size_t dims, double tau) const;

 private:
  double gap_ = 0.0;
  double ramp_ = 0.0;
};

}  // namespace cvxint
