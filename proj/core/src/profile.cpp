#include "cvxint/profile.hpp"

#include <algorithm>
#include <cmath>

#include "cvxint/error.hpp"

namespace cvxint {

namespace smoothstep {

double value(double t) {
  const double t2 = t * t, t4 = t2 * t2;
  return t4 * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)));
}

double d1(double t) {
  const double u = t * (1.0 - t);
  return 140.0 * u * u * u;
}

double d2(double t) {
  const double u = t * (1.0 - t);
  return 420.0 * u * u * (1.0 - 2.0 * t);
}

double integral1(double t) {
  const double t5 = t * t * t * t * t;
  return t5 * (7.0 + t * (-14.0 + t * (10.0 - 2.5 * t)));
}

double integral2(double t) {
  const double t3 = t * t * t, t6 = t3 * t3;
  return t6 * (7.0 / 6.0 + t * (-2.0 + t * (1.25 - (5.0 / 18.0) * t)));
}

}  // namespace smoothstep

double max_ramp_fraction(double lambda) {
  return std::min(lambda / (1.0 + lambda), (1.0 - lambda) / (3.0 - lambda));
}

Profile Profile::with_periods(double lambda, std::size_t periods, double margin, double ramp_cap) {
  if (!(lambda > 0.0 && lambda < 1.0)) fail(ErrorKind::InvalidArgument, "lambda must lie in (0,1)");
  if (periods == 0) fail(ErrorKind::InvalidArgument, "profile needs at least one period");
  if (!(margin > 0.0 && margin < 0.5)) fail(ErrorKind::InvalidArgument, "margin must lie in (0,1/2)");
  if (!(ramp_cap > 0.0)) fail(ErrorKind::InvalidArgument, "ramp fraction must be positive");
  Profile pr;
  pr.lambda_ = lambda;
  pr.periods_ = periods;
  pr.margin_ = margin;
  pr.ramp_ = std::min(ramp_cap, 0.5 * max_ramp_fraction(lambda));
  pr.p_ = (1.0 - 2.0 * margin) / static_cast<double>(periods);
  pr.build_pieces();
  return pr;
}

void Profile::build_pieces() {
  const double lam = lambda_;
  const double w = ramp_;
  const double b = lam - w * (1.0 + lam);
  const double a = 0.5 * (1.0 - lam - w * (3.0 - lam));
  if (!(a > 0.0 && b > 0.0)) fail(ErrorKind::InfeasibleTau, "ramp width leaves no plateau");
  const double hi = 1.0 - lam;
  const double lo = -lam;
  const ProfilePiece kinds[7] = {ProfilePiece::RampIn,   ProfilePiece::PlateauB1, ProfilePiece::RampUp,
                                 ProfilePiece::PlateauA, ProfilePiece::RampDown,  ProfilePiece::PlateauB2,
                                 ProfilePiece::RampOut};
  const double lens[7] = {w, a, w, b, w, a, w};
  const double l0[7] = {0.0, lo, lo, hi, hi, lo, lo};
  const double l1[7] = {lo, lo, hi, hi, lo, lo, 0.0};
  double start = 0.0, F = 0.0, G = 0.0;
  for (std::size_t k = 0; k < 7; ++k) {
    pieces_[k] = Piece{kinds[k], start, lens[k], l0[k], l1[k], F, G};
    const double len = lens[k];
    const bool ramp = l0[k] != l1[k];
    const double d = l1[k] - l0[k];
    const double dF = ramp ? l0[k] * len + d * len * smoothstep::integral1(1.0) : l0[k] * len;
    const double dG = ramp ? F * len + 0.5 * l0[k] * len * len + d * len * len * smoothstep::integral2(1.0)
                           : F * len + 0.5 * l0[k] * len * len;
    G += dG;
    F += dF;
    start += len;
  }
  // Suprema of |F| and |G| over one unit period; the extremes sit in the interior of ramps
  // or at the period centre, so dense per-piece sampling is accurate to far below the margin.
  double supF = 0.0, supG = 0.0;
  constexpr int kSamples = 4096;
  for (const Piece& pc : pieces_) {
    for (int i = 0; i <= kSamples; ++i) {
      const double s = pc.start + pc.len * static_cast<double>(i) / kSamples;
      const Sample smp = eval(margin_ + p_ * std::min(s, 1.0 - 1e-15));
      supF = std::max(supF, std::abs(smp.du) / p_);
      supG = std::max(supG, std::abs(smp.u) / (p_ * p_));
    }
  }
  unit_sup_F_ = supF * (1.0 + 1e-6);
  unit_sup_G_ = supG * (1.0 + 1e-6);
}

Profile::Sample Profile::eval(double t) const {
  Sample out;
  if (!(t >= margin_ && t <= 1.0 - margin_)) {
    out.piece = ProfilePiece::Margin;
    if (t < margin_) {
      out.piece_lo = 0.0;
      out.piece_hi = margin_;
    } else {
      out.piece_lo = 1.0 - margin_;
      out.piece_hi = 1.0;
    }
    return out;
  }
  const double tau = (t - margin_) / p_;
  std::size_t k = static_cast<std::size_t>(std::floor(tau));
  if (k >= periods_) k = periods_ - 1;
  double s = tau - static_cast<double>(k);
  s = std::clamp(s, 0.0, 1.0);
  std::size_t idx = 6;
  for (std::size_t j = 0; j < 6; ++j) {
    if (s < pieces_[j + 1].start) {
      idx = j;
      break;
    }
  }
  const Piece& pc = pieces_[idx];
  const double sigma = s - pc.start;
  double f, F, G;
  if (pc.level0 == pc.level1) {
    f = pc.level0;
    F = pc.F0 + pc.level0 * sigma;
    G = pc.G0 + pc.F0 * sigma + 0.5 * pc.level0 * sigma * sigma;
  } else {
    const double d = pc.level1 - pc.level0;
    const double r = std::clamp(sigma / pc.len, 0.0, 1.0);
    f = pc.level0 + d * smoothstep::value(r);
    F = pc.F0 + pc.level0 * sigma + d * pc.len * smoothstep::integral1(r);
    G = pc.G0 + pc.F0 * sigma + 0.5 * pc.level0 * sigma * sigma +
        d * pc.len * pc.len * smoothstep::integral2(r);
  }
  out.ddu = f;
  out.du = p_ * F;
  out.u = p_ * p_ * G;
  out.piece = pc.kind;
  out.period = k;
  const auto ext = piece_extent(k, idx);
  out.piece_lo = ext.first;
  out.piece_hi = ext.second;
  return out;
}

std::pair<double, double> Profile::piece_extent(std::size_t period, std::size_t piece) const {
  const double base = margin_ + p_ * static_cast<double>(period);
  const Piece& pc = pieces_[piece];
  return {base + p_ * pc.start, base + p_ * (pc.start + pc.len)};
}

double Profile::measure_I1() const { return static_cast<double>(periods_) * p_ * pieces_[3].len; }

double Profile::measure_I2() const {
  return static_cast<double>(periods_) * p_ * (pieces_[1].len + pieces_[5].len);
}

std::vector<std::pair<double, double>> Profile::intervals_I1() const {
  std::vector<std::pair<double, double>> out;
  for (std::size_t k = 0; k < periods_; ++k) out.push_back(piece_extent(k, 3));
  return out;
}

std::vector<std::pair<double, double>> Profile::intervals_I2() const {
  std::vector<std::pair<double, double>> out;
  for (std::size_t k = 0; k < periods_; ++k) {
    out.push_back(piece_extent(k, 1));
    out.push_back(piece_extent(k, 5));
  }
  return out;
}

Profile build_profile(double lambda, double tau, double delta) {
  if (!(lambda > 0.0 && lambda < 1.0)) fail(ErrorKind::InvalidArgument, "lambda must lie in (0,1)");
  if (!(tau > 0.0 && tau < 1.0)) fail(ErrorKind::InvalidArgument, "tau must lie in (0,1)");
  if (!(delta > 0.0)) fail(ErrorKind::InvalidArgument, "delta must be positive");
  const double margin = tau / 16.0;
  const double ramp = std::min(tau / 16.0, 0.5 * max_ramp_fraction(lambda));
  const Profile unit = Profile::with_periods(lambda, 1, margin, ramp);
  const double active = 1.0 - 2.0 * margin;
  const double need_F = active * unit.unit_sup_F() / delta;
  const double need_G = active * std::sqrt(unit.unit_sup_G() / delta);
  const double need = std::max(need_F, need_G);
  constexpr double kMaxPeriods = 1e12;
  if (!(need < kMaxPeriods)) {
    fail(ErrorKind::InfeasibleTau,
         "profile needs at least " + std::to_string(need) + " periods to reach delta");
  }
  const auto periods = static_cast<std::size_t>(std::floor(need)) + 1;
  return Profile::with_periods(lambda, periods, margin, ramp);
}

Cutoff::Cutoff(double gap, double ramp) : gap_(gap), ramp_(ramp) {
  if (!(gap > 0.0) || !(ramp > 0.0) || !(gap + ramp < 0.5)) {
    fail(ErrorKind::InvalidArgument, "cutoff needs gap > 0, ramp > 0, gap + ramp < 1/2");
  }
}

Cutoff::Axis Cutoff::axis(double y, double length) const {
  const double z = y / length;
  if (z <= gap_ || z >= 1.0 - gap_) return {0.0, 0.0, 0.0};
  const double wl = ramp_ * length;
  if (z < gap_ + ramp_) {
    const double t = (z - gap_) / ramp_;
    return {smoothstep::value(t), smoothstep::d1(t) / wl, smoothstep::d2(t) / (wl * wl)};
  }
  if (z > 1.0 - gap_ - ramp_) {
    const double t = (1.0 - gap_ - z) / ramp_;
    return {smoothstep::value(t), -smoothstep::d1(t) / wl, smoothstep::d2(t) / (wl * wl)};
  }
  return {1.0, 0.0, 0.0};
}

double Cutoff::eval(std::span<const double> y, std::span<const double> lengths, std::span<double> grad,
                    std::span<double> hess) const {
  const std::size_t k = y.size();
  Axis ax[8];
  if (k > 8) fail(ErrorKind::InvalidArgument, "cutoff supports at most 8 transverse dimensions");
  double prod = 1.0;
  for (std::size_t j = 0; j < k; ++j) {
    ax[j] = axis(y[j], lengths[j]);
    prod *= ax[j].h;
  }
  for (std::size_t a = 0; a < k; ++a) {
    double g = ax[a].dh;
    for (std::size_t j = 0; j < k; ++j)
      if (j != a) g *= ax[j].h;
    grad[a] = g;
    for (std::size_t b = 0; b < k; ++b) {
      double h = 1.0;
      if (a == b) {
        h = ax[a].ddh;
        for (std::size_t j = 0; j < k; ++j)
          if (j != a) h *= ax[j].h;
      } else {
        h = ax[a].dh * ax[b].dh;
        for (std::size_t j = 0; j < k; ++j)
          if (j != a && j != b) h *= ax[j].h;
      }
      hess[a * k + b] = h;
    }
  }
  return prod;
}

double Cutoff::grad_bound(std::span<const double> lengths) const {
  double s = 0.0;
  for (double l : lengths) {
    const double g = smoothstep::kMaxD1 / (ramp_ * l);
    s += g * g;
  }
  return std::sqrt(s);
}

double Cutoff::hess_bound(std::span<const double> lengths) const {
  double s = 0.0;
  for (std::size_t a = 0; a < lengths.size(); ++a)
    for (std::size_t b = 0; b < lengths.size(); ++b) {
      const double wa = ramp_ * lengths[a], wb = ramp_ * lengths[b];
      const double h = a == b ? smoothstep::kMaxD2 / (wa * wa)
                              : smoothstep::kMaxD1 * smoothstep::kMaxD1 / (wa * wb);
      s += h * h;
    }
  return std::sqrt(s);
}

double Cutoff::constant(std::size_t dims, double tau) const {
  const std::vector<double> ones(dims, 1.0);
  return std::max(grad_bound(ones) * tau, hess_bound(ones) * tau * tau);
}

}  // namespace cvxint
