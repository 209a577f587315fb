#pragma once

// Second-order finite-difference oracle for the patch gradient.

#include <algorithm>
#include <cmath>
#include <vector>

#include "cvxint/oscillation.hpp"

namespace cvxint::testing {

/// Max over entries of |central FD of Φg − analytic ∇Φg| at x with step h.
inline double fd_error(const OscillationPatch& p, const Vec& x, double h) {
  const PatchSample s = p.evaluate(x);
  double worst = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const Vec vp = p.evaluate(xp).value, vm = p.evaluate(xm).value;
    for (std::size_t i = 0; i < vp.size(); ++i)
      worst = std::max(worst, std::abs((vp[i] - vm[i]) / (2.0 * h) - s.gradient(i, j)));
  }
  return worst;
}

struct FdProbe {
  Vec x;
  double h0 = 0.0;  // coarsest step; the stencil stays in one smooth piece
};

/// Points of an axis-aligned patch on the unit box that sit in a profile ramp and a cutoff ramp,
/// with a step small enough that every stencil stays inside one polynomial piece.
inline std::vector<FdProbe> fd_probes(const OscillationPatch& p, std::size_t count) {
  std::vector<FdProbe> out;
  const Box& box = p.domain();
  const std::size_t n = box.dim();
  const std::size_t ax = p.axis();
  const double l1 = box.extent(ax);
  const Profile& prof = p.profile();
  const double gap = p.cutoff().gap(), ramp = p.cutoff().ramp();
  std::vector<std::pair<double, double>> ramps;
  for (double t = prof.margin(); t < 1.0 - prof.margin() && ramps.size() < count;) {
    const Profile::Sample s = prof.eval(t);
    if (s.piece == ProfilePiece::RampUp || s.piece == ProfilePiece::RampDown) ramps.emplace_back(s.piece_lo, s.piece_hi);
    t = s.piece_hi + 1e-3 * (s.piece_hi - s.piece_lo) + 1e-15;
  }
  for (std::size_t k = 0; k < ramps.size(); ++k) {
    const auto [lo, hi] = ramps[(k * 7919) % ramps.size()];
    FdProbe pr;
    pr.x.assign(n, 0.0);
    // Off-centre inside the piece so the third derivative is generic.
    pr.x[ax] = box.lo[ax] + l1 * (lo + 0.37 * (hi - lo));
    double width = (hi - lo) * l1;
    std::size_t q = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == ax) continue;
      const double frac = gap + ramp * (0.3 + 0.1 * static_cast<double>(q++));
      pr.x[j] = box.lo[j] + box.extent(j) * frac;
      width = std::min(width, ramp * box.extent(j));
    }
    pr.h0 = 0.02 * width;
    out.push_back(std::move(pr));
  }
  return out;
}

/// e(h)/e(h/2) for `halvings` successive refinements, with e the max error over the probes.
inline std::vector<double> fd_ratios(const OscillationPatch& p, const std::vector<FdProbe>& probes, int halvings) {
  std::vector<double> err(static_cast<std::size_t>(halvings) + 1, 0.0);
  for (const FdProbe& pr : probes) {
    for (int k = 0; k <= halvings; ++k) {
      const double e = fd_error(p, pr.x, std::ldexp(pr.h0, -k));
      err[static_cast<std::size_t>(k)] = std::max(err[static_cast<std::size_t>(k)], e);
    }
  }
  std::vector<double> ratios;
  for (int k = 0; k < halvings; ++k) ratios.push_back(err[k] / err[k + 1]);
  return ratios;
}

}  // namespace cvxint::testing
