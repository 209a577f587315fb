#pragma once

#include <cstddef>
#include <span>

#include "cvxint/matcore.hpp"

namespace cvxint {

/// Axis-aligned box ∏[lo_j, hi_j].
struct Box {
  Vec lo;
  Vec hi;

  static Box unit(std::size_t n) { return Box{Vec(n, 0.0), Vec(n, 1.0)}; }
  static Box from_extent(const Vec& extent) { return Box{Vec(extent.size(), 0.0), extent}; }

  std::size_t dim() const noexcept { return lo.size(); }
  double extent(std::size_t j) const { return hi[j] - lo[j]; }
  Vec extents() const {
    Vec e(lo.size());
    for (std::size_t j = 0; j < lo.size(); ++j) e[j] = hi[j] - lo[j];
    return e;
  }
  double volume() const {
    double v = 1.0;
    for (std::size_t j = 0; j < lo.size(); ++j) v *= hi[j] - lo[j];
    return v;
  }
  double min_extent() const {
    double m = hi[0] - lo[0];
    for (std::size_t j = 1; j < lo.size(); ++j) m = (hi[j] - lo[j]) < m ? (hi[j] - lo[j]) : m;
    return m;
  }
  bool contains(std::span<const double> x, double tol = 0.0) const {
    for (std::size_t j = 0; j < lo.size(); ++j)
      if (x[j] < lo[j] - tol || x[j] > hi[j] + tol) return false;
    return true;
  }
  bool valid() const {
    if (lo.size() != hi.size() || lo.empty()) return false;
    for (std::size_t j = 0; j < lo.size(); ++j)
      if (!(hi[j] > lo[j])) return false;
    return true;
  }
};

}  // namespace cvxint
