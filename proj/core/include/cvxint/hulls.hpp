#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <vector>

#include <nlohmann/json.hpp>

#include "cvxint/matcore.hpp"

namespace cvxint {

/// Finite set of same-shape matrices with a minimum spacing enforced on insertion.
class PointCloud {
 public:
  PointCloud(std::size_t m, std::size_t n, double resolution);

  std::size_t rows() const noexcept { return m_; }
  std::size_t cols() const noexcept { return n_; }
  double resolution() const noexcept { return resolution_; }
  const std::vector<Mat>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }

  /// Inserts p unless an existing point lies closer than resolution/2. Returns true if added.
  bool insert(const Mat& p);
  /// Distance from p to the nearest stored point (infinity when empty).
  double nearest_distance(const Mat& p) const;

 private:
  std::size_t m_;
  std::size_t n_;
  double resolution_;
  std::vector<Mat> points_;
};

struct HullResult {
  PointCloud cloud;
  bool converged = false;
  int rounds = 0;
  std::size_t added = 0;
};

HullResult lamination_hull_discrete(const PointCloud& cloud, int samples_per_segment,
                                    int max_rounds);

/// Function on diagonal matrices diag(x, y), sampled on a square lattice.
class DiagLattice {
 public:
  DiagLattice(double lo, double hi, double h);

  static DiagLattice from_function(double lo, double hi, double h,
                                   const std::function<double(double, double)>& f);

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double step() const noexcept { return h_; }
  std::size_t count() const noexcept { return count_; }
  double coord(std::size_t i) const noexcept { return lo_ + h_ * static_cast<double>(i); }
  double& at(std::size_t ix, std::size_t iy) { return values_[iy * count_ + ix]; }
  double at(std::size_t ix, std::size_t iy) const { return values_[iy * count_ + ix]; }
  const std::vector<double>& values() const noexcept { return values_; }

  void write_csv(std::ostream& os) const;

 private:
  double lo_;
  double hi_;
  double h_;
  std::size_t count_;
  std::vector<double> values_;
};

struct EnvelopeResult {
  DiagLattice lattice;
  bool converged = false;
  int sweeps = 0;
  double last_change = 0.0;
};

/// Lower convex envelope of samples (equally spaced) along one line, in place.
void lower_convex_envelope_1d(std::vector<double>& values);

EnvelopeResult separately_convex_envelope(const DiagLattice& lat, double tol, int max_sweeps);

struct T4Config {
  std::array<Mat, 4> A;
  std::array<Mat, 4> J;

  static T4Config standard();
  std::vector<Mat> corners() const { return {A.begin(), A.end()}; }
};

bool t4_hull_membership(const Mat& xi);
/// Same test in diagonal coordinates.
bool t4_hull_membership_xy(double x, double y, double tol = 1e-12);

struct RelativeHullReport {
  std::size_t input_points = 0;
  std::size_t hull_points = 0;
  double max_residual = 0.0;
  bool converged = false;
  bool agrees = false;
};

RelativeHullReport relative_hull_agreement_check(const PointCloud& K, const LinearConstraint& c,
                                                 int samples_per_segment = 5,
                                                 int max_rounds = 50);

/// Symmetric Hausdorff distance between two finite planar point sets.
double hausdorff_distance(const std::vector<std::array<double, 2>>& P,
                          const std::vector<std::array<double, 2>>& Q);

nlohmann::ordered_json to_json(const RelativeHullReport& r);

/// Envelope of dist(·, {A₁..A₄}) on [lo,hi]² compared with the explicit T4 hull on the same lattice.
struct T4EnvelopeComparison {
  EnvelopeResult envelope;
  std::size_t zero_points = 0;  // lattice points with envelope ≤ zero_tol
  std::size_t hull_points = 0;  // lattice points in the explicit hull
  double hausdorff = 0.0;
  double value_at_2_2 = 0.0;    // envelope at diag(2,2), NaN if off-lattice
  double max_at_K = 0.0;        // largest envelope value at the A_i and J_i
};

T4EnvelopeComparison t4_envelope_comparison(double lo, double hi, double h, double tol = 1e-12,
                                            int max_sweeps = 2000, double zero_tol = 1e-9);

nlohmann::ordered_json to_json(const T4EnvelopeComparison& r);

}  // namespace cvxint
