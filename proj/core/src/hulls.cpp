#include "cvxint/hulls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "cvxint/error.hpp"
#include "cvxint/io.hpp"

namespace cvxint {

PointCloud::PointCloud(std::size_t m, std::size_t n, double resolution)
    : m_(m), n_(n), resolution_(resolution) {
  if (m == 0 || n == 0) fail(ErrorKind::InvalidArgument, "point cloud dimensions must be positive");
  if (!(resolution > 0.0)) fail(ErrorKind::InvalidArgument, "resolution must be positive");
}

double PointCloud::nearest_distance(const Mat& p) const {
  double best = std::numeric_limits<double>::infinity();
  for (const Mat& q : points_) {
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double d = p.data()[k] - q.data()[k];
      s += d * d;
    }
    best = std::min(best, s);
  }
  return std::sqrt(best);
}

bool PointCloud::insert(const Mat& p) {
  if (p.rows() != m_ || p.cols() != n_) fail(ErrorKind::ShapeMismatch, "point shape differs from cloud");
  if (!p.all_finite()) fail(ErrorKind::InvalidArgument, "non-finite point");
  if (nearest_distance(p) < 0.5 * resolution_) return false;
  points_.push_back(p);
  return true;
}

HullResult lamination_hull_discrete(const PointCloud& cloud, int samples_per_segment,
                                    int max_rounds) {
  if (samples_per_segment < 2) fail(ErrorKind::InvalidArgument, "samples_per_segment must be >= 2");
  if (max_rounds < 1) fail(ErrorKind::InvalidArgument, "max_rounds must be >= 1");
  HullResult result{cloud, false, 0, 0};
  PointCloud& pc = result.cloud;
  std::size_t fresh_begin = 0;  // points with index >= fresh_begin were added last round
  const double denom = static_cast<double>(samples_per_segment - 1);
  while (result.rounds < max_rounds) {
    ++result.rounds;
    const std::size_t count = pc.size();
    std::vector<Mat> candidates;
    for (std::size_t j = fresh_begin; j < count; ++j) {
      for (std::size_t i = 0; i < j; ++i) {
        const Mat& p = pc.points()[i];
        const Mat& q = pc.points()[j];
        const Mat diff = q - p;
        if (max_abs(diff) == 0.0 || rank(diff) != 1) continue;
        for (int k = 1; k + 1 < samples_per_segment; ++k) {
          candidates.push_back(p + (static_cast<double>(k) / denom) * diff);
        }
      }
    }
    std::size_t added = 0;
    for (const Mat& c : candidates) added += pc.insert(c) ? 1 : 0;
    result.added += added;
    fresh_begin = count;
    if (added == 0) {
      result.converged = true;
      break;
    }
  }
  return result;
}

DiagLattice::DiagLattice(double lo, double hi, double h) : lo_(lo), hi_(hi), h_(h) {
  if (!(h > 0.0) || !(hi > lo)) fail(ErrorKind::InvalidArgument, "lattice needs lo < hi and h > 0");
  const double steps = (hi - lo) / h;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, steps)) {
    fail(ErrorKind::InvalidArgument, "lattice step must divide hi - lo");
  }
  count_ = static_cast<std::size_t>(rounded) + 1;
  values_.assign(count_ * count_, 0.0);
}

DiagLattice DiagLattice::from_function(double lo, double hi, double h,
                                       const std::function<double(double, double)>& f) {
  DiagLattice lat(lo, hi, h);
  for (std::size_t iy = 0; iy < lat.count(); ++iy)
    for (std::size_t ix = 0; ix < lat.count(); ++ix) {
      const double v = f(lat.coord(ix), lat.coord(iy));
      if (!std::isfinite(v)) fail(ErrorKind::InvalidArgument, "lattice values must be finite");
      lat.at(ix, iy) = v;
    }
  return lat;
}

void DiagLattice::write_csv(std::ostream& os) const {
  os << "x,y,value\n";
  for (std::size_t iy = 0; iy < count_; ++iy)
    for (std::size_t ix = 0; ix < count_; ++ix) {
      os << format_double(coord(ix)) << ',' << format_double(coord(iy)) << ','
         << format_double(at(ix, iy)) << '\n';
    }
}

void lower_convex_envelope_1d(std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 3) return;
  // Monotone chain over (index, value); keep the lower hull.
  std::vector<std::size_t> hull;
  hull.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    while (hull.size() >= 2) {
      const std::size_t a = hull[hull.size() - 2];
      const std::size_t b = hull.back();
      const double cross = (static_cast<double>(b) - static_cast<double>(a)) * (values[i] - values[a]) -
                           (values[b] - values[a]) * (static_cast<double>(i) - static_cast<double>(a));
      if (cross <= 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(i);
  }
  std::vector<double> out(n);
  for (std::size_t k = 0; k + 1 < hull.size(); ++k) {
    const std::size_t a = hull[k], b = hull[k + 1];
    const double va = values[a], vb = values[b];
    out[a] = va;
    for (std::size_t i = a + 1; i < b; ++i) {
      const double s = static_cast<double>(i - a) / static_cast<double>(b - a);
      out[i] = std::min(values[i], va + s * (vb - va));
    }
  }
  out[hull.back()] = values[hull.back()];
  values.swap(out);
}

EnvelopeResult separately_convex_envelope(const DiagLattice& lat, double tol, int max_sweeps) {
  if (!(tol > 0.0)) fail(ErrorKind::InvalidArgument, "tolerance must be positive");
  EnvelopeResult result{lat, false, 0, 0.0};
  DiagLattice& L = result.lattice;
  const std::size_t n = L.count();
  std::vector<double> line(n);
  while (result.sweeps < max_sweeps) {
    ++result.sweeps;
    double change = 0.0;
    for (std::size_t iy = 0; iy < n; ++iy) {
      for (std::size_t ix = 0; ix < n; ++ix) line[ix] = L.at(ix, iy);
      lower_convex_envelope_1d(line);
      for (std::size_t ix = 0; ix < n; ++ix) {
        change = std::max(change, L.at(ix, iy) - line[ix]);
        L.at(ix, iy) = line[ix];
      }
    }
    for (std::size_t ix = 0; ix < n; ++ix) {
      for (std::size_t iy = 0; iy < n; ++iy) line[iy] = L.at(ix, iy);
      lower_convex_envelope_1d(line);
      for (std::size_t iy = 0; iy < n; ++iy) {
        change = std::max(change, L.at(ix, iy) - line[iy]);
        L.at(ix, iy) = line[iy];
      }
    }
    result.last_change = change;
    if (change < tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

T4Config T4Config::standard() {
  T4Config c;
  c.A[0] = Mat::diag2(3, -1);
  c.A[1] = Mat::diag2(1, 3);
  c.A[2] = Mat::diag2(-3, 1);
  c.A[3] = Mat::diag2(-1, -3);
  c.J[0] = Mat::diag2(-1, -1);
  c.J[1] = Mat::diag2(1, -1);
  c.J[2] = Mat::diag2(1, 1);
  c.J[3] = Mat::diag2(-1, 1);
  return c;
}

bool t4_hull_membership_xy(double x, double y, double tol) {
  auto within = [tol](double v, double lo, double hi) { return v >= lo - tol && v <= hi + tol; };
  auto near = [tol](double v, double target) { return std::abs(v - target) <= tol; };
  if (within(x, -1, 1) && within(y, -1, 1)) return true;
  if (near(y, -1) && within(x, 1, 3)) return true;   // [A1, J2]
  if (near(x, 1) && within(y, 1, 3)) return true;    // [A2, J3]
  if (near(y, 1) && within(x, -3, -1)) return true;  // [A3, J4]
  if (near(x, -1) && within(y, -3, -1)) return true; // [A4, J1]
  return false;
}

bool t4_hull_membership(const Mat& xi) {
  if (xi.rows() != 2 || xi.cols() != 2) fail(ErrorKind::ShapeMismatch, "T4 membership needs a 2x2 matrix");
  if (std::abs(xi(0, 1)) > 1e-12 || std::abs(xi(1, 0)) > 1e-12) {
    fail(ErrorKind::NonDiagonal, "T4 membership needs a diagonal matrix");
  }
  return t4_hull_membership_xy(xi(0, 0), xi(1, 1));
}

RelativeHullReport relative_hull_agreement_check(const PointCloud& K, const LinearConstraint& c,
                                                 int samples_per_segment, int max_rounds) {
  for (const Mat& p : K.points()) {
    const double r = std::abs(apply_constraint(c, p) - c.t());
    if (r > 1e-10 * std::max(1.0, c.L_norm() * hs_norm(p))) {
      fail(ErrorKind::ConstraintViolated, "input point is not on the constraint level set");
    }
  }
  const HullResult hull = lamination_hull_discrete(K, samples_per_segment, max_rounds);
  RelativeHullReport report;
  report.input_points = K.size();
  report.hull_points = hull.cloud.size();
  report.converged = hull.converged;
  for (const Mat& p : hull.cloud.points()) {
    report.max_residual = std::max(report.max_residual, std::abs(apply_constraint(c, p) - c.t()));
  }
  report.agrees = report.max_residual < 1e-10;
  return report;
}

double hausdorff_distance(const std::vector<std::array<double, 2>>& P,
                          const std::vector<std::array<double, 2>>& Q) {
  if (P.empty() || Q.empty()) return std::numeric_limits<double>::infinity();
  auto directed = [](const auto& X, const auto& Y) {
    double worst = 0.0;
    for (const auto& p : X) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : Y) {
        const double dx = p[0] - q[0], dy = p[1] - q[1];
        best = std::min(best, dx * dx + dy * dy);
      }
      worst = std::max(worst, best);
    }
    return std::sqrt(worst);
  };
  return std::max(directed(P, Q), directed(Q, P));
}

nlohmann::ordered_json to_json(const RelativeHullReport& r) {
  nlohmann::ordered_json j;
  j["input_points"] = r.input_points;
  j["hull_points"] = r.hull_points;
  j["max_residual"] = r.max_residual;
  j["converged"] = r.converged;
  j["agrees"] = r.agrees;
  return j;
}

T4EnvelopeComparison t4_envelope_comparison(double lo, double hi, double h, double tol, int max_sweeps,
                                            double zero_tol) {
  const T4Config t4 = T4Config::standard();
  auto f = [&](double x, double y) {
    double d = std::numeric_limits<double>::infinity();
    for (const Mat& A : t4.A) d = std::min(d, std::hypot(x - A(0, 0), y - A(1, 1)));
    return d;
  };
  const DiagLattice input = DiagLattice::from_function(lo, hi, h, f);
  T4EnvelopeComparison out{separately_convex_envelope(input, tol, max_sweeps)};
  const DiagLattice& L = out.envelope.lattice;
  std::vector<std::array<double, 2>> zero, hull;
  const double snap = 1e-9 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  out.value_at_2_2 = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t iy = 0; iy < L.count(); ++iy) {
    for (std::size_t ix = 0; ix < L.count(); ++ix) {
      const double x = L.coord(ix), y = L.coord(iy);
      if (L.at(ix, iy) <= zero_tol) zero.push_back({x, y});
      if (t4_hull_membership_xy(x, y, snap)) hull.push_back({x, y});
      if (std::abs(x - 2.0) <= snap && std::abs(y - 2.0) <= snap) out.value_at_2_2 = L.at(ix, iy);
      for (std::size_t i = 0; i < 4; ++i) {
        for (const Mat* P : {&t4.A[i], &t4.J[i]}) {
          if (std::abs(x - (*P)(0, 0)) <= snap && std::abs(y - (*P)(1, 1)) <= snap) {
            out.max_at_K = std::max(out.max_at_K, L.at(ix, iy));
          }
        }
      }
    }
  }
  out.zero_points = zero.size();
  out.hull_points = hull.size();
  out.hausdorff = hausdorff_distance(zero, hull);
  return out;
}

nlohmann::ordered_json to_json(const T4EnvelopeComparison& r) {
  nlohmann::ordered_json j;
  j["converged"] = r.envelope.converged;
  j["sweeps"] = r.envelope.sweeps;
  j["last_change"] = r.envelope.last_change;
  j["zero_points"] = r.zero_points;
  j["hull_points"] = r.hull_points;
  j["hausdorff"] = r.hausdorff;
  j["value_at_2_2"] = r.value_at_2_2;
  j["max_at_K"] = r.max_at_K;
  return j;
}

}  // namespace cvxint
