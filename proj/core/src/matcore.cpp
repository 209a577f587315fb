#include "cvxint/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cvxint/error.hpp"

namespace cvxint {

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows * cols) {
    fail(ErrorKind::ShapeMismatch, "entry count does not match " + std::to_string(rows) + "x" +
                                       std::to_string(cols));
  }
}

Mat Mat::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t m = rows.size();
  const std::size_t n = m == 0 ? 0 : rows.begin()->size();
  Mat out(m, n);
  std::size_t i = 0;
  for (const auto& r : rows) {
    if (r.size() != n) fail(ErrorKind::ShapeMismatch, "ragged row list");
    std::size_t j = 0;
    for (double v : r) out(i, j++) = v;
    ++i;
  }
  return out;
}

Mat Mat::identity(std::size_t n) {
  Mat out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

Mat Mat::diag(std::span<const double> d) {
  Mat out(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out(i, i) = d[i];
  return out;
}

Mat Mat::diag2(double x, double y) {
  const double d[2] = {x, y};
  return diag(d);
}

Mat Mat::transpose() const {
  Mat out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
  return out;
}

Vec Mat::row(std::size_t i) const {
  return Vec(data_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
             data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_));
}

Vec Mat::col(std::size_t j) const {
  Vec out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

Mat Mat::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
  if (r0 + nr > rows_ || c0 + nc > cols_) fail(ErrorKind::ShapeMismatch, "block out of range");
  Mat out(nr, nc);
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nc; ++j) out(i, j) = (*this)(r0 + i, c0 + j);
  return out;
}

void Mat::set_block(std::size_t r0, std::size_t c0, const Mat& b) {
  if (r0 + b.rows() > rows_ || c0 + b.cols() > cols_) {
    fail(ErrorKind::ShapeMismatch, "set_block out of range");
  }
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
}

Mat& Mat::operator+=(const Mat& o) {
  if (!same_shape(o)) fail(ErrorKind::ShapeMismatch, "matrix addition");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
  return *this;
}

Mat& Mat::operator-=(const Mat& o) {
  if (!same_shape(o)) fail(ErrorKind::ShapeMismatch, "matrix subtraction");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
  return *this;
}

Mat& Mat::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

bool Mat::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Mat operator+(Mat a, const Mat& b) { return a += b; }
Mat operator-(Mat a, const Mat& b) { return a -= b; }
Mat operator-(Mat a) { return a *= -1.0; }
Mat operator*(double s, Mat a) { return a *= s; }
Mat operator*(Mat a, double s) { return a *= s; }

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) fail(ErrorKind::ShapeMismatch, "matmul inner dimensions");
  Mat out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

Vec matvec(const Mat& a, std::span<const double> x) {
  if (a.cols() != x.size()) fail(ErrorKind::ShapeMismatch, "matvec dimensions");
  Vec out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    out[i] = s;
  }
  return out;
}

double hs_dot(const Mat& a, const Mat& b) {
  if (!a.same_shape(b)) fail(ErrorKind::ShapeMismatch, "inner product of different shapes");
  return dot(a.data(), b.data());
}

double hs_norm(const Mat& a) { return norm(a.data()); }

double max_abs(const Mat& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

double op_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  return svd_small(a).sigma.front();
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorKind::ShapeMismatch, "dot of different lengths");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) {
  // Scaled accumulation keeps tiny and huge entries from under/overflowing.
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (double v : a) {
    const double r = v / scale;
    s += r * r;
  }
  return scale * std::sqrt(s);
}

Vec scaled(std::span<const double> a, double s) {
  Vec out(a.begin(), a.end());
  for (double& v : out) v *= s;
  return out;
}

Vec add(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorKind::ShapeMismatch, "vector add");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vec sub(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorKind::ShapeMismatch, "vector sub");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vec unit_vector(std::size_t n, std::size_t k) {
  Vec e(n, 0.0);
  e.at(k) = 1.0;
  return e;
}

Mat outer(std::span<const double> a, std::span<const double> b) {
  Mat out(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out(i, j) = a[i] * b[j];
  return out;
}

std::string to_string(const Mat& a) {
  std::ostringstream os;
  os.precision(17);
  os << '[';
  for (std::size_t i = 0; i < a.rows(); ++i) {
    os << (i ? ",[" : "[");
    for (std::size_t j = 0; j < a.cols(); ++j) os << (j ? "," : "") << a(i, j);
    os << ']';
  }
  os << ']';
  return os.str();
}

LinearConstraint::LinearConstraint(Mat L, double t) : L_(std::move(L)), t_(t), norm_(hs_norm(L_)) {
  if (L_.size() == 0) fail(ErrorKind::InvalidArgument, "constraint matrix is empty");
  if (!L_.all_finite() || !std::isfinite(t_)) fail(ErrorKind::InvalidArgument, "non-finite constraint");
  if (norm_ == 0.0) fail(ErrorKind::InvalidArgument, "constraint matrix L must be nonzero");
}

RankOnePair RankOnePair::from_matrices(const Mat& A, const Mat& B) {
  if (!A.same_shape(B)) fail(ErrorKind::ShapeMismatch, "rank-one pair shapes differ");
  RankOneFactors f = rank_one_decompose(A - B);
  return RankOnePair{A, B, std::move(f.a), std::move(f.b)};
}

RankOnePair RankOnePair::from_factors(const Mat& B, const Vec& a, const Vec& b) {
  const double nb = norm(b);
  if (nb == 0.0) fail(ErrorKind::ZeroVector, "b must be nonzero");
  if (norm(a) == 0.0) fail(ErrorKind::ZeroVector, "a must be nonzero");
  if (B.rows() != a.size() || B.cols() != b.size()) fail(ErrorKind::ShapeMismatch, "factor sizes");
  Vec bu = scaled(b, 1.0 / nb);
  Vec au = scaled(a, nb);
  Mat A = B + outer(au, bu);
  return RankOnePair{std::move(A), B, std::move(au), std::move(bu)};
}

double apply_constraint(const LinearConstraint& c, const Mat& xi) {
  if (!xi.same_shape(c.L())) {
    fail(ErrorKind::ShapeMismatch, "matrix shape differs from constraint shape");
  }
  return hs_dot(c.L(), xi);
}

bool is_injective_map(const LinearConstraint& c) {
  return static_cast<std::size_t>(rank(c.L())) == c.cols();
}

Mat project_to_sigma(const LinearConstraint& c, const Mat& xi) {
  const double s = (c.t() - apply_constraint(c, xi)) / c.L_norm();
  Mat out = xi;
  const double k = s / c.L_norm();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += k * c.L().data()[i];
  return out;
}

int rank(const Mat& xi, double tol) {
  if (!(tol > 0.0)) fail(ErrorKind::InvalidArgument, "rank tolerance must be positive");
  if (xi.size() == 0 || max_abs(xi) == 0.0) return 0;
  const Svd svd = svd_small(xi);
  const double cut = tol * svd.sigma.front();
  return static_cast<int>(
      std::count_if(svd.sigma.begin(), svd.sigma.end(), [cut](double s) { return s > cut; }));
}

RankOneFactors rank_one_decompose(const Mat& M, double tol) {
  const int r = rank(M, tol);
  if (r != 1) fail(ErrorKind::NotRankOne, "matrix has rank " + std::to_string(r));
  std::size_t best = 0;
  double best_norm = -1.0;
  for (std::size_t i = 0; i < M.rows(); ++i) {
    const double rn = norm(M.row(i));
    if (rn > best_norm) {
      best_norm = rn;
      best = i;
    }
  }
  Vec b = scaled(M.row(best), 1.0 / best_norm);
  double bmax = 0.0;
  for (double v : b) bmax = std::max(bmax, std::abs(v));
  for (double v : b) {
    if (std::abs(v) > 1e-12 * bmax) {
      if (v < 0.0) b = scaled(b, -1.0);
      break;
    }
  }
  Vec a = matvec(M, b);
  return RankOneFactors{std::move(a), std::move(b)};
}

Mat householder_to_e1(std::span<const double> v) {
  const std::size_t n = v.size();
  const double nv = norm(v);
  if (n == 0 || nv == 0.0) fail(ErrorKind::ZeroVector, "householder_to_e1 needs a nonzero vector");
  Vec w(v.begin(), v.end());
  if (v[0] > 0.0) {
    double tail = 0.0;
    for (std::size_t i = 1; i < n; ++i) tail += v[i] * v[i];
    w[0] = -tail / (v[0] + nv);
  } else {
    w[0] = v[0] - nv;
  }
  const double ww = dot(w, w);
  if (ww <= 1e-32 * nv * nv) return Mat::identity(n);
  Mat P = Mat::identity(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) P(i, j) -= 2.0 * w[i] * w[j] / ww;
  return P;
}

Mat rotation_to_e1(std::span<const double> b) {
  const double nb = norm(b);
  if (std::abs(nb - 1.0) > 1e-12) fail(ErrorKind::NonUnit, "rotation_to_e1 needs a unit vector");
  // The reflector is symmetric, so Rᵀb = Rb = e₁.
  return householder_to_e1(b);
}

namespace {

// Completes the first `have` orthonormal columns of Q (k×k) to an orthonormal basis.
void complete_basis(Mat& Q, std::size_t have) {
  const std::size_t k = Q.rows();
  for (std::size_t col = have; col < k; ++col) {
    Vec best;
    double best_norm = -1.0;
    for (std::size_t e = 0; e < k; ++e) {
      Vec x = unit_vector(k, e);
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < col; ++j) {
          double proj = 0.0;
          for (std::size_t i = 0; i < k; ++i) proj += Q(i, j) * x[i];
          for (std::size_t i = 0; i < k; ++i) x[i] -= proj * Q(i, j);
        }
      }
      const double xn = norm(x);
      if (xn > best_norm) {
        best_norm = xn;
        best = std::move(x);
      }
    }
    for (std::size_t i = 0; i < k; ++i) Q(i, col) = best[i] / best_norm;
  }
}

Svd jacobi_tall(const Mat& M) {
  const std::size_t m = M.rows();
  const std::size_t n = M.cols();
  Mat W = M;
  Mat V = Mat::identity(n);
  constexpr double eps = 1e-15;
  constexpr int max_sweeps = 80;
  double fro2 = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) fro2 += M(i, j) * M(i, j);
  // Columns below this squared norm are roundoff and are never rotated.
  const double negligible = fro2 * 1e-30;
  bool converged = false;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += W(i, p) * W(i, p);
          beta += W(i, q) * W(i, q);
          gamma += W(i, p) * W(i, q);
        }
        if (gamma == 0.0 || alpha <= negligible || beta <= negligible) continue;
        if (std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double wp = W(i, p), wq = W(i, q);
          W(i, p) = c * wp - s * wq;
          W(i, q) = s * wp + c * wq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = V(i, p), vq = V(i, q);
          V(i, p) = c * vp - s * vq;
          V(i, q) = s * vp + c * vq;
        }
      }
    }
  }
  if (!converged) fail(ErrorKind::NumericConvergence, "one-sided Jacobi SVD did not converge");

  Vec sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = norm(W.col(j));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  Svd out{Mat(m, m), Vec(n), Mat(n, n)};
  const double smax = sigma[order.front()];
  std::size_t usable = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.sigma[k] = sigma[j];
    for (std::size_t i = 0; i < n; ++i) out.V(i, k) = V(i, j);
    if (sigma[j] > 1e-14 * smax && sigma[j] > 0.0 && usable == k) {
      for (std::size_t i = 0; i < m; ++i) out.U(i, k) = W(i, j) / sigma[j];
      ++usable;
    }
  }
  complete_basis(out.U, usable);
  return out;
}

}  // namespace

Svd svd_small(const Mat& M) {
  if (M.size() == 0) fail(ErrorKind::InvalidArgument, "svd of empty matrix");
  if (!M.all_finite()) fail(ErrorKind::InvalidArgument, "svd of non-finite matrix");
  if (M.rows() >= M.cols()) {
    Svd s = jacobi_tall(M);
    s.sigma.resize(std::min(M.rows(), M.cols()));
    return s;
  }
  Svd t = jacobi_tall(M.transpose());
  t.sigma.resize(std::min(M.rows(), M.cols()));
  return Svd{std::move(t.V), std::move(t.sigma), std::move(t.U)};
}

}  // namespace cvxint
