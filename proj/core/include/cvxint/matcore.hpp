#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace cvxint {

using Vec = std::vector<double>;

/// Dense row-major real matrix. All matrix norms are Hilbert-Schmidt.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
  Mat(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static Mat from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Mat identity(std::size_t n);
  static Mat diag(std::span<const double> d);
  static Mat diag2(double x, double y);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool same_shape(const Mat& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& entries() const noexcept { return data_; }

  Mat transpose() const;
  Vec row(std::size_t i) const;
  Vec col(std::size_t j) const;
  Mat block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  void set_block(std::size_t r0, std::size_t c0, const Mat& b);

  Mat& operator+=(const Mat& o);
  Mat& operator-=(const Mat& o);
  Mat& operator*=(double s);

  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator-(Mat a);
Mat operator*(double s, Mat a);
Mat operator*(Mat a, double s);
Mat matmul(const Mat& a, const Mat& b);
Vec matvec(const Mat& a, std::span<const double> x);

/// Hilbert-Schmidt inner product and norm.
double hs_dot(const Mat& a, const Mat& b);
double hs_norm(const Mat& a);
double max_abs(const Mat& a);
/// Spectral norm (largest singular value).
double op_norm(const Mat& a);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
Vec scaled(std::span<const double> a, double s);
Vec add(std::span<const double> a, std::span<const double> b);
Vec sub(std::span<const double> a, std::span<const double> b);
Vec unit_vector(std::size_t n, std::size_t k);
Mat outer(std::span<const double> a, std::span<const double> b);

std::string to_string(const Mat& a);

/// The linear map 𝓛(ξ) = Σ L_ij ξ_ij together with its level t.
class LinearConstraint {
 public:
  LinearConstraint(Mat L, double t);

  const Mat& L() const noexcept { return L_; }
  double t() const noexcept { return t_; }
  double L_norm() const noexcept { return norm_; }
  std::size_t rows() const noexcept { return L_.rows(); }
  std::size_t cols() const noexcept { return L_.cols(); }
  LinearConstraint with_level(double t) const { return LinearConstraint(L_, t); }

 private:
  Mat L_;
  double t_;
  double norm_;
};

struct RankOneFactors {
  Vec a;
  Vec b;
};

/// A, B with A − B = a⊗b and |b| = 1.
struct RankOnePair {
  Mat A;
  Mat B;
  Vec a;
  Vec b;

  /// Factors A − B; throws NotRankOne if the difference is not rank one.
  static RankOnePair from_matrices(const Mat& A, const Mat& B);
  /// Builds A = B + a⊗b with b normalized (a rescaled accordingly).
  static RankOnePair from_factors(const Mat& B, const Vec& a, const Vec& b);
  Mat difference() const { return outer(a, b); }
};

double apply_constraint(const LinearConstraint& c, const Mat& xi);
bool is_injective_map(const LinearConstraint& c);
Mat project_to_sigma(const LinearConstraint& c, const Mat& xi);

inline constexpr double kDefaultRankTol = 1e-9;

int rank(const Mat& xi, double tol = kDefaultRankTol);
RankOneFactors rank_one_decompose(const Mat& M, double tol = kDefaultRankTol);

Mat householder_to_e1(std::span<const double> v);
Mat rotation_to_e1(std::span<const double> b);

struct Svd {
  Mat U;
  Vec sigma;
  Mat V;
};

/// One-sided Jacobi SVD: M = U·diag(σ)·Vᵀ with U (m×m) and V (n×n) orthogonal.
Svd svd_small(const Mat& M);

}  // namespace cvxint
