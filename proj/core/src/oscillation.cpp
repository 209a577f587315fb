#include "cvxint/oscillation.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "cvxint/error.hpp"

namespace cvxint {

namespace {

bool is_identity(const Mat& M) {
  for (std::size_t i = 0; i < M.rows(); ++i)
    for (std::size_t j = 0; j < M.cols(); ++j)
      if (M(i, j) != (i == j ? 1.0 : 0.0)) return false;
  return true;
}

// Lower-right block already diagonal with a nonzero prefix followed by zeros.
bool diagonal_canonical(const Mat& Lhat, double scale) {
  const double off_tol = 1e-14 * scale;
  const double nz_tol = 1e-12 * scale;
  for (std::size_t i = 0; i < Lhat.rows(); ++i)
    for (std::size_t j = 0; j < Lhat.cols(); ++j)
      if (i != j && std::abs(Lhat(i, j)) > off_tol) return false;
  bool seen_zero = false;
  for (std::size_t j = 0; j < std::min(Lhat.rows(), Lhat.cols()); ++j) {
    const bool nz = std::abs(Lhat(j, j)) > nz_tol;
    if (nz && seen_zero) return false;
    if (!nz) seen_zero = true;
  }
  return true;
}

}  // namespace

Reduction canonicalize(const LinearConstraint& c, const RankOnePair& pair) {
  const Mat& L = c.L();
  const std::size_t m = L.rows(), n = L.cols();
  if (!pair.A.same_shape(L) || !pair.B.same_shape(L) || pair.a.size() != m || pair.b.size() != n) {
    fail(ErrorKind::ShapeMismatch, "rank-one pair does not match the constraint shape");
  }
  const Mat D = outer(pair.a, pair.b);
  if (std::abs(hs_dot(L, D)) > 1e-10 * c.L_norm() * std::max(1.0, hs_norm(D))) {
    fail(ErrorKind::ConstraintViolated, "L(A) differs from L(B)");
  }
  const Vec Lb = matvec(L, pair.b);
  if (norm(Lb) <= 1e-12 * c.L_norm()) fail(ErrorKind::DegenerateDirection, "Lb = 0");

  Reduction red;
  red.R = rotation_to_e1(pair.b);
  const Mat L1 = matmul(L, red.R);
  const Vec col0 = L1.col(0);
  double tail = 0.0;
  for (std::size_t i = 1; i < m; ++i) tail += col0[i] * col0[i];
  red.P = std::sqrt(tail) <= 1e-14 * norm(col0) ? Mat::identity(m) : householder_to_e1(col0);
  Mat L2 = matmul(red.P, L1);
  for (std::size_t i = 1; i < m; ++i) L2(i, 0) = 0.0;

  red.U = Mat::identity(m);
  red.V = Mat::identity(n);
  bool svd_used = false;
  if (m > 1 && n > 1) {
    const Mat Lhat = L2.block(1, 1, m - 1, n - 1);
    if (!diagonal_canonical(Lhat, c.L_norm())) {
      const Svd s = svd_small(Lhat);
      red.U.set_block(1, 1, s.U);
      red.V.set_block(1, 1, s.V);
      svd_used = true;
    }
  }
  red.left = matmul(red.U.transpose(), red.P);
  red.right = matmul(red.R, red.V);
  Mat Lc = matmul(matmul(red.left, L), red.right);
  for (std::size_t i = 1; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i || std::abs(Lc(i, j)) <= 1e-12 * c.L_norm()) Lc(i, j) = 0.0;
    }
  red.L_canonical = std::move(Lc);
  red.a_canonical = matvec(red.left, pair.a);
  red.a_canonical[0] = 0.0;  // L′₁₁a′₁ = 𝓛(a⊗b) = 0
  const bool reflections = !is_identity(red.P) || !is_identity(red.R);
  red.case_id = reflections ? 3 : (svd_used ? 2 : 1);
  red.rank = canonical_rank(red.L_canonical, red.a_canonical);
  return red;
}

CoefficientTensor::CoefficientTensor(std::size_t m, std::size_t n, int r)
    : m_(m), n_(n), r_(r), a_(m * m * n, 0.0) {}

Mat CoefficientTensor::slice(std::size_t k) const {
  Mat out(m_, n_);
  for (std::size_t i = 0; i < m_; ++i)
    for (std::size_t l = 0; l < n_; ++l) out(i, l) = (*this)(i, k, l);
  return out;
}

Json CoefficientTensor::to_json() const {
  Json j;
  j["m"] = m_;
  j["n"] = n_;
  j["rank"] = r_;
  Json slices = Json::array();
  for (std::size_t k = 0; k < m_; ++k) slices.push_back(cvxint::to_json(slice(k)));
  j["a_i_kl_by_k"] = std::move(slices);
  return j;
}

int canonical_rank(const Mat& Lc, const Vec& ac) {
  const std::size_t m = Lc.rows(), n = Lc.cols();
  if (ac.size() != m) fail(ErrorKind::ShapeMismatch, "a′ length differs from L′ rows");
  const double scale = hs_norm(Lc);
  if (scale == 0.0 || std::abs(Lc(0, 0)) <= 1e-12 * scale) fail(ErrorKind::NonCanonical, "L′₁₁ must be nonzero");
  for (std::size_t i = 1; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && std::abs(Lc(i, j)) > 1e-12 * scale) {
        fail(ErrorKind::NonCanonical, "L′ has an entry outside row 1 and the diagonal");
      }
  int r = 1;
  bool seen_zero = false;
  for (std::size_t j = 1; j < std::min(m, n); ++j) {
    const bool nz = std::abs(Lc(j, j)) > 1e-12 * scale;
    if (nz && seen_zero) fail(ErrorKind::NonCanonical, "nonzero diagonal of L′ must be a prefix");
    if (nz) ++r;
    else seen_zero = true;
  }
  if (std::abs(ac[0]) > 1e-12 * std::max(1.0, norm(ac))) fail(ErrorKind::NonCanonical, "a′₁ must vanish");
  return r;
}

CoefficientTensor solve_coefficients(const Mat& Lc, const Vec& ac) {
  const int r = canonical_rank(Lc, ac);
  const std::size_t m = Lc.rows(), n = Lc.cols();
  CoefficientTensor A(m, n, r);
  if (m < 2) return A;  // a′ = 0 is forced
  const std::size_t R = static_cast<std::size_t>(r);
  const std::size_t k = 1;  // only the second row of the tensor is active
  const double L11 = Lc(0, 0);
  auto L = [&](std::size_t i, std::size_t j) { return Lc(i - 1, j - 1); };
  auto a = [&](std::size_t j) { return ac[j - 1]; };
  auto set = [&](std::size_t i, std::size_t l, double v) { A(i - 1, k, l - 1) = v; };

  for (std::size_t j = 2; j <= m; ++j) set(j, 1, a(j));
  for (std::size_t j = 2; j <= R; ++j) {
    set(1, j, -(L(j, j) / L11) * a(j));
    set(j, j, (L(1, j) / L11) * a(j));
  }
  for (std::size_t j = 3; j <= R; ++j)
    for (std::size_t l = 2; l < j; ++l) {
      set(l, j, (L(1, l) * L(j, j) * a(j) + L(1, j) * L(l, l) * a(l)) / (L(l, l) * L11));
      set(j, l, 0.0);
    }
  for (std::size_t j = R + 1; j <= n; ++j) {
    set(1, j, 0.0);
    for (std::size_t l = 2; l <= R; ++l) set(l, j, (L(1, j) / L11) * a(l));
  }
  return A;
}

double listed_equation_residual(const CoefficientTensor& T, const Mat& Lc) {
  const std::size_t m = T.m(), n = T.n();
  const std::size_t R = static_cast<std::size_t>(T.rank());
  auto L = [&](std::size_t i, std::size_t j) { return Lc(i - 1, j - 1); };
  double worst = 0.0;
  auto note = [&worst](double v) { worst = std::max(worst, std::abs(v)); };
  for (std::size_t kk = 1; kk <= m; ++kk) {
    auto a = [&](std::size_t i, std::size_t l) { return T(i - 1, kk - 1, l - 1); };
    note(L(1, 1) * a(1, 1));  // rr-1
    for (std::size_t j = 2; j <= R; ++j) {
      note(L(1, j) * a(1, j) + L(j, j) * a(j, j));                           // rr-4
      note(L(1, 1) * a(1, j) + L(1, j) * a(1, 1) + L(j, j) * a(j, 1));       // rr-3
    }
    for (std::size_t j = 3; j <= R; ++j)
      for (std::size_t l = 2; l < j; ++l)
        note(L(1, l) * a(1, j) + L(1, j) * a(1, l) + L(l, l) * a(l, j) + L(j, j) * a(j, l));  // rr-5
    for (std::size_t j = R + 1; j <= n; ++j) {
      note(L(1, j) * a(1, j));                             // rr-6
      note(L(1, 1) * a(1, j) + L(1, j) * a(1, 1));         // rr-7
      for (std::size_t l = 2; l <= R; ++l)
        note(L(1, l) * a(1, j) + L(1, j) * a(1, l) + L(l, l) * a(l, j));  // rr-8
      for (std::size_t l = R + 1; l < j; ++l)
        note(L(1, l) * a(1, j) + L(1, j) * a(1, l));       // rr-2
    }
  }
  return worst;
}

double symbol_residual(const CoefficientTensor& T, const Mat& L) {
  const std::size_t m = T.m(), n = T.n();
  double worst = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    Mat S(n, n);
    for (std::size_t l = 0; l < n; ++l)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += L(i, j) * T(i, k, l);
        S(l, j) = s;
      }
    for (std::size_t l = 0; l < n; ++l)
      for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, std::abs(S(l, j) + S(j, l)));
  }
  return worst;
}

bool normalization_holds(const CoefficientTensor& T, const Vec& ac) {
  for (std::size_t i = 0; i < T.m(); ++i)
    for (std::size_t k = 0; k < T.m(); ++k) {
      const double expect = (k == 1 && i >= 1) ? ac[i] : 0.0;
      if (T(i, k, 0) != expect) return false;
    }
  return true;
}

std::string_view to_string(PatchRegion r) {
  switch (r) {
    case PatchRegion::Outside: return "outside";
    case PatchRegion::Margin: return "margin";
    case PatchRegion::CutoffZero: return "cutoff_zero";
    case PatchRegion::CutoffBand: return "cutoff_band";
    case PatchRegion::Ramp: return "ramp";
    case PatchRegion::PlateauA: return "plateau_a";
    case PatchRegion::PlateauB: return "plateau_b";
  }
  return "outside";
}

double distance_to_segment(const Mat& xi, const Mat& D, double lambda) {
  const double dd = hs_dot(D, D);
  double s = dd > 0.0 ? hs_dot(xi, D) / dd : 0.0;
  s = std::clamp(s, -lambda, 1.0 - lambda);
  return hs_norm(xi - s * D);
}

OscillationPatch::OscillationPatch(const LinearConstraint& c, const RankOnePair& pair, double lambda,
                                   const Box& omega, Reduction red, CoefficientTensor coeffs)
    : constraint_(c), pair_(pair), lambda_(lambda), domain_(omega), reduction_(std::move(red)),
      coeffs_(std::move(coeffs)) {
  const Mat A2 = coeffs_.slice(1);
  Bx_ = matmul(matmul(reduction_.left.transpose(), A2), reduction_.right.transpose());
  const Mat S = matmul(Bx_.transpose(), constraint_.L());
  for (std::size_t i = 0; i < S.rows(); ++i)
    for (std::size_t j = 0; j < S.cols(); ++j)
      symbol_defect_ = std::max(symbol_defect_, 0.5 * std::abs(S(i, j) + S(j, i)));
  setup_frame();
}

void OscillationPatch::setup_frame() {
  const std::size_t n = domain_.dim();
  const Vec& b = pair_.b;
  std::size_t c = 0;
  for (std::size_t j = 1; j < n; ++j)
    if (std::abs(b[j]) > std::abs(b[c])) c = j;
  bool axis = std::abs(std::abs(b[c]) - 1.0) <= 1e-12;
  for (std::size_t j = 0; j < n && axis; ++j)
    if (j != c && std::abs(b[j]) > 1e-12) axis = false;
  axis_ = axis;
  axis_index_ = c;
  Mat Rtile(n, n);
  if (axis_) {
    perm_.assign(1, c);
    sign_.assign(1, b[c] > 0.0 ? 1 : -1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == c) continue;
      perm_.push_back(j);
      sign_.push_back(1);
    }
    for (std::size_t t = 0; t < n; ++t) Rtile(perm_[t], t) = sign_[t];
    tile_len_.resize(n);
    for (std::size_t t = 0; t < n; ++t) tile_len_[t] = domain_.extent(perm_[t]);
  } else {
    Rtile = reduction_.R;  // first column is b
  }
  Rt_ = Rtile.transpose();
  By_ = matmul(Bx_, Rtile);
}

namespace {

// Largest p ≥ 0 with α·p + β·p² ≤ γ.
double quadratic_limit(double alpha, double beta, double gamma) {
  if (beta <= 0.0) return alpha > 0.0 ? gamma / alpha : std::numeric_limits<double>::infinity();
  return (-alpha + std::sqrt(alpha * alpha + 4.0 * beta * gamma)) / (2.0 * beta);
}

Box require_box(const Box& omega, std::size_t n) {
  if (!omega.valid() || omega.dim() != n) fail(ErrorKind::InvalidArgument, "patch box must be a valid n-dimensional box");
  return omega;
}

}  // namespace

void OscillationPatch::finalize() {
  const std::size_t n = domain_.dim();
  const std::size_t k = n - 1;
  const Vec trans(tile_len_.begin() + 1, tile_len_.end());
  const double l1 = tile_len_[0];
  const double G1 = k ? cutoff_.grad_bound(trans) : 0.0;
  const double G2 = k ? cutoff_.hess_bound(trans) : 0.0;
  const double du = l1 * profile_.sup_du();
  const double u = l1 * l1 * profile_.sup_u();
  const double By_norm = op_norm(By_);
  const double col0 = norm(By_.col(0));
  const double rest = k ? op_norm(By_.block(0, 1, By_.rows(), k)) : 0.0;
  segment_bound_ = By_norm * (std::sqrt(2.0) * du * G1 + u * G2);
  sup_bound_ = col0 * du + rest * u * G1;
  const double plateau = std::pow(cutoff_.plateau_fraction_1d(), static_cast<double>(k));
  const double cell = axis_ ? domain_.volume() : static_cast<double>(tile_count_) * std::pow(tile_side_, double(n));
  measure_A_ = cell * profile_.measure_I1() * plateau;
  measure_B_ = cell * profile_.measure_I2() * plateau;
}

bool OscillationPatch::tile_inside(std::span<const long> kidx) const {
  const std::size_t n = domain_.dim();
  const std::size_t corners = std::size_t{1} << n;
  for (std::size_t cmask = 0; cmask < corners; ++cmask) {
    for (std::size_t i = 0; i < n; ++i) {
      double x = center_[i];
      for (std::size_t j = 0; j < n; ++j) {
        const double yj = tile_side_ * (static_cast<double>(kidx[j]) + ((cmask >> j) & 1U ? 1.0 : 0.0));
        x += Rt_(j, i) * yj;
      }
      const double eps = 1e-12 * domain_.extent(i);
      if (x < domain_.lo[i] + eps || x > domain_.hi[i] - eps) return false;
    }
  }
  return true;
}

void OscillationPatch::count_tiles() {
  const std::size_t n = domain_.dim();
  const double s = tile_side_;
  std::vector<long> kmin(n), kmax(n);
  for (std::size_t j = 0; j < n; ++j) {
    double reach = 0.0;
    for (std::size_t i = 0; i < n; ++i) reach += std::abs(Rt_(j, i)) * 0.5 * domain_.extent(i);
    kmin[j] = static_cast<long>(std::floor(-reach / s)) - 1;
    kmax[j] = static_cast<long>(std::ceil(reach / s)) + 1;
  }
  if (n > 3) {
    // Exact enumeration is too costly; count lattice cells inside the box shrunk by one tile diagonal.
    double vol = 1.0;
    for (std::size_t i = 0; i < n; ++i) vol *= std::max(0.0, domain_.extent(i) - 2.0 * s * std::sqrt(double(n)));
    tile_count_ = static_cast<std::size_t>(std::floor(vol / std::pow(s, double(n))));
    return;
  }
  std::size_t count = 0;
  std::vector<long> k(n);
  const std::size_t last = n - 1;
  const std::size_t corners = std::size_t{1} << n;
  auto column = [&]() {
    double lo_k = -std::numeric_limits<double>::infinity();
    double hi_k = std::numeric_limits<double>::infinity();
    for (std::size_t cmask = 0; cmask < corners; ++cmask) {
      for (std::size_t i = 0; i < n; ++i) {
        double base = center_[i];
        for (std::size_t j = 0; j < last; ++j)
          base += Rt_(j, i) * s * (static_cast<double>(k[j]) + ((cmask >> j) & 1U ? 1.0 : 0.0));
        base += Rt_(last, i) * s * (((cmask >> last) & 1U) ? 1.0 : 0.0);
        const double slope = Rt_(last, i) * s;
        const double eps = 1e-12 * domain_.extent(i);
        const double lo = domain_.lo[i] + eps - base, hi = domain_.hi[i] - eps - base;
        if (slope == 0.0) {
          if (lo > 0.0 || hi < 0.0) return;
          continue;
        }
        double a = lo / slope, b = hi / slope;
        if (slope < 0.0) std::swap(a, b);
        lo_k = std::max(lo_k, a);
        hi_k = std::min(hi_k, b);
      }
    }
    const double first = std::ceil(lo_k), final = std::floor(hi_k);
    if (final >= first) count += static_cast<std::size_t>(final - first) + 1;
  };
  if (n == 1) {
    column();
  } else {
    for (k[0] = kmin[0]; k[0] <= kmax[0]; ++k[0]) {
      if (n == 2) {
        column();
      } else {
        for (k[1] = kmin[1]; k[1] <= kmax[1]; ++k[1]) column();
      }
    }
  }
  tile_count_ = count;
}

PatchRegion OscillationPatch::eval_tile(std::span<const double> yl, std::span<double> value, Mat& grad,
                                        PatchLocation* loc) const {
  const std::size_t n = tile_len_.size();
  const std::size_t m = By_.rows();
  const std::size_t k = n - 1;
  const double l1 = tile_len_[0];
  const Profile::Sample ps = profile_.eval(yl[0] / l1);

  std::array<double, 8> ylo{}, yhi{};
  auto emit = [&](PatchRegion region, std::size_t slot) {
    if (!loc) return region;
    loc->region = region;
    loc->slot = slot;
    if (!axis_) return region;
    Box b{Vec(n), Vec(n)};
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t xi = perm_[t];
      if (sign_[t] > 0) {
        b.lo[xi] = domain_.lo[xi] + ylo[t];
        b.hi[xi] = domain_.lo[xi] + yhi[t];
      } else {
        b.lo[xi] = domain_.hi[xi] - yhi[t];
        b.hi[xi] = domain_.hi[xi] - ylo[t];
      }
    }
    loc->box = std::move(b);
    return region;
  };

  const double gap = cutoff_.gap(), ramp = cutoff_.ramp();
  if (ps.piece == ProfilePiece::Margin) {
    ylo[0] = ps.piece_lo * l1;
    yhi[0] = ps.piece_hi * l1;
    for (std::size_t t = 1; t < n; ++t) {
      ylo[t] = 0.0;
      yhi[t] = tile_len_[t];
    }
    return emit(PatchRegion::Margin, 2);
  }
  for (std::size_t t = 1; t < n; ++t) {
    const double z = yl[t] / tile_len_[t];
    if (z <= gap || z >= 1.0 - gap) {
      ylo[0] = profile_.margin() * l1;
      yhi[0] = (1.0 - profile_.margin()) * l1;
      for (std::size_t q = 1; q < t; ++q) {
        ylo[q] = gap * tile_len_[q];
        yhi[q] = (1.0 - gap) * tile_len_[q];
      }
      ylo[t] = z <= gap ? 0.0 : (1.0 - gap) * tile_len_[t];
      yhi[t] = z <= gap ? gap * tile_len_[t] : tile_len_[t];
      for (std::size_t q = t + 1; q < n; ++q) {
        ylo[q] = 0.0;
        yhi[q] = tile_len_[q];
      }
      return emit(PatchRegion::CutoffZero, 3 + (t - 1));
    }
  }
  std::array<double, 8> ge{};
  std::array<double, 64> he{};
  double eta = 1.0;
  bool band = false;
  if (k > 0) {
    eta = cutoff_.eval(yl.subspan(1, k), std::span<const double>(tile_len_).subspan(1, k), ge, he);
    for (std::size_t t = 1; t < n; ++t) {
      const double z = yl[t] / tile_len_[t];
      if (z < gap + ramp || z > 1.0 - gap - ramp) band = true;
    }
  }
  const double u = l1 * l1 * ps.u, du = l1 * ps.du, ddu = ps.ddu;
  std::array<double, 8> gy{};
  std::array<double, 64> H{};
  gy[0] = eta * du;
  H[0] = eta * ddu;
  for (std::size_t a = 1; a < n; ++a) {
    gy[a] = u * ge[a - 1];
    H[a] = H[a * n] = du * ge[a - 1];
    for (std::size_t b = 1; b < n; ++b) H[a * n + b] = u * he[(a - 1) * k + (b - 1)];
  }
  std::array<double, 64> M{};
  for (std::size_t i = 0; i < m; ++i) {
    double v = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      v += By_(i, j) * gy[j];
      double s = 0.0;
      for (std::size_t q = 0; q < n; ++q) s += By_(i, q) * H[q * n + j];
      M[i * n + j] = s;
    }
    value[i] += v;
    for (std::size_t l = 0; l < n; ++l) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += M[i * n + j] * Rt_(j, l);
      grad(i, l) += s;
    }
  }
  if (band) return emit(PatchRegion::CutoffBand, 0);
  const bool is_a = ps.piece == ProfilePiece::PlateauA;
  const bool is_b = ps.piece == ProfilePiece::PlateauB1 || ps.piece == ProfilePiece::PlateauB2;
  if (!is_a && !is_b) return emit(PatchRegion::Ramp, 0);
  ylo[0] = ps.piece_lo * l1;
  yhi[0] = ps.piece_hi * l1;
  for (std::size_t t = 1; t < n; ++t) {
    ylo[t] = (gap + ramp) * tile_len_[t];
    yhi[t] = (1.0 - gap - ramp) * tile_len_[t];
  }
  return emit(is_a ? PatchRegion::PlateauA : PatchRegion::PlateauB, is_a ? 0 : 1);
}

PatchRegion OscillationPatch::accumulate(std::span<const double> x, std::span<double> value, Mat& grad,
                                         PatchLocation* loc) const {
  const std::size_t n = domain_.dim();
  std::array<double, 8> yl{};
  if (axis_) {
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t xi = perm_[t];
      yl[t] = sign_[t] > 0 ? x[xi] - domain_.lo[xi] : domain_.hi[xi] - x[xi];
    }
    return eval_tile(std::span<const double>(yl.data(), n), value, grad, loc);
  }
  std::array<long, 8> kidx{};
  for (std::size_t j = 0; j < n; ++j) {
    double y = 0.0;
    for (std::size_t i = 0; i < n; ++i) y += Rt_(j, i) * (x[i] - center_[i]);
    kidx[j] = static_cast<long>(std::floor(y / tile_side_));
    yl[j] = y - tile_side_ * static_cast<double>(kidx[j]);
  }
  if (!tile_inside(std::span<const long>(kidx.data(), n))) {
    if (loc) loc->region = PatchRegion::Outside;
    return PatchRegion::Outside;
  }
  return eval_tile(std::span<const double>(yl.data(), n), value, grad, loc);
}

PatchSample OscillationPatch::evaluate(std::span<const double> x) const {
  const std::size_t n = domain_.dim();
  if (x.size() != n) fail(ErrorKind::ShapeMismatch, "point dimension differs from patch dimension");
  for (std::size_t i = 0; i < n; ++i) {
    const double tol = 1e-12 * domain_.extent(i);
    if (!(x[i] >= domain_.lo[i] - tol && x[i] <= domain_.hi[i] + tol)) {
      fail(ErrorKind::OutOfDomain, "point lies outside the patch box");
    }
  }
  PatchSample s{Vec(By_.rows(), 0.0), Mat(By_.rows(), n), PatchRegion::Outside};
  s.region = accumulate(x, s.value, s.gradient, nullptr);
  return s;
}

Vec OscillationPatch::slot_extent(std::size_t slot) const {
  if (!axis_) fail(ErrorKind::InvalidArgument, "slot geometry exists only for axis-aligned patches");
  const std::size_t n = domain_.dim();
  if (slot >= slot_count()) fail(ErrorKind::InvalidArgument, "slot index out of range");
  const double l1 = tile_len_[0];
  const double gap = cutoff_.gap(), ramp = cutoff_.ramp();
  Vec ty(n);
  if (slot <= 1) {
    const auto iv = slot == 0 ? profile_.intervals_I1().front() : profile_.intervals_I2().front();
    ty[0] = (iv.second - iv.first) * l1;
    for (std::size_t t = 1; t < n; ++t) ty[t] = (1.0 - 2.0 * (gap + ramp)) * tile_len_[t];
  } else if (slot == 2) {
    ty[0] = profile_.margin() * l1;
    for (std::size_t t = 1; t < n; ++t) ty[t] = tile_len_[t];
  } else {
    const std::size_t q = slot - 3 + 1;
    ty[0] = (1.0 - 2.0 * profile_.margin()) * l1;
    for (std::size_t t = 1; t < n; ++t) {
      if (t < q) ty[t] = (1.0 - 2.0 * gap) * tile_len_[t];
      else if (t == q) ty[t] = gap * tile_len_[t];
      else ty[t] = tile_len_[t];
    }
  }
  Vec ext(n);
  for (std::size_t t = 0; t < n; ++t) ext[perm_[t]] = ty[t];
  return ext;
}

Json OscillationPatch::to_json() const {
  Json j;
  j["lambda"] = lambda_;
  j["tau"] = tau_;
  j["domain"] = {{"lo", cvxint::to_json(domain_.lo)}, {"hi", cvxint::to_json(domain_.hi)}};
  j["A"] = cvxint::to_json(pair_.A);
  j["B"] = cvxint::to_json(pair_.B);
  j["a"] = cvxint::to_json(pair_.a);
  j["b"] = cvxint::to_json(pair_.b);
  Json red;
  red["case"] = reduction_.case_id;
  red["rank"] = reduction_.rank;
  red["P"] = cvxint::to_json(reduction_.P);
  red["R"] = cvxint::to_json(reduction_.R);
  red["U"] = cvxint::to_json(reduction_.U);
  red["V"] = cvxint::to_json(reduction_.V);
  red["L_canonical"] = cvxint::to_json(reduction_.L_canonical);
  red["a_canonical"] = cvxint::to_json(reduction_.a_canonical);
  j["reduction"] = std::move(red);
  j["coefficients"] = coeffs_.to_json();
  j["operator_matrix"] = cvxint::to_json(Bx_);
  Json prof;
  prof["periods"] = profile_.periods();
  prof["margin"] = profile_.margin();
  prof["ramp"] = profile_.ramp();
  prof["sup_u"] = profile_.sup_u();
  prof["sup_du"] = profile_.sup_du();
  prof["measure_I1"] = profile_.measure_I1();
  prof["measure_I2"] = profile_.measure_I2();
  constexpr std::size_t kListed = 16;
  Json i1 = Json::array(), i2 = Json::array();
  const auto I1 = profile_.intervals_I1();
  const auto I2 = profile_.intervals_I2();
  for (std::size_t q = 0; q < std::min(kListed, I1.size()); ++q) i1.push_back({I1[q].first, I1[q].second});
  for (std::size_t q = 0; q < std::min(2 * kListed, I2.size()); ++q) i2.push_back({I2[q].first, I2[q].second});
  prof["intervals_I1"] = std::move(i1);
  prof["intervals_I2"] = std::move(i2);
  prof["intervals_truncated"] = I1.size() > kListed;
  j["profile"] = std::move(prof);
  Json cut;
  cut["gap"] = cutoff_.gap();
  cut["ramp"] = cutoff_.ramp();
  cut["constant_C"] = tau_ > 0.0 ? cutoff_.constant(domain_.dim() - 1, tau_) : 0.0;
  j["cutoff"] = std::move(cut);
  j["axis_aligned"] = axis_;
  j["tile_side"] = axis_ ? 0.0 : tile_side_;
  j["tile_count"] = tile_count_;
  j["measure_A"] = measure_A_;
  j["measure_B"] = measure_B_;
  j["sup_bound"] = sup_bound_;
  j["segment_bound"] = segment_bound_;
  j["symbol_defect"] = symbol_defect_;
  return j;
}

OscillationPatch make_patch(const LinearConstraint& c, const RankOnePair& pair, double lambda,
                            const Box& omega, double tau) {
  if (!(lambda > 0.0 && lambda < 1.0)) fail(ErrorKind::InvalidArgument, "lambda must lie in (0,1)");
  if (!(tau > 0.0 && tau < 1.0)) fail(ErrorKind::InvalidArgument, "tau must lie in (0,1)");
  const std::size_t n = c.cols();
  const Box box = require_box(omega, n);
  Reduction red = canonicalize(c, pair);
  CoefficientTensor coeffs = solve_coefficients(red.L_canonical, red.a_canonical);
  OscillationPatch p(c, pair, lambda, box, std::move(red), std::move(coeffs));
  p.tau_ = tau;
  // Each of the three geometric losses (profile, cutoff, tiling) gets a quarter of τ.
  const double quarter = tau / 4.0;
  if (!p.axis_) {
    p.tile_side_ = box.min_extent() * (1.0 - std::pow(1.0 - quarter, 1.0 / double(n))) / (2.0 * std::sqrt(double(n)));
    p.center_.resize(n);
    for (std::size_t i = 0; i < n; ++i) p.center_[i] = 0.5 * (box.lo[i] + box.hi[i]);
    p.tile_len_.assign(n, p.tile_side_);
    p.count_tiles();
  }
  if (n > 1) {
    const double total = 0.5 * (1.0 - std::pow(1.0 - quarter, 1.0 / double(n - 1)));
    p.cutoff_ = Cutoff(0.25 * total, 0.75 * total);
  } else {
    p.cutoff_ = Cutoff(0.01, 0.01);
  }
  const double margin = tau / 16.0;
  const double ramp = std::min(tau / 16.0, 0.5 * max_ramp_fraction(lambda));
  const Profile unit = Profile::with_periods(lambda, 1, margin, ramp);
  const std::size_t k = n - 1;
  const Vec trans(p.tile_len_.begin() + 1, p.tile_len_.end());
  const double l1 = p.tile_len_[0];
  const double G1 = k ? p.cutoff_.grad_bound(trans) : 0.0;
  const double G2 = k ? p.cutoff_.hess_bound(trans) : 0.0;
  const double F = unit.unit_sup_F(), G = unit.unit_sup_G();
  const double By_norm = op_norm(p.By_);
  const double col0 = norm(p.By_.col(0));
  const double rest = k ? op_norm(p.By_.block(0, 1, p.By_.rows(), k)) : 0.0;
  const double gamma = 0.45 * tau;
  const double p_b = quadratic_limit(By_norm * std::sqrt(2.0) * l1 * F * G1, By_norm * l1 * l1 * G * G2, gamma);
  const double p_e = quadratic_limit(col0 * l1 * F, rest * l1 * l1 * G * G1, gamma);
  const double period = std::min(p_b, p_e);
  const double need = (1.0 - 2.0 * margin) / period;
  if (!(need < 1e12)) {
    fail(ErrorKind::InfeasibleTau, "patch needs at least " + std::to_string(need) + " oscillation periods");
  }
  p.profile_ = Profile::with_periods(lambda, static_cast<std::size_t>(std::floor(need)) + 1, margin, ramp);
  p.finalize();
  return p;
}

PatchGeometry PatchGeometry::for_exceptional_fraction(double mu, std::size_t n) {
  if (!(mu > 0.0 && mu < 1.0)) fail(ErrorKind::InvalidArgument, "exceptional fraction must lie in (0,1)");
  if (n == 0) fail(ErrorKind::InvalidArgument, "patch dimension must be positive");
  // margin = ramp = q, cutoff gap = q/4, cutoff ramp = 5q/4.
  const double q = std::min(0.002, mu / (6.0 + 3.0 * static_cast<double>(n - 1)));
  PatchGeometry g;
  g.margin = q;
  g.ramp = q;
  g.cutoff_gap = 0.25 * q;
  g.cutoff_ramp = 1.25 * q;
  return g;
}

double PatchGeometry::exceptional_fraction(std::size_t n) const {
  return 4.0 * ramp + 2.0 * margin + 2.0 * static_cast<double>(n > 0 ? n - 1 : 0) * (cutoff_gap + cutoff_ramp);
}

OscillationPatch make_patch_with_geometry(const LinearConstraint& c, const RankOnePair& pair, double lambda,
                                          const Box& omega, const PatchGeometry& geom) {
  if (!(lambda > 0.0 && lambda < 1.0)) fail(ErrorKind::InvalidArgument, "lambda must lie in (0,1)");
  const std::size_t n = c.cols();
  const Box box = require_box(omega, n);
  Reduction red = canonicalize(c, pair);
  CoefficientTensor coeffs = solve_coefficients(red.L_canonical, red.a_canonical);
  OscillationPatch p(c, pair, lambda, box, std::move(red), std::move(coeffs));
  if (!p.axis_) {
    fail(ErrorKind::InvalidArgument, "explicit patch geometry needs an axis-parallel direction b");
  }
  p.cutoff_ = Cutoff(geom.cutoff_gap, geom.cutoff_ramp);
  p.profile_ = Profile::with_periods(lambda, geom.periods, geom.margin, geom.ramp);
  p.finalize();
  return p;
}

PatchSample evaluate_patch(const OscillationPatch& p, std::span<const double> x) { return p.evaluate(x); }

Json PatchPropertyReport::to_json() const {
  Json j;
  j["samples_per_axis"] = samples_per_axis;
  j["tau"] = tau;
  j["boundary_max"] = boundary_max;
  j["max_constraint_residual"] = max_residual;
  j["max_segment_distance"] = max_segment_distance;
  j["plateau_error"] = plateau_error;
  j["measure_A"] = measure_A;
  j["measure_B"] = measure_B;
  j["sampled_A"] = sampled_A;
  j["sampled_B"] = sampled_B;
  j["sup_value"] = sup_value;
  Json props;
  props["a_compact_support"] = support;
  props["b_segment_distance"] = segment;
  props["c_plateaus_exact"] = plateaus;
  props["d_measures"] = measures;
  props["e_sup_bound"] = sup;
  props["constraint"] = constraint;
  j["properties"] = std::move(props);
  j["all_pass"] = all();
  return j;
}

PatchPropertyReport check_patch_properties(const OscillationPatch& p, double tau, std::size_t total_samples) {
  const Box& box = p.domain();
  const std::size_t n = box.dim();
  PatchPropertyReport r;
  r.tau = tau;
  r.samples_per_axis = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(total_samples), 1.0 / n) + 1e-9)));
  const std::size_t S = r.samples_per_axis;
  const Mat D = p.pair().difference();
  const double lam = p.lambda();
  const Mat gA = (1.0 - lam) * D;
  const Mat gB = -lam * D;
  const LinearConstraint c0 = p.constraint().with_level(0.0);

  std::size_t total = 1;
  for (std::size_t j = 0; j < n; ++j) total *= S + 1;
  std::vector<std::size_t> idx(n, 0);
  Vec x(n);
  std::size_t inA = 0, inB = 0;
  for (std::size_t lin = 0; lin < total; ++lin) {
    std::size_t rem = lin;
    bool boundary = false;
    for (std::size_t j = n; j-- > 0;) {
      idx[j] = rem % (S + 1);
      rem /= S + 1;
      x[j] = idx[j] == S ? box.hi[j] : box.lo[j] + box.extent(j) * static_cast<double>(idx[j]) / static_cast<double>(S);
      boundary = boundary || idx[j] == 0 || idx[j] == S;
    }
    const PatchSample s = p.evaluate(x);
    const double v = norm(s.value);
    r.sup_value = std::max(r.sup_value, v);
    if (boundary) r.boundary_max = std::max(r.boundary_max, v);
    r.max_residual = std::max(r.max_residual, std::abs(apply_constraint(c0, s.gradient)));
    r.max_segment_distance = std::max(r.max_segment_distance, distance_to_segment(s.gradient, D, lam));
    if (s.region == PatchRegion::PlateauA) {
      ++inA;
      r.plateau_error = std::max(r.plateau_error, max_abs(s.gradient - gA));
    } else if (s.region == PatchRegion::PlateauB) {
      ++inB;
      r.plateau_error = std::max(r.plateau_error, max_abs(s.gradient - gB));
    }
  }
  r.sampled_A = static_cast<double>(inA) / static_cast<double>(total);
  r.sampled_B = static_cast<double>(inB) / static_cast<double>(total);
  r.measure_A = p.measure_A();
  r.measure_B = p.measure_B();
  const double vol = box.volume();
  r.support = r.boundary_max == 0.0;
  r.segment = r.max_segment_distance < tau;
  r.plateaus = r.plateau_error <= 1e-12 && inA > 0 && inB > 0;
  r.measures = std::abs(r.measure_A - lam * vol) < tau && std::abs(r.measure_B - (1.0 - lam) * vol) < tau;
  r.sup = r.sup_value < tau;
  r.constraint = r.max_residual < 1e-10;
  return r;
}

}  // namespace cvxint
