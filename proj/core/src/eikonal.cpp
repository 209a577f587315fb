#include "cvxint/eikonal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "cvxint/error.hpp"

namespace cvxint {

namespace {

constexpr double kSigmaTol = 1e-9;

void axpy(Vec& y, double s, std::span<const double> x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * x[i];
}

// Appends the normalized component of v orthogonal to `frame`; returns false if it vanishes.
bool gram_schmidt_push(std::vector<Vec>& frame, Vec v, double tol = 1e-12) {
  const double n0 = norm(v);
  if (n0 == 0.0) return false;
  for (int pass = 0; pass < 2; ++pass) {
    for (const Vec& f : frame) axpy(v, -dot(v, f), f);
  }
  const double n1 = norm(v);
  if (n1 <= tol * std::max(1.0, n0)) return false;
  for (double& x : v) x /= n1;
  frame.push_back(std::move(v));
  return true;
}

}  // namespace

Vec AffineBoundary::value(std::span<const double> x) const {
  Vec out = matvec(eta, x);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += gamma[i];
  return out;
}

EikonalEndpoints eikonal_endpoints(const Mat& eta, const Vec& a, const Vec& b) {
  if (a.size() != eta.rows() || b.size() != eta.cols()) fail(ErrorKind::ShapeMismatch, "a, b must match the shape of eta");
  if (norm(a) == 0.0) fail(ErrorKind::ZeroVector, "a must be nonzero");
  if (norm(b) == 0.0) fail(ErrorKind::ZeroVector, "b must be nonzero");
  if (!(hs_norm(eta) < 1.0)) fail(ErrorKind::InvalidArgument, "|eta| must be < 1");
  const Mat ab = outer(a, b);
  const double A = hs_dot(ab, ab);
  const double B = hs_dot(eta, ab);
  const double C = hs_dot(eta, eta) - 1.0;
  const double disc = std::sqrt(B * B - A * C);
  // Cancellation-free pair of roots: q/A and C/q.
  const double q = -(B + (B >= 0.0 ? disc : -disc));
  const double r1 = q / A;
  const double r2 = C / q;
  EikonalEndpoints e;
  e.s_plus = std::max(r1, r2);
  e.s_minus = std::min(r1, r2);
  e.eta_plus = eta + e.s_plus * ab;
  e.eta_minus = eta + e.s_minus * ab;
  return e;
}

EikonalGeometry::EikonalGeometry(const LinearConstraint& c, const Mat& eta, const Vec& a, const Vec& b,
                                 double epsilon)
    : c_(c), eta_(eta), ab_(outer(a, b)), ends_(eikonal_endpoints(eta, a, b)), epsilon_(epsilon) {}

EikonalGeometry EikonalGeometry::build(const LinearConstraint& c, const Mat& eta, const Vec& a, const Vec& b,
                                       double epsilon) {
  if (!eta.same_shape(c.L())) fail(ErrorKind::ShapeMismatch, "eta and L must have the same shape");
  if (!(epsilon > 0.0)) fail(ErrorKind::InvalidArgument, "epsilon must be positive");
  EikonalGeometry g(c, eta, a, b, epsilon);
  const double ab_norm = hs_norm(g.ab_);
  if (std::abs(apply_constraint(c.with_level(0.0), g.ab_)) > 1e-12 * ab_norm * std::max(1.0, c.L_norm())) {
    fail(ErrorKind::ConstraintViolated, "L(a⊗b) must vanish");
  }
  if (norm(matvec(c.L(), b)) <= 1e-12 * norm(b) * c.L_norm()) {
    fail(ErrorKind::DegenerateDirection, "Lb must be nonzero");
  }
  if (std::abs(apply_constraint(c, eta) - c.t()) > 1e-10 * std::max(1.0, c.L_norm())) {
    fail(ErrorKind::ConstraintViolated, "eta must lie on Sigma_t");
  }

  const std::size_t D = eta.size();
  g.lhat_ = scaled(c.L().entries(), 1.0 / c.L_norm());
  g.c0_ = scaled(g.lhat_, c.t() / c.L_norm());
  g.rho0_ = std::sqrt(std::max(0.0, 1.0 - dot(g.c0_, g.c0_)));
  g.dhat_ = scaled(g.ab_.entries(), 1.0 / ab_norm);

  double normal = 0.0, sigma = 0.0;
  g.coords(eta, normal, sigma, g.p_);

  std::vector<Vec> frame{g.lhat_};
  gram_schmidt_push(frame, g.dhat_);
  for (std::size_t k = 0; k < D && frame.size() < D; ++k) {
    if (gram_schmidt_push(frame, unit_vector(D, k), 1e-8)) g.basis_.push_back(frame.back());
  }

  const double gap = g.rho0_ - norm(g.p_);
  const double target = 0.99 * epsilon / 2.0;
  auto diam = [&](double al) { return std::max(g.cap_diameter(1, al), g.cap_diameter(-1, al)); };
  double lo = 0.0, hi = 0.999 * gap;
  if (diam(hi) < target) {
    g.alpha_ = hi;
  } else {
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (diam(mid) < target ? lo : hi) = mid;
    }
    g.alpha_ = lo;
  }
  if (!(g.alpha_ > 0.0)) fail(ErrorKind::NumericConvergence, "no admissible strip width for the caps");
  return g;
}

void EikonalGeometry::coords(const Mat& xi, double& normal, double& sigma, Vec& q) const {
  const auto v = xi.data();
  const double along = dot(v, lhat_);
  normal = along - c_.t() / c_.L_norm();
  q.assign(v.begin(), v.end());
  axpy(q, -along, lhat_);
  sigma = dot(q, dhat_);
  axpy(q, -sigma, dhat_);
}

double EikonalGeometry::line_distance(const Mat& xi) const {
  double normal = 0.0, sigma = 0.0;
  Vec q;
  coords(xi, normal, sigma, q);
  return norm(sub(q, p_));
}

double EikonalGeometry::boundary_margin(const Mat& xi) const {
  double normal = 0.0, sigma = 0.0;
  Vec q;
  coords(xi, normal, sigma, q);
  if (std::abs(normal) > kSigmaTol) return -std::abs(normal);
  const double ny = std::sqrt(sigma * sigma + dot(q, q));
  return std::min(rho0_ - ny, alpha_ - norm(sub(q, p_)));
}

bool EikonalGeometry::in_U(const Mat& xi) const { return boundary_margin(xi) > 0.0; }

double EikonalGeometry::cap_distance(const Mat& xi, int sign) const { return cap_distance_alpha(xi, sign, alpha_); }

double EikonalGeometry::cap_distance_alpha(const Mat& xi, int sign, double alpha) const {
  double normal = 0.0, sigma = 0.0;
  Vec q;
  coords(xi, normal, sigma, q);
  const double s = sign > 0 ? 1.0 : -1.0;
  const double nn = normal * normal;
  const double ny = std::sqrt(sigma * sigma + dot(q, q));
  const double pp = dot(p_, p_);

  if (basis_.empty()) {
    const double sc = s * std::sqrt(std::max(0.0, rho0_ * rho0_ - pp));
    const double d2 = (sc - sigma) * (sc - sigma) + dot(sub(q, p_), sub(q, p_));
    return std::sqrt(d2 + nn);
  }
  if (ny <= 1e-300) return std::sqrt(rho0_ * rho0_ + nn);

  // Radial projection onto the sphere; if it lands in the cap it is the nearest point.
  {
    const double k = rho0_ / ny;
    const double sr = sigma * k;
    double ld2 = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double d = q[i] * k - p_[i];
      ld2 += d * d;
    }
    if (s * sr > 0.0 && ld2 <= alpha * alpha) {
      const double d = ny - rho0_;
      return std::sqrt(d * d + nn);
    }
  }

  // Otherwise the nearest point lies on the cap boundary q = p + αw with |w| = 1.
  const Vec diff = sub(q, p_);
  std::vector<Vec> frame;
  gram_schmidt_push(frame, p_);
  gram_schmidt_push(frame, diff);
  for (std::size_t k = 0; k < basis_.size() && frame.size() < std::min<std::size_t>(3, basis_.size()); ++k) {
    gram_schmidt_push(frame, basis_[k], 1e-8);
  }
  const std::size_t dim = frame.size();
  std::array<double, 3> pu{}, du{};
  for (std::size_t i = 0; i < dim; ++i) {
    pu[i] = dot(p_, frame[i]);
    du[i] = dot(diff, frame[i]);
  }
  const double base = dot(diff, diff) + alpha * alpha;
  const double r2 = rho0_ * rho0_ - pp - alpha * alpha;
  auto f = [&](double phi, double r) {
    std::array<double, 3> c{};
    if (dim == 1) {
      c[0] = std::cos(phi) >= 0.0 ? 1.0 : -1.0;
    } else {
      c[0] = r * std::cos(phi);
      c[1] = r * std::sin(phi);
      if (dim >= 3) c[2] = std::sqrt(std::max(0.0, 1.0 - r * r));
    }
    double pw = 0.0, dw = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      pw += c[i] * pu[i];
      dw += c[i] * du[i];
    }
    const double sp = s * std::sqrt(std::max(0.0, r2 - 2.0 * alpha * pw));
    return (sp - sigma) * (sp - sigma) + base - 2.0 * alpha * dw;
  };

  const bool radial_free = dim >= 3;
  const int nphi = dim == 1 ? 2 : 64;
  const int nr = radial_free ? 9 : 1;
  double best = std::numeric_limits<double>::infinity(), bphi = 0.0, br = 1.0;
  for (int i = 0; i < nphi; ++i) {
    const double phi = 2.0 * std::numbers::pi * i / nphi;
    for (int j = 0; j < nr; ++j) {
      const double r = radial_free ? static_cast<double>(j) / (nr - 1) : 1.0;
      const double v = f(phi, r);
      if (v < best) {
        best = v;
        bphi = phi;
        br = r;
      }
    }
  }
  if (dim >= 2) {
    double hphi = 2.0 * std::numbers::pi / nphi, hr = radial_free ? 1.0 / (nr - 1) : 0.0;
    for (int it = 0; it < 200 && hphi > 1e-13; ++it) {
      bool moved = false;
      for (const auto& [dp, dr] : std::array<std::pair<double, double>, 4>{{{hphi, 0}, {-hphi, 0}, {0, hr}, {0, -hr}}}) {
        if (dp == 0.0 && dr == 0.0) continue;
        const double r = std::clamp(br + dr, 0.0, 1.0);
        const double v = f(bphi + dp, r);
        if (v < best) {
          best = v;
          bphi += dp;
          br = r;
          moved = true;
        }
      }
      if (!moved) {
        hphi *= 0.5;
        hr *= 0.5;
      }
    }
  }
  return std::sqrt(std::max(0.0, best) + nn);
}

double EikonalGeometry::dist_to_endpoints(const Mat& xi) const {
  return std::min(hs_norm(xi - ends_.eta_plus), hs_norm(xi - ends_.eta_minus));
}

double EikonalGeometry::cap_diameter(int sign, double alpha) const {
  const double s = sign > 0 ? 1.0 : -1.0;
  std::vector<Vec> pts;
  auto add_point = [&](const Vec& w) {
    Vec qv = p_;
    axpy(qv, alpha, w);
    const double sg = s * std::sqrt(std::max(0.0, rho0_ * rho0_ - dot(qv, qv)));
    axpy(qv, sg, dhat_);
    pts.push_back(std::move(qv));
  };
  add_point(Vec(p_.size(), 0.0));
  const std::size_t k = std::min<std::size_t>(3, basis_.size());
  if (k == 1) {
    add_point(basis_[0]);
    add_point(scaled(basis_[0], -1.0));
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      for (int t = 0; t < 64; ++t) {
        const double phi = 2.0 * std::numbers::pi * t / 64.0;
        Vec w = scaled(basis_[i], std::cos(phi));
        axpy(w, std::sin(phi), basis_[j]);
        add_point(w);
      }
    }
  }
  double d = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) d = std::max(d, norm(sub(pts[i], pts[j])));
  }
  return d;
}

std::optional<double> EikonalGeometry::shoot(const Mat& xi, int sign, double d, int sign_set) const {
  double normal = 0.0, sigma = 0.0;
  Vec q;
  coords(xi, normal, sigma, q);
  if (std::abs(normal) > kSigmaTol) return std::nullopt;
  const double qq = dot(q, q);
  if (qq >= rho0_ * rho0_) return std::nullopt;
  auto dist = [&](const Mat& x) { return sign_set == 0 ? dist_to_K(x) : cap_distance(x, sign_set); };
  if (!(dist(xi) > d)) return std::nullopt;
  const double abn = hs_norm(ab_);
  const double s = sign > 0 ? 1.0 : -1.0;
  // Exit through the sphere: (σ + s·|ab|)² + |q|² = ρ0².
  const double smax = (-sigma + s * std::sqrt(rho0_ * rho0_ - qq)) / abn;
  if (!(s * smax > 0.0)) return std::nullopt;
  if (!(dist(xi + smax * ab_) < d)) return std::nullopt;
  double lo = 0.0, hi = smax;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (dist(xi + mid * ab_) > d ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

std::optional<Laminate> split_to(const Mat& xi, const Mat& ab, double sp, double sm) {
  if (!(sp > 0.0 && sm < 0.0)) return std::nullopt;
  const double lam = -sm / (sp - sm);
  if (!(lam > 0.0 && lam < 1.0)) return std::nullopt;
  return Laminate::dirac(xi).split(0, xi + sp * ab, xi + sm * ab, lam);
}

}  // namespace

EikonalInApprox eikonal_in_approx(const Mat& eta, const Vec& a, const Vec& b, const LinearConstraint& c,
                                  double epsilon, std::size_t J) {
  if (!is_injective_map(c)) {
    fail(ErrorKind::NonInjective, "the in-approximation route needs an injective L; use baire_refine");
  }
  auto geom = std::make_shared<const EikonalGeometry>(EikonalGeometry::build(c, eta, a, b, epsilon));
  return eikonal_in_approx(std::move(geom), J);
}

EikonalInApprox eikonal_in_approx(std::shared_ptr<const EikonalGeometry> geom, std::size_t J) {
  if (J == 0) fail(ErrorKind::InvalidArgument, "J must be positive");
  if (!is_injective_map(geom->constraint())) {
    fail(ErrorKind::NonInjective, "the in-approximation route needs an injective L; use baire_refine");
  }
  const double d_eta = geom->dist_to_K(geom->eta());
  if (!(d_eta > 0.0)) fail(ErrorKind::InvalidArgument, "eta lies on K");
  int k0 = 1;
  while (!(d_eta > 1.0 / k0 && 1.0 / (k0 + 2) <= geom->epsilon() / 2.0)) ++k0;

  EikonalInApprox out;
  out.k0 = k0;
  out.geometry = geom;
  out.approx.bound_M = 1.0;
  out.approx.limit_distance = [geom](const Mat& xi) { return geom->dist_to_K(xi); };

  const EikonalGeometry* g = geom.get();
  {
    const double lo = 1.0 / k0;
    TargetSpec u1;
    u1.name = "U_1";
    u1.contains = [geom, lo](const Mat& xi) { return geom->in_U(xi) && geom->dist_to_K(xi) > lo; };
    u1.boundary_margin = [geom, lo](const Mat& xi) {
      return std::min(geom->boundary_margin(xi), geom->dist_to_K(xi) - lo);
    };
    // Nothing is pushed away from K, so points outside U_1 stay there.
    u1.laminate_oracle = [](const Mat&, double) -> std::optional<Laminate> { return std::nullopt; };
    out.approx.sets.push_back(std::move(u1));
  }
  for (std::size_t k = 2; k <= J; ++k) {
    const double lo = 1.0 / static_cast<double>(k0 + k + 1);
    const double hi = 1.0 / static_cast<double>(k0 + k);
    const double mid = 0.5 * (lo + hi);
    TargetSpec uk;
    uk.name = "U_" + std::to_string(k);
    uk.contains = [geom, lo, hi](const Mat& xi) {
      if (!geom->in_U(xi)) return false;
      const double d = geom->dist_to_K(xi);
      return d > lo && d < hi;
    };
    uk.boundary_margin = [geom, lo, hi](const Mat& xi) {
      const double d = geom->dist_to_K(xi);
      return std::min({geom->boundary_margin(xi), d - lo, hi - d});
    };
    uk.laminate_oracle = [g, mid, geom](const Mat& xi, double) -> std::optional<Laminate> {
      (void)geom;
      if (!g->in_U(xi)) return std::nullopt;
      const auto sp = g->shoot(xi, 1, mid, 0);
      const auto sm = g->shoot(xi, -1, mid, 0);
      if (!sp || !sm) return std::nullopt;
      return split_to(xi, g->direction(), *sp, *sm);
    };
    out.approx.sets.push_back(std::move(uk));
  }
  return out;
}

Json BaireStats::to_json() const {
  Json j;
  j["delta"] = delta;
  j["theta"] = theta;
  j["budget"] = budget;
  j["selected"] = selected;
  j["mean_distance_before"] = mean_distance_before;
  j["mean_distance_after"] = mean_distance_after;
  j["admissible_fraction"] = admissible_fraction;
  j["refine"] = refine.to_json();
  return j;
}

namespace {

double mean_distance(const GradientField& f, const EikonalGeometry& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.node_count(); ++i) s += g.dist_to_K(f.grad(i));
  return f.node_count() ? s / static_cast<double>(f.node_count()) : 0.0;
}

}  // namespace

BaireResult baire_refine(const GradientField& field, double delta, double theta, const EikonalGeometry& geom,
                         const RefineOptions& opt) {
  if (!(delta > 0.0) || !(theta > 0.0)) fail(ErrorKind::InvalidArgument, "delta and theta must be positive");
  const double eps_room = (geom.epsilon() / 2.0 - field.construction().sup_bound()) / 2.0;
  if (!(eps_room > 0.0)) fail(ErrorKind::Infeasible, "field already uses the whole admissible sup budget");
  const double d8 = delta / 8.0;
  const EikonalGeometry* g = &geom;

  TargetSpec spec;
  spec.name = "A_delta";
  spec.contains = [g, d8](const Mat& xi) { return g->dist_to_K(xi) <= d8 * (1.0 + 1e-9); };
  spec.boundary_margin = [g, d8](const Mat& xi) { return std::min(g->boundary_margin(xi), d8 - g->dist_to_K(xi)); };
  spec.laminate_oracle = [g, d8](const Mat& xi, double) -> std::optional<Laminate> {
    if (!g->in_U(xi)) return std::nullopt;
    const auto sp = g->shoot(xi, 1, d8, 1);
    const auto sm = g->shoot(xi, -1, d8, -1);
    if (!sp || !sm) return std::nullopt;
    return split_to(xi, g->direction(), *sp, *sm);
  };

  BaireResult out{field, {}};
  out.stats.delta = delta;
  out.stats.theta = theta;
  out.stats.budget = 0.99 * std::min(theta, eps_room);
  out.stats.mean_distance_before = mean_distance(field, geom);
  for (std::size_t i = 0; i < field.node_count(); ++i) {
    if (!spec.contains(field.grad(i))) ++out.stats.selected;
  }
  RefineResult r = refine_field(field, spec, out.stats.budget, opt);
  out.field = std::move(r.field);
  out.stats.refine = r.stats;
  out.stats.mean_distance_after = mean_distance(out.field, geom);
  out.stats.admissible_fraction = out.field.fraction([g](const Mat& xi) { return g->in_U(xi); });
  return out;
}

}  // namespace cvxint
