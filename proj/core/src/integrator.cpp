#include "cvxint/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <thread>
#include <unordered_map>

#include "cvxint/error.hpp"

namespace cvxint {

BoundaryMap BoundaryMap::affine(Mat eta, Vec gamma) {
  if (gamma.size() != eta.rows()) fail(ErrorKind::ShapeMismatch, "gamma length differs from eta rows");
  BoundaryMap b;
  b.m_ = eta.rows();
  b.n_ = eta.cols();
  b.eta_ = std::move(eta);
  b.gamma_ = std::move(gamma);
  return b;
}

BoundaryMap BoundaryMap::smooth(std::size_t m, std::size_t n, Fn fn) {
  if (!fn) fail(ErrorKind::InvalidArgument, "smooth boundary map needs a callback");
  BoundaryMap b;
  b.m_ = m;
  b.n_ = n;
  b.fn_ = std::move(fn);
  return b;
}

void BoundaryMap::eval(std::span<const double> x, std::span<double> u, Mat& grad) const {
  if (fn_) {
    fn_(x, u, grad);
    return;
  }
  for (std::size_t i = 0; i < m_; ++i) {
    double s = gamma_[i];
    for (std::size_t j = 0; j < n_; ++j) {
      s += eta_(i, j) * x[j];
      grad(i, j) = eta_(i, j);
    }
    u[i] = s;
  }
}

Mat BoundaryMap::gradient(std::span<const double> x) const {
  Vec u(m_);
  Mat g(m_, n_);
  eval(x, u, g);
  return g;
}

std::size_t Construction::root_index(std::span<const double> x, Vec& local) const {
  std::size_t idx = 0;
  for (std::size_t j = 0; j < domain.dim(); ++j) {
    const double rel = x[j] - domain.lo[j];
    const double top = static_cast<double>(root_counts[j] - 1);
    const double k = std::clamp(std::floor(rel / root_extent[j]), 0.0, top);
    local[j] = rel - k * root_extent[j];
    idx = idx * root_counts[j] + static_cast<std::size_t>(k);
  }
  return idx;
}

double Construction::sup_bound() const {
  double b = 0.0;
  for (const auto& r : roots) b = std::max(b, r->sup_bound());
  return b;
}

IterationSchedule IterationSchedule::make(double epsilon, std::size_t stages, double delta1) {
  if (!(epsilon > 0.0)) fail(ErrorKind::InvalidArgument, "schedule epsilon must be positive");
  if (stages == 0) fail(ErrorKind::InvalidArgument, "schedule needs at least one stage");
  IterationSchedule s;
  s.epsilon = epsilon;
  s.delta.resize(stages);
  s.eps.resize(stages);
  for (std::size_t j = 1; j <= stages; ++j) s.eps[j - 1] = std::ldexp(1.0, -static_cast<int>(j + 1));
  s.delta[0] = delta1;
  for (std::size_t j = 2; j <= stages; ++j) {
    s.delta[j - 1] = std::min(std::ldexp(epsilon, -static_cast<int>(j)), s.delta[j - 2] * s.eps[j - 2] / 2.0);
  }
  return s;
}

bool IterationSchedule::valid() const {
  for (std::size_t j = 1; j <= eps.size(); ++j) {
    if (!(eps[j - 1] < std::ldexp(1.0, -static_cast<int>(j)))) return false;
    if (j >= 2 && !(eps[j - 1] < eps[j - 2])) return false;
    if (j >= 2) {
      const double want = std::min(std::ldexp(epsilon, -static_cast<int>(j)), delta[j - 2] * eps[j - 2] / 2.0);
      if (delta[j - 1] != want) return false;
    }
  }
  return true;
}

namespace {

std::vector<std::size_t> node_index(std::size_t i, std::size_t n, std::size_t res) {
  std::vector<std::size_t> idx(n);
  for (std::size_t j = n; j-- > 0;) {
    idx[j] = i % (res + 1);
    i /= res + 1;
  }
  return idx;
}

double oscillation_of(const BoundaryMap& v, const Box& cube) {
  const std::size_t n = cube.dim();
  Vec c(n);
  for (std::size_t j = 0; j < n; ++j) c[j] = 0.5 * (cube.lo[j] + cube.hi[j]);
  const Mat gc = v.gradient(c);
  double worst = 0.0;
  std::size_t total = 1;
  for (std::size_t j = 0; j < n; ++j) total *= 3;
  Vec x(n);
  for (std::size_t s = 0; s < total; ++s) {
    std::size_t r = s;
    for (std::size_t j = 0; j < n; ++j) {
      x[j] = cube.lo[j] + 0.5 * static_cast<double>(r % 3) * cube.extent(j);
      r /= 3;
    }
    worst = std::max(worst, hs_norm(v.gradient(x) - gc));
  }
  return 2.0 * worst;
}

template <class F>
void parallel_for(std::size_t count, std::size_t threads, F&& body) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    body(std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (count + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk, hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

GradientField GradientField::from_boundary(const Box& domain, std::size_t resolution, const LinearConstraint& c,
                                           const BoundaryMap& v, const SampleOptions& opt, double oscillation_tol,
                                           int max_dyadic_depth) {
  if (!domain.valid()) fail(ErrorKind::InvalidArgument, "invalid domain box");
  const std::size_t n = domain.dim();
  if (v.n() != n || c.cols() != n || c.rows() != v.m()) fail(ErrorKind::ShapeMismatch, "field dimensions disagree");
  if (resolution == 0) fail(ErrorKind::InvalidArgument, "grid resolution must be positive");
  if (n > 8) fail(ErrorKind::InvalidArgument, "at most 8 space dimensions are supported");
  auto cons = std::make_shared<Construction>();
  cons->domain = domain;
  cons->base = v;
  GradientField f;
  f.c_ = c;
  f.res_ = resolution;
  f.m_ = v.m();
  f.n_ = n;
  int depth = 0;
  if (!v.is_affine()) {
    // Least dyadic depth whose cubes all have gradient oscillation below the tolerance.
    for (depth = 0; depth <= max_dyadic_depth; ++depth) {
      const std::size_t k = std::size_t{1} << depth;
      std::size_t total = 1;
      for (std::size_t j = 0; j < n; ++j) total *= k;
      double worst = 0.0;
      for (std::size_t s = 0; s < total; ++s) {
        Box cube{Vec(n), Vec(n)};
        std::size_t r = s;
        for (std::size_t j = n; j-- > 0;) {
          const double e = domain.extent(j) / static_cast<double>(k);
          cube.lo[j] = domain.lo[j] + e * static_cast<double>(r % k);
          cube.hi[j] = cube.lo[j] + e;
          r /= k;
        }
        worst = std::max(worst, oscillation_of(v, cube));
      }
      if (worst < oscillation_tol) break;
    }
    if (depth > max_dyadic_depth) {
      depth = max_dyadic_depth;
      f.root_depth_capped_ = true;
    }
  }
  f.root_depth_ = depth;
  const std::size_t k = std::size_t{1} << depth;
  cons->root_counts.assign(n, k);
  cons->root_extent.resize(n);
  for (std::size_t j = 0; j < n; ++j) cons->root_extent[j] = domain.extent(j) / static_cast<double>(k);
  std::size_t total = 1;
  for (std::size_t j = 0; j < n; ++j) total *= k;
  for (std::size_t s = 0; s < total; ++s) {
    Vec center(n);
    std::size_t r = s;
    for (std::size_t j = n; j-- > 0;) {
      center[j] = domain.lo[j] + cons->root_extent[j] * (static_cast<double>(r % k) + 0.5);
      r /= k;
    }
    const Mat g = v.is_affine() ? v.eta() : v.gradient(center);
    cons->roots.push_back(Realization::leaf(cons->root_extent, g, 0, LeafRole::Base));
  }
  f.cons_ = std::move(cons);
  f.sample(opt);
  return f;
}

GradientField GradientField::with_construction(std::shared_ptr<const Construction> cons,
                                               const SampleOptions& opt) const {
  GradientField f;
  f.cons_ = std::move(cons);
  f.c_ = c_;
  f.res_ = res_;
  f.m_ = m_;
  f.n_ = n_;
  f.root_depth_ = root_depth_;
  f.root_depth_capped_ = root_depth_capped_;
  f.sample(opt);
  return f;
}

Vec GradientField::point(std::size_t i) const {
  const auto idx = node_index(i, n_, res_);
  const Box& d = cons_->domain;
  Vec x(n_);
  for (std::size_t j = 0; j < n_; ++j) {
    x[j] = idx[j] == res_ ? d.hi[j]
                          : d.lo[j] + d.extent(j) * static_cast<double>(idx[j]) / static_cast<double>(res_);
  }
  return x;
}

Mat GradientField::grad(std::size_t i) const {
  const auto d = grad_data(i);
  return Mat(m_, n_, std::vector<double>(d.begin(), d.end()));
}

void GradientField::sample(const SampleOptions& opt) {
  std::size_t count = 1;
  for (std::size_t j = 0; j < n_; ++j) count *= res_ + 1;
  u_.assign(count * m_, 0.0);
  g_.assign(count * m_ * n_, 0.0);
  stage_.assign(count, 0);
  exceptional_.assign(count, 0);
  boundary_.assign(count, 0);
  in_target_.assign(count, 0);
  const Construction& cons = *cons_;
  parallel_for(count, opt.threads, [&](std::size_t lo, std::size_t hi) {
    Mat grad(m_, n_);
    Vec local(n_);
    for (std::size_t i = lo; i < hi; ++i) {
      const Vec x = point(i);
      const auto idx = node_index(i, n_, res_);
      std::span<double> u(u_.data() + i * m_, m_);
      cons.base.eval(x, u, grad);
      const std::size_t r = cons.root_index(x, local);
      const RealizationHit hit = accumulate(*cons.roots[r], local, u, grad);
      std::copy(grad.data().begin(), grad.data().end(), g_.begin() + static_cast<std::ptrdiff_t>(i * m_ * n_));
      stage_[i] = hit.leaf ? hit.leaf->stage() : hit.owner->stage();
      exceptional_[i] = hit.leaf ? 0 : 1;
      boundary_[i] = std::any_of(idx.begin(), idx.end(), [&](std::size_t q) { return q == 0 || q == res_; });
    }
  });
}

double GradientField::mark_targets(const std::function<bool(const Mat&)>& contains) {
  for (std::size_t i = 0; i < node_count(); ++i) in_target_[i] = contains(grad(i)) ? 1 : 0;
  return target_fraction();
}

double GradientField::target_fraction() const {
  std::size_t c = 0;
  for (auto f : in_target_) c += f;
  return static_cast<double>(c) / static_cast<double>(node_count());
}

double GradientField::fraction(const std::function<bool(const Mat&)>& pred) const {
  std::size_t c = 0;
  for (std::size_t i = 0; i < node_count(); ++i) c += pred(grad(i)) ? 1 : 0;
  return static_cast<double>(c) / static_cast<double>(node_count());
}

double GradientField::max_constraint_residual() const {
  double worst = 0.0;
  const auto& L = c_.L().entries();
  for (std::size_t i = 0; i < node_count(); ++i) {
    const auto g = grad_data(i);
    double s = 0.0;
    for (std::size_t q = 0; q < g.size(); ++q) s += L[q] * g[q];
    worst = std::max(worst, std::abs(s - c_.t()));
  }
  return worst;
}

namespace {

bool resolvable_leaf(const Vec& extent, const RealizeOptions& ro) {
  const double thinnest = *std::min_element(extent.begin(), extent.end());
  return thinnest * std::min(ro.geometry.margin, ro.geometry.cutoff_gap) >= ro.min_feature;
}

double distance_to_base(const GradientField& f, std::size_t i, Vec& v, Mat& g) {
  const Vec x = f.point(i);
  f.construction().base.eval(x, v, g);
  const auto u = f.u(i);
  double s = 0.0;
  for (std::size_t q = 0; q < u.size(); ++q) s += (u[q] - v[q]) * (u[q] - v[q]);
  return std::sqrt(s);
}

}  // namespace

double GradientField::boundary_trace_error() const {
  Vec v(m_);
  Mat g(m_, n_);
  double worst = 0.0;
  for (std::size_t i = 0; i < node_count(); ++i)
    if (boundary_[i]) worst = std::max(worst, distance_to_base(*this, i, v, g));
  return worst;
}

double GradientField::sup_distance_to_base() const {
  Vec v(m_);
  Mat g(m_, n_);
  double worst = 0.0;
  for (std::size_t i = 0; i < node_count(); ++i) worst = std::max(worst, distance_to_base(*this, i, v, g));
  return worst;
}

double GradientField::sup_distance(const GradientField& other) const {
  if (other.node_count() != node_count() || other.m_ != m_) fail(ErrorKind::ShapeMismatch, "fields differ in shape");
  double worst = 0.0;
  for (std::size_t i = 0; i < node_count(); ++i) {
    const auto a = u(i), b = other.u(i);
    double s = 0.0;
    for (std::size_t q = 0; q < m_; ++q) s += (a[q] - b[q]) * (a[q] - b[q]);
    worst = std::max(worst, std::sqrt(s));
  }
  return worst;
}

double GradientField::exceptional_fraction() const {
  std::size_t c = 0;
  for (auto e : exceptional_) c += e;
  return static_cast<double>(c) / static_cast<double>(node_count());
}

double GradientField::max_gradient_norm() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < node_count(); ++i) worst = std::max(worst, norm(grad_data(i)));
  return worst;
}

void GradientField::write_csv(std::ostream& os) const {
  for (std::size_t j = 0; j < n_; ++j) os << 'x' << j + 1 << ',';
  for (std::size_t i = 0; i < m_; ++i) os << 'u' << i + 1 << ',';
  for (std::size_t i = 0; i < m_; ++i)
    for (std::size_t j = 0; j < n_; ++j) os << 'g' << i + 1 << j + 1 << ',';
  os << "constraint_residual,stage,in_target\n";
  const auto& L = c_.L().entries();
  std::string line;
  for (std::size_t i = 0; i < node_count(); ++i) {
    line.clear();
    for (double x : point(i)) line += format_double(x) + ',';
    for (double v : u(i)) line += format_double(v) + ',';
    const auto g = grad_data(i);
    double s = 0.0;
    for (std::size_t q = 0; q < g.size(); ++q) {
      line += format_double(g[q]) + ',';
      s += L[q] * g[q];
    }
    line += format_double(std::abs(s - c_.t())) + ',' + std::to_string(stage_[i]) + ',' +
            (in_target_[i] ? "1" : "0") + '\n';
    os << line;
  }
}

Json RefineStats::to_json() const {
  Json j;
  j["leaves_seen"] = leaves_seen;
  j["leaves_refined"] = leaves_refined;
  j["oracle_failures"] = oracle_failures;
  j["leaves_unresolvable"] = leaves_unresolvable;
  j["partial"] = partial;
  j["unsupported_direction"] = unsupported_direction;
  j["budget_infeasible"] = budget_infeasible;
  j["fraction_before"] = fraction_before;
  j["fraction_in_target"] = fraction_after;
  j["budget"] = budget;
  j["sup_change"] = sup_change;
  j["sup_change_bound"] = sup_change_bound;
  j["budget_honored"] = budget_honored();
  j["max_residual"] = max_residual;
  j["boundary_trace_error"] = boundary_trace_error;
  j["exceptional_fraction"] = exceptional_fraction;
  return j;
}

RefineResult refine_field(const GradientField& field, const TargetSpec& target, double budget,
                          const RefineOptions& opt) {
  if (!(budget > 0.0)) fail(ErrorKind::InvalidArgument, "refinement budget must be positive");
  const Construction& old = field.construction();
  const int stage = old.stages + 1;
  RefineStats st;
  st.budget = budget;
  st.fraction_before = field.fraction(target.contains);
  BuildFlags flags;
  std::unordered_map<const Realization*, RealizationPtr> memo;
  // Bands thinner than this are lost to rounding when node coordinates are reduced into nested boxes.
  double coord_scale = 0.0;
  for (std::size_t j = 0; j < old.domain.dim(); ++j)
    coord_scale = std::max({coord_scale, std::abs(old.domain.lo[j]), std::abs(old.domain.hi[j])});
  const double min_feature = 1e-13 * coord_scale;

  auto refine_leaf = [&](const RealizationPtr& leaf, bool align) -> RealizationPtr {
    ++st.leaves_seen;
    const Mat& xi = leaf->nominal();
    if (target.contains(xi)) return leaf;
    std::optional<Laminate> lam = target.laminate_oracle(xi, opt.oracle_epsilon);
    if (!lam || hs_norm(lam->barycenter() - xi) > 1e-9 * std::max(1.0, hs_norm(xi))) {
      ++st.oracle_failures;
      return leaf;
    }
    if (lam->order() == 0) return leaf;
    RealizeOptions ro = opt.realize;
    if (opt.exceptional_fraction > 0.0) {
      const int levels = std::max(1, lam->tree().depth());
      ro.geometry = PatchGeometry::for_exceptional_fraction(opt.exceptional_fraction / levels, field.n());
    }
    if (ro.min_feature == 0.0) ro.min_feature = min_feature;
    if (!resolvable_leaf(leaf->extent(), ro)) {
      ++st.leaves_unresolvable;
      return leaf;
    }
    RealizationPtr r = realize_tree(field.constraint(), *lam, leaf->extent(), budget, stage, align, ro, flags);
    if (!r) return leaf;
    ++st.leaves_refined;
    st.sup_change_bound = std::max(st.sup_change_bound, r->sup_bound());
    return r;
  };

  std::function<RealizationPtr(const RealizationPtr&)> transform = [&](const RealizationPtr& node) -> RealizationPtr {
    if (auto it = memo.find(node.get()); it != memo.end()) return it->second;
    RealizationPtr out = node;
    switch (node->kind()) {
      case Realization::Kind::Leaf:
        out = refine_leaf(node, false);
        break;
      case Realization::Kind::Tiling: {
        RealizationPtr t = transform(node->tile());
        if (t != node->tile()) out = Realization::tiling(node->extent(), node->counts(), std::move(t));
        break;
      }
      case Realization::Kind::Split: {
        std::vector<RealizationPtr> ch;
        bool changed = false;
        for (const auto& c : node->children()) {
          ch.push_back(transform(c));
          changed |= ch.back() != c;
        }
        if (changed) out = Realization::split(node->extent(), node->patch_ptr(), node->nominal(), node->stage(), std::move(ch));
        break;
      }
    }
    memo.emplace(node.get(), out);
    return out;
  };

  auto cons = std::make_shared<Construction>(old);
  cons->stages = stage;
  for (auto& root : cons->roots) {
    if (root->kind() == Realization::Kind::Leaf) {
      auto it = memo.find(root.get());
      if (it == memo.end()) it = memo.emplace(root.get(), refine_leaf(root, true)).first;
      root = it->second;
    } else {
      root = transform(root);
    }
  }
  st.partial = flags.partial;
  st.unsupported_direction = flags.unsupported_direction;
  st.budget_infeasible = flags.budget_infeasible;
  GradientField next = field.with_construction(std::move(cons), opt.sample);
  st.fraction_after = next.mark_targets(target.contains);
  st.sup_change = next.sup_distance(field);
  st.max_residual = next.max_constraint_residual();
  st.boundary_trace_error = next.boundary_trace_error();
  st.exceptional_fraction = next.exceptional_fraction();
  return {std::move(next), st};
}

Json RealizeStats::to_json() const {
  Json j;
  j["weights"] = cvxint::to_json(weights);
  j["expected_fractions"] = cvxint::to_json(expected);
  j["measured_fractions"] = cvxint::to_json(measured);
  j["expected_exceptional"] = expected_exceptional;
  j["measured_exceptional"] = measured_exceptional;
  j["parent_fraction"] = parent_fraction;
  j["sup_bound"] = sup_bound;
  j["sup_measured"] = sup_measured;
  j["max_residual"] = max_residual;
  j["boundary_max"] = boundary_max;
  j["partial"] = flags.partial;
  j["unsupported_direction"] = flags.unsupported_direction;
  j["samples_per_axis"] = samples_per_axis;
  return j;
}

RealizeResult realize_laminate(const Mat& xi, const Laminate& nu, const Box& cube, const LinearConstraint& c,
                               double epsilon, int depth, const RealizeOptions& opt, std::size_t samples_per_axis,
                               double match_tol) {
  if (!cube.valid() || cube.dim() != c.cols()) fail(ErrorKind::ShapeMismatch, "cube does not match the constraint");
  if (hs_norm(nu.barycenter() - xi) > 1e-9 * std::max(1.0, hs_norm(xi))) {
    fail(ErrorKind::InvalidArgument, "laminate barycenter differs from xi");
  }
  if (!(epsilon > 0.0)) fail(ErrorKind::InvalidArgument, "epsilon must be positive");
  RealizeOptions o = opt;
  o.max_depth = depth;
  RealizeResult res;
  RealizeStats& st = res.stats;
  const Vec extent = cube.extents();
  // Strict inequality sup|φ| < ε.
  res.root = realize_tree(c, nu, extent, epsilon * (1.0 - 1e-9), 1, false, o, st.flags);
  if (!res.root) fail(ErrorKind::Infeasible, "sup budget is below the resolvable tile size");
  const std::size_t atoms = nu.atoms().size();
  const VolumeFractions vf = volume_fractions(*res.root, atoms);
  st.expected = vf.atoms;
  st.expected_exceptional = vf.exceptional;
  st.parent_fraction = vf.parent;
  st.sup_bound = res.root->sup_bound();
  for (const auto& a : nu.atoms()) st.weights.push_back(a.weight);

  const std::size_t n = c.cols(), m = c.rows();
  const double cap = std::floor(std::pow(262144.0, 1.0 / static_cast<double>(n)));
  const std::size_t S = std::max<std::size_t>(2, std::min<std::size_t>(samples_per_axis, static_cast<std::size_t>(cap)));
  st.samples_per_axis = S;
  st.measured.assign(atoms, 0.0);
  std::size_t total = 1;
  for (std::size_t j = 0; j < n; ++j) total *= S + 1;
  std::size_t centers = 0;
  Vec y(n), val(m);
  Mat g(m, n);
  for (std::size_t s = 0; s < total; ++s) {
    std::size_t r = s;
    bool boundary = false, center_ok = true;
    std::vector<std::size_t> idx(n);
    for (std::size_t j = n; j-- > 0;) {
      idx[j] = r % (S + 1);
      r /= S + 1;
    }
    // Node pass for the boundary, cell-centre pass for the fractions.
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < n; ++j) {
        const double t = pass == 0 ? static_cast<double>(idx[j]) : static_cast<double>(idx[j]) + 0.5;
        y[j] = std::min(extent[j], extent[j] * t / static_cast<double>(S));
        if (pass == 0 && (idx[j] == 0 || idx[j] == S)) boundary = true;
        if (pass == 1 && idx[j] == S) center_ok = false;
      }
      if (pass == 0 && !boundary) continue;
      if (pass == 1 && !center_ok) continue;
      std::fill(val.begin(), val.end(), 0.0);
      std::fill(g.data().begin(), g.data().end(), 0.0);
      const RealizationHit hit = accumulate(*res.root, y, val, g);
      const double phi = norm(val);
      st.sup_measured = std::max(st.sup_measured, phi);
      st.max_residual = std::max(st.max_residual, std::abs(hs_dot(c.L(), g)));
      if (pass == 0) {
        st.boundary_max = std::max(st.boundary_max, phi);
        continue;
      }
      ++centers;
      if (!hit.leaf) {
        st.measured_exceptional += 1.0;
        continue;
      }
      const Mat grad = xi + g;
      for (std::size_t a = 0; a < atoms; ++a) {
        const Mat& target = nu.atoms()[a].matrix;
        if (hs_norm(grad - target) < match_tol * std::max(1.0, hs_norm(target))) {
          st.measured[a] += 1.0;
          break;
        }
      }
    }
  }
  for (double& f : st.measured) f /= static_cast<double>(centers);
  st.measured_exceptional /= static_cast<double>(centers);
  return res;
}

Json SolveReport::to_json() const {
  Json j;
  Json arr = Json::array();
  for (const auto& s : stages) arr.push_back(s.to_json());
  j["stages"] = std::move(arr);
  Json summary;
  summary["fractions"] = cvxint::to_json(fractions);
  summary["sup_change_total"] = sup_change_total;
  summary["sup_distance"] = sup_distance;
  summary["max_residual"] = max_residual;
  summary["boundary_trace_error"] = boundary_trace_error;
  summary["budgets_honored"] = budgets_honored;
  summary["stopped_early"] = stopped_early;
  j["summary"] = std::move(summary);
  return j;
}

SolveResult solve_open(const GradientField& v, const TargetSpec& target, double epsilon, int stages,
                       const RefineOptions& opt) {
  if (stages < 1) fail(ErrorKind::InvalidArgument, "solve_open needs at least one stage");
  if (!(epsilon > 0.0)) fail(ErrorKind::InvalidArgument, "epsilon must be positive");
  SolveReport rep;
  rep.fractions.push_back(v.fraction(target.contains));
  GradientField cur = v;
  // Bands and margins never get refined later, so stage k may leave at most ε^stages·2^{-k} of them.
  const double band_total = std::pow(std::min(epsilon, 0.5), stages);
  for (int k = 1; k <= stages; ++k) {
    const double budget = std::ldexp(epsilon, -(k + 1));
    RefineOptions stage_opt = opt;
    if (stage_opt.exceptional_fraction == 0.0) stage_opt.exceptional_fraction = std::ldexp(band_total, -k);
    RefineResult r = refine_field(cur, target, budget, stage_opt);
    rep.budgets_honored = rep.budgets_honored && r.stats.budget_honored();
    rep.sup_change_total += r.stats.sup_change;
    rep.fractions.push_back(r.stats.fraction_after);
    const bool stop = r.stats.budget_infeasible;
    rep.stages.push_back(r.stats);
    cur = std::move(r.field);
    if (stop) {
      rep.stopped_early = true;
      break;
    }
  }
  rep.sup_distance = cur.sup_distance_to_base();
  rep.max_residual = cur.max_constraint_residual();
  rep.boundary_trace_error = cur.boundary_trace_error();
  return {std::move(cur), std::move(rep)};
}

Json InApproxStage::to_json() const {
  Json jj;
  jj["j"] = j;
  jj["delta"] = delta;
  jj["fraction_in_target"] = fraction;
  jj["sup_change"] = sup_change;
  jj["cumulative_sup_change"] = cumulative_sup_change;
  jj["median_limit_distance"] = median_limit_distance;
  jj["mean_limit_distance"] = mean_limit_distance;
  if (j > 1) jj["refine"] = refine.to_json();
  return jj;
}

Json InApproxReport::to_json() const {
  Json j;
  Json arr = Json::array();
  for (const auto& s : stages) arr.push_back(s.to_json());
  j["stages"] = std::move(arr);
  Json summary;
  summary["cumulative_sup_change"] = cumulative_sup_change;
  summary["sup_distance"] = sup_distance;
  summary["max_residual"] = max_residual;
  summary["boundary_trace_error"] = boundary_trace_error;
  summary["budgets_honored"] = budgets_honored;
  summary["stopped_early"] = stopped_early;
  j["summary"] = std::move(summary);
  return j;
}

namespace {

void limit_stats(const GradientField& f, const InApproximation& approx, InApproxStage& s) {
  if (!approx.limit_distance) return;
  std::vector<double> d(f.node_count());
  double sum = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = approx.limit_distance(f.grad(i));
    sum += d[i];
  }
  s.mean_limit_distance = sum / static_cast<double>(d.size());
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  s.median_limit_distance = *mid;
}

}  // namespace

InApproxResult solve_in_approx(const GradientField& v, const InApproximation& approx,
                               const IterationSchedule& schedule, std::size_t jrun, const RefineOptions& opt) {
  if (jrun < 1 || jrun > approx.stage_count()) fail(ErrorKind::InvalidArgument, "jrun must lie in 1..stage_count");
  if (schedule.delta.size() < jrun) fail(ErrorKind::InvalidArgument, "schedule is shorter than jrun");
  InApproxReport rep;
  GradientField cur = v;
  InApproxStage first;
  first.j = 1;
  first.delta = schedule.delta[0];
  first.fraction = cur.mark_targets(approx.sets[0].contains);
  limit_stats(cur, approx, first);
  rep.stages.push_back(first);
  for (std::size_t j = 2; j <= jrun; ++j) {
    InApproxStage s;
    s.j = j;
    s.delta = schedule.delta[j - 1];
    RefineResult r = refine_field(cur, approx.sets[j - 1], s.delta, opt);
    s.fraction = r.stats.fraction_after;
    s.sup_change = r.stats.sup_change;
    rep.cumulative_sup_change += r.stats.sup_change;
    s.cumulative_sup_change = rep.cumulative_sup_change;
    s.refine = r.stats;
    rep.budgets_honored = rep.budgets_honored && r.stats.budget_honored();
    cur = std::move(r.field);
    limit_stats(cur, approx, s);
    rep.stages.push_back(s);
    if (r.stats.budget_infeasible) {
      rep.stopped_early = true;
      break;
    }
  }
  rep.budgets_honored = rep.budgets_honored && rep.cumulative_sup_change <= schedule.epsilon / 2.0;
  rep.sup_distance = cur.sup_distance_to_base();
  rep.max_residual = cur.max_constraint_residual();
  rep.boundary_trace_error = cur.boundary_trace_error();
  return {std::move(cur), std::move(rep)};
}

}  // namespace cvxint
