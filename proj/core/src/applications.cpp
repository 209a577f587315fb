#include "cvxint/applications.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cvxint/error.hpp"
#include "cvxint/laminates.hpp"

namespace cvxint {

Json to_json(const std::vector<HypothesisCheck>& checks) {
  Json arr = Json::array();
  for (const auto& h : checks) {
    Json j;
    j["name"] = h.name;
    j["required"] = h.required;
    j["pass"] = h.pass;
    j["value"] = h.value;
    arr.push_back(std::move(j));
  }
  return arr;
}

bool all_required_pass(const std::vector<HypothesisCheck>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const HypothesisCheck& h) { return !h.required || h.pass; });
}

std::string_view to_string(EikonalMethod m) { return m == EikonalMethod::InApprox ? "in_approx" : "baire"; }

std::vector<HypothesisCheck> eikonal_hypotheses(const EikonalProblem& p) {
  std::vector<HypothesisCheck> out;
  const Mat& eta = p.v.eta;
  const bool shapes = eta.same_shape(p.c.L()) && p.a.size() == eta.rows() && p.b.size() == eta.cols();
  out.push_back({"shapes_consistent", true, shapes, shapes ? 1.0 : 0.0});
  const double eta_norm = hs_norm(eta);
  out.push_back({"eta_norm_below_one", true, eta_norm < 1.0, eta_norm});
  const double an = norm(p.a), bn = norm(p.b);
  out.push_back({"a_nonzero", true, an > 0.0, an});
  out.push_back({"b_nonzero", true, bn > 0.0, bn});
  if (!shapes) return out;
  const double lb = norm(matvec(p.c.L(), p.b));
  out.push_back({"Lb_nonzero", true, lb > 1e-12 * bn * p.c.L_norm(), lb});
  const Mat ab = outer(p.a, p.b);
  const double lab = std::abs(apply_constraint(p.c.with_level(0.0), ab));
  out.push_back({"L_ab_zero", true, lab <= 1e-12 * hs_norm(ab) * std::max(1.0, p.c.L_norm()), lab});
  const double res = std::abs(apply_constraint(p.c, eta) - p.c.t());
  out.push_back({"eta_on_sigma_t", true, res <= 1e-10 * std::max(1.0, p.c.L_norm()), res});
  const bool inj = is_injective_map(p.c);
  out.push_back({"L_injective", p.method == EikonalMethod::InApprox, inj, inj ? 1.0 : 0.0});
  out.push_back({"epsilon_positive", true, p.epsilon > 0.0, p.epsilon});
  return out;
}

Json EikonalReport::to_json() const {
  Json j;
  j["method"] = std::string(to_string(method));
  j["hypotheses"] = cvxint::to_json(hypotheses);
  Json e;
  e["s_plus"] = endpoints.s_plus;
  e["s_minus"] = endpoints.s_minus;
  e["eta_plus"] = cvxint::to_json(endpoints.eta_plus);
  e["eta_minus"] = cvxint::to_json(endpoints.eta_minus);
  j["endpoints"] = std::move(e);
  j["alpha"] = alpha;
  j["k0"] = k0;
  j["jitter"] = jitter;
  j["tol_dist"] = tol_dist;
  j["input_unit_norm_fraction"] = input_unit_norm_fraction;
  j["unit_norm_fraction"] = unit_norm_fraction;
  j["endpoint_fraction"] = endpoint_fraction;
  j["mean_distance_to_K"] = mean_distance_to_K;
  j["max_constraint_residual"] = max_residual;
  j["boundary_trace_error"] = boundary_trace_error;
  j["sup_distance_to_boundary_map"] = sup_distance;
  j["budgets_honored"] = budgets_honored;
  j["stopped_early"] = stopped_early;
  j["stages"] = stages;
  return j;
}

namespace {

RefineOptions refine_options(std::size_t grid, unsigned seed, std::size_t threads) {
  RefineOptions opt;
  opt.realize.grid_hint = grid;
  opt.realize.jitter = seed % 16;
  opt.sample.threads = threads;
  return opt;
}

}  // namespace

EikonalSolution solve_eikonal(const EikonalProblem& p) {
  EikonalReport rep;
  rep.method = p.method;
  rep.hypotheses = eikonal_hypotheses(p);
  if (p.stages < 1) fail(ErrorKind::InvalidArgument, "at least one stage is required");
  if (p.grid < 1) fail(ErrorKind::InvalidArgument, "grid resolution must be positive");
  if (p.v.gamma.size() != p.v.eta.rows()) fail(ErrorKind::ShapeMismatch, "gamma must have m entries");
  if (p.domain.dim() != p.v.eta.cols()) fail(ErrorKind::ShapeMismatch, "domain dimension must equal n");
  if (p.method == EikonalMethod::InApprox && !is_injective_map(p.c)) {
    fail(ErrorKind::NonInjective, "the in-approximation route needs an injective L; use method baire");
  }
  // Throws with the matching error kind if a hypothesis fails.
  auto geom = std::make_shared<const EikonalGeometry>(EikonalGeometry::build(p.c, p.v.eta, p.a, p.b, p.epsilon));
  rep.endpoints = geom->endpoints();
  rep.alpha = geom->alpha();
  rep.tol_dist = p.tol_dist > 0.0 ? p.tol_dist : p.epsilon;

  const RefineOptions opt = refine_options(p.grid, p.seed, p.threads);
  rep.jitter = opt.realize.jitter;
  GradientField v = GradientField::from_boundary(p.domain, p.grid, p.c, p.v.map(), opt.sample);
  const double tol = rep.tol_dist;
  auto unit = [tol](const Mat& xi) { return std::abs(hs_norm(xi) - 1.0) < tol; };
  rep.input_unit_norm_fraction = v.fraction(unit);

  GradientField cur = v;
  if (p.method == EikonalMethod::InApprox) {
    const std::size_t jrun = p.stages + 1;
    EikonalInApprox ia = eikonal_in_approx(geom, jrun);
    rep.k0 = ia.k0;
    const IterationSchedule sched = IterationSchedule::make(p.epsilon, jrun, p.delta1);
    InApproxResult r = solve_in_approx(v, ia.approx, sched, jrun, opt);
    rep.budgets_honored = r.report.budgets_honored;
    rep.stopped_early = r.report.stopped_early;
    rep.stages = r.report.to_json();
    cur = std::move(r.field);
  } else {
    Json log = Json::array();
    for (std::size_t j = 1; j <= p.stages; ++j) {
      const double delta = 2.0 * p.epsilon / static_cast<double>(j);
      const double theta = std::ldexp(p.epsilon, -static_cast<int>(j + 1));
      BaireResult br = baire_refine(cur, delta, theta, *geom, opt);
      rep.budgets_honored = rep.budgets_honored && br.stats.refine.budget_honored();
      log.push_back(br.stats.to_json());
      cur = std::move(br.field);
      if (br.stats.refine.budget_infeasible) {
        rep.stopped_early = true;
        break;
      }
    }
    rep.stages = std::move(log);
  }

  const double eps = p.epsilon;
  rep.unit_norm_fraction = cur.fraction(unit);
  rep.endpoint_fraction = cur.fraction([&](const Mat& xi) { return geom->dist_to_endpoints(xi) < eps; });
  double sum = 0.0;
  for (std::size_t i = 0; i < cur.node_count(); ++i) sum += geom->dist_to_K(cur.grad(i));
  rep.mean_distance_to_K = sum / static_cast<double>(cur.node_count());
  rep.max_residual = cur.max_constraint_residual();
  rep.boundary_trace_error = cur.boundary_trace_error();
  rep.sup_distance = cur.sup_distance_to_base();
  cur.mark_targets([&](const Mat& xi) { return geom->dist_to_endpoints(xi) < eps; });
  return {std::move(cur), std::move(rep)};
}

LinearConstraint t4_constraint(double k) { return LinearConstraint(Mat::from_rows({{0.0, k}, {1.0, 0.0}}), 0.0); }

int t4_default_depth(double epsilon) {
  if (!(epsilon > 0.0)) fail(ErrorKind::InvalidArgument, "epsilon must be positive");
  return static_cast<int>(std::ceil(std::log2(1.0 / epsilon))) + 2;
}

std::vector<RankWitness> t4_rank_witnesses() {
  const T4Config t4 = T4Config::standard();
  std::vector<RankWitness> out;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      const Mat d = t4.A[i] - t4.A[j];
      // Entries are small integers, so the determinant is exact.
      const double det = d(0, 0) * d(1, 1) - d(0, 1) * d(1, 0);
      out.push_back({i + 1, j + 1, det != 0.0 ? 2 : rank(d), det});
    }
  }
  return out;
}

std::vector<HypothesisCheck> t4_hypotheses(const T4Problem& p) {
  std::vector<HypothesisCheck> out;
  const bool shape = p.v.eta.rows() == 2 && p.v.eta.cols() == 2;
  out.push_back({"eta_is_2x2", true, shape, shape ? 1.0 : 0.0});
  out.push_back({"k_nonzero", true, p.k != 0.0, p.k});
  out.push_back({"epsilon_positive", true, p.epsilon > 0.0, p.epsilon});
  if (!shape) return out;
  out.push_back({"eta_in_t4_hull", true, t4_hull_membership(p.v.eta), 0.0});
  const double res = std::abs(apply_constraint(t4_constraint(p.k == 0.0 ? 1.0 : p.k), p.v.eta));
  out.push_back({"eta_on_sigma_0", true, res <= 1e-12, res});
  bool rigid = true;
  for (const auto& w : t4_rank_witnesses()) rigid = rigid && w.rank == 2;
  out.push_back({"no_rank_one_connection_in_K", true, rigid, rigid ? 1.0 : 0.0});
  return out;
}

TargetSpec t4_target(const LinearConstraint& c, double epsilon, int depth) {
  const T4Config t4 = T4Config::standard();
  auto corners = std::make_shared<const std::array<Mat, 4>>(t4.A);
  auto dist = [corners](const Mat& xi) {
    double d = std::numeric_limits<double>::infinity();
    for (const Mat& A : *corners) d = std::min(d, hs_norm(xi - A));
    return d;
  };
  TargetSpec spec;
  spec.name = "T4_balls";
  spec.contains = [c, dist, epsilon](const Mat& xi) {
    return std::abs(apply_constraint(c, xi)) <= 1e-9 && dist(xi) < epsilon;
  };
  spec.boundary_margin = [c, dist, epsilon](const Mat& xi) {
    const double r = std::abs(apply_constraint(c, xi));
    return r > 1e-9 ? -r : epsilon - dist(xi);
  };
  spec.laminate_oracle = [depth](const Mat& xi, double) -> std::optional<Laminate> {
    if (std::abs(xi(0, 1)) > 1e-12 || std::abs(xi(1, 0)) > 1e-12) return std::nullopt;
    if (!t4_hull_membership(xi)) return std::nullopt;
    Laminate nu = t4_staircase(xi, depth);
    if (nu.order() == 0) return std::nullopt;
    return nu;
  };
  return spec;
}

Json T4Report::to_json() const {
  Json j;
  j["hypotheses"] = cvxint::to_json(hypotheses);
  Json w = Json::array();
  for (const auto& r : witnesses) {
    Json e;
    e["i"] = r.i;
    e["j"] = r.j;
    e["rank"] = r.rank;
    e["det"] = r.det;
    w.push_back(std::move(e));
  }
  j["rank_witnesses"] = std::move(w);
  j["depth"] = depth;
  j["jitter"] = jitter;
  j["staircase_order"] = staircase_order;
  j["staircase_corner_weight"] = staircase_corner_weight;
  j["fraction_near_K"] = fraction_near_K;
  j["max_constraint_residual"] = max_residual;
  j["boundary_trace_error"] = boundary_trace_error;
  j["sup_distance_to_boundary_map"] = sup_distance;
  j["budgets_honored"] = budgets_honored;
  j["solve"] = solve.to_json();
  return j;
}

T4Solution solve_t4(const T4Problem& p) {
  T4Report rep;
  rep.hypotheses = t4_hypotheses(p);
  rep.witnesses = t4_rank_witnesses();
  if (!(p.v.eta.rows() == 2 && p.v.eta.cols() == 2)) fail(ErrorKind::ShapeMismatch, "T4 needs a 2x2 eta");
  if (p.v.gamma.size() != 2) fail(ErrorKind::ShapeMismatch, "gamma must have 2 entries");
  if (p.domain.dim() != 2) fail(ErrorKind::ShapeMismatch, "T4 domain must be 2-dimensional");
  if (p.k == 0.0) fail(ErrorKind::InvalidArgument, "k must be nonzero");
  if (!(p.epsilon > 0.0)) fail(ErrorKind::InvalidArgument, "epsilon must be positive");
  if (p.stages < 1) fail(ErrorKind::InvalidArgument, "at least one stage is required");
  if (!t4_hull_membership(p.v.eta)) fail(ErrorKind::NotInHull, "eta is outside the T4 hull");
  const LinearConstraint c = t4_constraint(p.k);
  rep.depth = p.depth > 0 ? p.depth : t4_default_depth(p.epsilon);

  const Laminate stair = t4_staircase(p.v.eta, rep.depth);
  rep.staircase_order = stair.order();
  rep.staircase_corner_weight = t4_corner_weight(stair);

  const RefineOptions opt = refine_options(p.grid, p.seed, p.threads);
  rep.jitter = opt.realize.jitter;
  const GradientField v = GradientField::from_boundary(p.domain, p.grid, c, p.v.map(), opt.sample);
  const TargetSpec target = t4_target(c, p.epsilon, rep.depth);
  SolveResult r = solve_open(v, target, p.epsilon, p.stages, opt);
  rep.solve = r.report;
  rep.budgets_honored = r.report.budgets_honored;
  rep.fraction_near_K = r.field.mark_targets(target.contains);
  rep.max_residual = r.field.max_constraint_residual();
  rep.boundary_trace_error = r.field.boundary_trace_error();
  rep.sup_distance = r.field.sup_distance_to_base();
  return {std::move(r.field), std::move(rep)};
}

}  // namespace cvxint
