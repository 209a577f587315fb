#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cvxint/box.hpp"
#include "cvxint/io.hpp"
#include "cvxint/laminates.hpp"
#include "cvxint/matcore.hpp"
#include "cvxint/realization.hpp"

namespace cvxint {

/// The boundary map v: affine ηx + γ, or a general C¹ map given by a callback.
class BoundaryMap {
 public:
  using Fn = std::function<void(std::span<const double> x, std::span<double> u, Mat& grad)>;

  static BoundaryMap affine(Mat eta, Vec gamma);
  static BoundaryMap smooth(std::size_t m, std::size_t n, Fn fn);

  std::size_t m() const noexcept { return m_; }
  std::size_t n() const noexcept { return n_; }
  bool is_affine() const noexcept { return !fn_; }
  const Mat& eta() const noexcept { return eta_; }
  const Vec& gamma() const noexcept { return gamma_; }

  /// Overwrites u and grad with v(x) and ∇v(x).
  void eval(std::span<const double> x, std::span<double> u, Mat& grad) const;
  Mat gradient(std::span<const double> x) const;

 private:
  std::size_t m_ = 0, n_ = 0;
  Mat eta_;
  Vec gamma_;
  Fn fn_;
};

/// u = v + φ where φ is piecewise: the domain is cut into equal root cubes, each carrying a realization.
struct Construction {
  Box domain;
  BoundaryMap base;
  std::vector<std::size_t> root_counts;
  Vec root_extent;
  std::vector<RealizationPtr> roots;  // row-major over root_counts
  int stages = 0;

  std::size_t root_index(std::span<const double> x, Vec& local) const;
  double sup_bound() const;
};

/// Open target set U ⊂ Σ_t given by callbacks.
struct TargetSpec {
  std::string name;
  std::function<bool(const Mat&)> contains;
  /// Lower bound on the distance of ξ to the relative boundary of U (≤ 0 outside).
  std::function<double(const Mat&)> boundary_margin;
  /// Finite-order laminate with barycenter ξ and atoms in U up to total weight ε; nullopt if ξ is out of reach.
  std::function<std::optional<Laminate>(const Mat&, double)> laminate_oracle;
};

struct InApproximation {
  std::vector<TargetSpec> sets;  // U_1, U_2, ...
  double bound_M = 0.0;
  /// Distance to the limit set K, used for convergence statistics (optional).
  std::function<double(const Mat&)> limit_distance;

  std::size_t stage_count() const noexcept { return sets.size(); }
};

/// δ_j and ε_j for j = 1..J (stored at index j − 1).
struct IterationSchedule {
  double epsilon = 0.0;
  Vec delta;
  Vec eps;

  static IterationSchedule make(double epsilon, std::size_t stages, double delta1 = 0.5);
  bool valid() const;
};

struct SampleOptions {
  std::size_t threads = 1;
};

/// Node samples of u and ∇u on a uniform (res+1)^n grid over the domain.
class GradientField {
 public:
  static GradientField from_boundary(const Box& domain, std::size_t resolution, const LinearConstraint& c,
                                     const BoundaryMap& v, const SampleOptions& opt = {},
                                     double oscillation_tol = 0.05, int max_dyadic_depth = 6);
  /// Re-samples a (new) construction on the same grid.
  GradientField with_construction(std::shared_ptr<const Construction> cons, const SampleOptions& opt) const;

  const Box& domain() const noexcept { return cons_->domain; }
  std::size_t resolution() const noexcept { return res_; }
  std::size_t m() const noexcept { return m_; }
  std::size_t n() const noexcept { return n_; }
  std::size_t node_count() const noexcept { return stage_.size(); }
  const LinearConstraint& constraint() const noexcept { return c_; }
  const Construction& construction() const noexcept { return *cons_; }
  const std::shared_ptr<const Construction>& construction_ptr() const noexcept { return cons_; }
  /// Dyadic subdivision depth used for the root cubes and whether it hit the cap.
  int root_depth() const noexcept { return root_depth_; }
  bool root_depth_capped() const noexcept { return root_depth_capped_; }

  Vec point(std::size_t i) const;
  std::span<const double> u(std::size_t i) const { return {u_.data() + i * m_, m_}; }
  Mat grad(std::size_t i) const;
  std::span<const double> grad_data(std::size_t i) const { return {g_.data() + i * m_ * n_, m_ * n_}; }
  int stage(std::size_t i) const { return stage_[i]; }
  bool exceptional(std::size_t i) const { return exceptional_[i] != 0; }
  bool on_boundary(std::size_t i) const { return boundary_[i] != 0; }
  bool in_target(std::size_t i) const { return in_target_[i] != 0; }

  /// Evaluates `contains` at every node's gradient and stores the flags; returns the fraction.
  double mark_targets(const std::function<bool(const Mat&)>& contains);
  double target_fraction() const;

  double max_constraint_residual() const;
  /// max |u − v| over boundary nodes.
  double boundary_trace_error() const;
  /// max |u − v| over all nodes.
  double sup_distance_to_base() const;
  double sup_distance(const GradientField& other) const;
  double exceptional_fraction() const;
  double max_gradient_norm() const;
  /// Fraction of nodes whose gradient satisfies pred.
  double fraction(const std::function<bool(const Mat&)>& pred) const;

  void write_csv(std::ostream& os) const;

 private:
  void sample(const SampleOptions& opt);

  std::shared_ptr<const Construction> cons_;
  LinearConstraint c_{Mat(1, 1, 1.0), 0.0};
  std::size_t res_ = 0;
  std::size_t m_ = 0, n_ = 0;
  int root_depth_ = 0;
  bool root_depth_capped_ = false;
  std::vector<double> u_;
  std::vector<double> g_;
  std::vector<int> stage_;
  std::vector<std::uint8_t> exceptional_;
  std::vector<std::uint8_t> boundary_;
  std::vector<std::uint8_t> in_target_;
};

struct RefineOptions {
  RealizeOptions realize;
  SampleOptions sample;
  /// Weight tolerance handed to the laminate oracle.
  double oracle_epsilon = 0.01;
  /// Measure of bands and margins a refined leaf may keep outside the atoms, relative to the leaf.
  /// Shared evenly between the split levels of the laminate; 0 uses realize.geometry unchanged.
  double exceptional_fraction = 0.0;
};

struct RefineStats {
  std::size_t leaves_seen = 0;
  std::size_t leaves_refined = 0;
  std::size_t oracle_failures = 0;
  std::size_t leaves_unresolvable = 0;  // too thin for any band to be representable
  bool partial = false;
  bool unsupported_direction = false;
  bool budget_infeasible = false;
  double fraction_before = 0.0;
  double fraction_after = 0.0;
  double budget = 0.0;
  double sup_change = 0.0;        // measured on the grid
  double sup_change_bound = 0.0;  // analytic bound over all new subtrees
  double max_residual = 0.0;
  double boundary_trace_error = 0.0;
  double exceptional_fraction = 0.0;

  bool budget_honored() const { return sup_change <= budget && sup_change_bound <= budget; }
  Json to_json() const;
};

struct RefineResult {
  GradientField field;
  RefineStats stats;
};

/// One refinement stage: every leaf whose nominal gradient is outside U is replaced by a realization
/// of the oracle's laminate with sup|φ| ≤ budget.
RefineResult refine_field(const GradientField& field, const TargetSpec& target, double budget,
                          const RefineOptions& opt);

struct RealizeStats {
  std::vector<double> expected;   // exact volume fraction per atom
  std::vector<double> measured;   // sampled fraction with |ξ + ∇φ − ξ_j| < tol
  std::vector<double> weights;    // laminate weights
  double expected_exceptional = 0.0;
  double measured_exceptional = 0.0;
  double parent_fraction = 0.0;
  double sup_bound = 0.0;
  double sup_measured = 0.0;
  double max_residual = 0.0;
  double boundary_max = 0.0;  // max |φ| on the cube boundary
  BuildFlags flags;
  std::size_t samples_per_axis = 0;
  Json to_json() const;
};

struct RealizeResult {
  RealizationPtr root;
  RealizeStats stats;
};

RealizeResult realize_laminate(const Mat& xi, const Laminate& nu, const Box& cube, const LinearConstraint& c,
                               double epsilon, int depth, const RealizeOptions& opt = {},
                               std::size_t samples_per_axis = 256, double match_tol = 1e-8);

struct SolveReport {
  std::vector<RefineStats> stages;
  std::vector<double> fractions;  // target fraction after each stage (index 0 = input)
  double sup_change_total = 0.0;
  double sup_distance = 0.0;
  double max_residual = 0.0;
  double boundary_trace_error = 0.0;
  bool budgets_honored = true;
  bool stopped_early = false;
  Json to_json() const;
};

struct SolveResult {
  GradientField field;
  SolveReport report;
};

SolveResult solve_open(const GradientField& v, const TargetSpec& target, double epsilon, int stages,
                       const RefineOptions& opt);

struct InApproxStage {
  std::size_t j = 1;
  double delta = 0.0;
  double fraction = 0.0;
  double sup_change = 0.0;
  double cumulative_sup_change = 0.0;
  double median_limit_distance = 0.0;
  double mean_limit_distance = 0.0;
  RefineStats refine;
  Json to_json() const;
};

struct InApproxReport {
  std::vector<InApproxStage> stages;
  double cumulative_sup_change = 0.0;
  double sup_distance = 0.0;
  double max_residual = 0.0;
  double boundary_trace_error = 0.0;
  bool budgets_honored = true;
  bool stopped_early = false;
  Json to_json() const;
};

struct InApproxResult {
  GradientField field;
  InApproxReport report;
};

InApproxResult solve_in_approx(const GradientField& v, const InApproximation& approx,
                               const IterationSchedule& schedule, std::size_t jrun, const RefineOptions& opt);

}  // namespace cvxint
