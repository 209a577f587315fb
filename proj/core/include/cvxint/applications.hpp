#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cvxint/box.hpp"
#include "cvxint/eikonal.hpp"
#include "cvxint/hulls.hpp"
#include "cvxint/integrator.hpp"
#include "cvxint/io.hpp"

namespace cvxint {

/// One precondition of a solver, evaluated on the concrete input.
struct HypothesisCheck {
  std::string name;
  bool required = true;
  bool pass = false;
  double value = 0.0;
};

Json to_json(const std::vector<HypothesisCheck>& checks);
bool all_required_pass(const std::vector<HypothesisCheck>& checks);

enum class EikonalMethod { InApprox, Baire };

std::string_view to_string(EikonalMethod m);

struct EikonalProblem {
  Box domain = Box::unit(2);
  AffineBoundary v;
  Vec a;
  Vec b;
  LinearConstraint c{Mat(1, 1, 1.0), 0.0};
  double epsilon = 0.1;
  EikonalMethod method = EikonalMethod::InApprox;
  /// J for the in-approximation route (J + 1 sets are run), iteration count for the Baire route.
  std::size_t stages = 3;
  std::size_t grid = 256;
  unsigned seed = 0;
  std::size_t threads = 1;
  /// Tolerance for the unit-norm fraction; 0 means ε.
  double tol_dist = 0.0;
  double delta1 = 0.5;
};

/// |η| < 1, a ≠ 0, Lb ≠ 0, 𝓛(a⊗b) = 0, η ∈ Σ_t, and (for the in-approximation route) injective L.
std::vector<HypothesisCheck> eikonal_hypotheses(const EikonalProblem& p);

struct EikonalReport {
  EikonalMethod method = EikonalMethod::InApprox;
  std::vector<HypothesisCheck> hypotheses;
  EikonalEndpoints endpoints;
  double alpha = 0.0;
  int k0 = 0;
  unsigned jitter = 0;
  double tol_dist = 0.0;
  double input_unit_norm_fraction = 0.0;
  double unit_norm_fraction = 0.0;
  double endpoint_fraction = 0.0;  // dist(∇u, {η±}) < ε
  double mean_distance_to_K = 0.0;
  double max_residual = 0.0;
  double boundary_trace_error = 0.0;
  double sup_distance = 0.0;
  bool budgets_honored = true;
  bool stopped_early = false;
  Json stages;  // route-specific stage log
  Json to_json() const;
};

struct EikonalSolution {
  GradientField field;
  EikonalReport report;
};

EikonalSolution solve_eikonal(const EikonalProblem& p);

struct T4Problem {
  Box domain = Box::unit(2);
  double k = 1.0;
  AffineBoundary v;
  double epsilon = 0.25;
  /// Staircase depth; 0 picks ⌈log₂(1/ε)⌉ + 2.
  int depth = 0;
  int stages = 3;
  std::size_t grid = 256;
  unsigned seed = 0;
  std::size_t threads = 1;
};

LinearConstraint t4_constraint(double k);
int t4_default_depth(double epsilon);

struct RankWitness {
  int i = 0;
  int j = 0;
  int rank = 0;
  double det = 0.0;
};

/// rank(A_i − A_j) for the six corner pairs.
std::vector<RankWitness> t4_rank_witnesses();

std::vector<HypothesisCheck> t4_hypotheses(const T4Problem& p);

/// U = ∪ B_ε(A_i) ∩ Σ₀ with the staircase as laminate oracle.
TargetSpec t4_target(const LinearConstraint& c, double epsilon, int depth);

struct T4Report {
  std::vector<HypothesisCheck> hypotheses;
  std::vector<RankWitness> witnesses;
  int depth = 0;
  unsigned jitter = 0;
  std::size_t staircase_order = 0;
  double staircase_corner_weight = 0.0;
  double fraction_near_K = 0.0;  // dist(∇u, K) < ε
  double max_residual = 0.0;
  double boundary_trace_error = 0.0;
  double sup_distance = 0.0;
  bool budgets_honored = true;
  SolveReport solve;
  Json to_json() const;
};

struct T4Solution {
  GradientField field;
  T4Report report;
};

T4Solution solve_t4(const T4Problem& p);

}  // namespace cvxint
