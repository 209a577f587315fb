// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any criterion fails.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cli/commands.hpp"
#include "cvxint/applications.hpp"
#include "cvxint/eikonal.hpp"
#include "cvxint/hulls.hpp"
#include "cvxint/integrator.hpp"
#include "cvxint/laminates.hpp"
#include "cvxint/oscillation.hpp"
#include "support/fd.hpp"
#include "support/generators.hpp"
#include "support/targets.hpp"

using namespace cvxint;
using cvxint::testing::Rng;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// 1 ------------------------------------------------------------------------------------------------
Outcome coefficient_system() {
  Rng rng(101);
  Outcome o;
  double worst_listed = 0.0, worst_symbol = 0.0;
  std::size_t normalization_failures = 0;
  int seen[4] = {0, 0, 0, 0};
  const auto t0 = Clock::now();
  for (int i = 0; i < 200; ++i) {
    const std::size_t m = 2 + rng() % 3, n = 2 + rng() % 3;
    const std::size_t r = 1 + rng() % std::min(m, n);
    const int want = 1 + i % 3;
    const auto inst = testing::random_patch_instance(rng, m, n, r, want);
    const Reduction red = canonicalize(inst.c, inst.pair);
    ++seen[red.case_id];
    const CoefficientTensor a = solve_coefficients(red.L_canonical, red.a_canonical);
    worst_listed = std::max(worst_listed, listed_equation_residual(a, red.L_canonical));
    worst_symbol = std::max(worst_symbol, symbol_residual(a, red.L_canonical));
    if (!normalization_holds(a, red.a_canonical)) ++normalization_failures;
  }
  const double secs = seconds_since(t0);
  o.pass = worst_listed < 1e-12 && worst_symbol < 1e-12 && normalization_failures == 0 && seen[1] > 0 &&
           seen[2] > 0 && seen[3] > 0 && secs < 2.0;
  o.detail = "listed " + fmt("%.2e", worst_listed) + ", symbol " + fmt("%.2e", worst_symbol) +
             ", normalization failures " + std::to_string(normalization_failures) + ", cases " +
             std::to_string(seen[1]) + "/" + std::to_string(seen[2]) + "/" + std::to_string(seen[3]) + ", " +
             fmt("%.2f s", secs);
  return o;
}

// 2 ------------------------------------------------------------------------------------------------
Outcome patch_properties() {
  Rng rng(202);
  Outcome o;
  double res = 0.0, seg = 0.0, plateau = 0.0, meas = 0.0, sup = 0.0;
  std::size_t failed = 0;
  const auto t0 = Clock::now();
  for (int i = 0; i < 20; ++i) {
    const double tau = i % 2 ? 0.05 : 0.1;
    // m ≥ 2: with a single row, a ⟂ Lb forces a = 0.
    const std::size_t m = 2 + rng() % 2;
    const std::size_t r = 1 + rng() % 2;
    const auto inst = testing::random_patch_instance(rng, m, 2, r, 1 + i % 3);
    const double lambda = testing::uniform(rng, 0.2, 0.8);
    const OscillationPatch p = make_patch(inst.c, inst.pair, lambda, Box::unit(2), tau);
    const PatchPropertyReport rep = check_patch_properties(p, tau, 512 * 512);
    const bool ok = rep.max_residual < 1e-10 && rep.max_segment_distance < tau && rep.plateau_error <= 1e-12 &&
                    std::abs(rep.measure_A - lambda) < tau && rep.sup_value < tau && rep.all();
    if (!ok) ++failed;
    res = std::max(res, rep.max_residual);
    seg = std::max(seg, rep.max_segment_distance / tau);
    plateau = std::max(plateau, rep.plateau_error);
    meas = std::max(meas, std::abs(rep.measure_A - lambda) / tau);
    sup = std::max(sup, rep.sup_value / tau);
  }
  const double secs = seconds_since(t0);
  o.pass = failed == 0 && secs < 30.0;
  o.detail = "failed " + std::to_string(failed) + "/20, residual " + fmt("%.2e", res) + ", segment/tau " +
             fmt("%.3f", seg) + ", plateau " + fmt("%.1e", plateau) + ", measure/tau " + fmt("%.3f", meas) +
             ", sup/tau " + fmt("%.3f", sup) + ", " + fmt("%.1f s", secs);
  return o;
}

// 3 ------------------------------------------------------------------------------------------------
Outcome gradient_consistency() {
  Outcome o;
  const LinearConstraint c(Mat::identity(2), 0.0);
  const RankOnePair pair = RankOnePair::from_factors(Mat(2, 2), Vec{0, 1}, Vec{1, 0});
  const OscillationPatch p = make_patch(c, pair, 0.3, Box::unit(2), 0.1);
  const auto ratios = testing::fd_ratios(p, testing::fd_probes(p, 8), 3);
  o.detail = "ratios";
  for (double r : ratios) {
    o.pass = o.pass && std::abs(r - 4.0) <= 0.8;
    o.detail += " " + fmt("%.3f", r);
  }
  o.pass = o.pass && ratios.size() == 3;
  return o;
}

// 4 ------------------------------------------------------------------------------------------------
Outcome laminate_suite() {
  Rng rng(404);
  Outcome o;
  double drift = 0.0, wsum = 0.0, det_gap = 0.0;
  std::size_t two_by_two = 0;
  for (int i = 0; i < 10000; ++i) {
    const bool square2 = i % 2 == 0;
    const std::size_t m = square2 ? 2 : 1 + rng() % 4, n = square2 ? 2 : 1 + rng() % 4;
    const Laminate nu = testing::random_laminate(rng, m, n, 1 + rng() % 12);
    drift = std::max(drift, hs_norm(nu.barycenter() - nu.root()));
    wsum = std::max(wsum, std::abs(nu.weight_sum() - 1.0));
    if (m == 2 && n == 2) {
      ++two_by_two;
      for (const TestFunction& f : {TestFunction::plus_det(), TestFunction::minus_det()}) {
        const JensenResult j = jensen_check(nu, f);
        det_gap = std::max(det_gap, std::abs(j.lhs - j.rhs));
      }
    }
  }
  o.pass = drift < 1e-12 && wsum <= 1e-12 && det_gap < 1e-10;
  o.detail = "drift " + fmt("%.2e", drift) + ", |sum w - 1| " + fmt("%.2e", wsum) + ", det gap " +
             fmt("%.2e", det_gap) + " over " + std::to_string(two_by_two) + " 2x2 laminates";
  return o;
}

// 5 ------------------------------------------------------------------------------------------------
Outcome hull_agreement() {
  Outcome o;
  const auto t0 = Clock::now();
  const double h = 0.05;
  const T4EnvelopeComparison cmp = t4_envelope_comparison(-4.0, 4.0, h);
  PointCloud cloud(2, 2, 0.05);
  for (const Mat& A : T4Config::standard().corners()) cloud.insert(A);
  const HullResult hull = lamination_hull_discrete(cloud, 5, 50);
  bool rigid = true;
  for (const RankWitness& w : t4_rank_witnesses()) rigid = rigid && w.rank == 2;
  const double secs = seconds_since(t0);
  o.pass = cmp.envelope.converged && cmp.hausdorff <= 2 * h && hull.converged && hull.added == 0 && rigid && secs < 60.0;
  o.detail = "hausdorff " + fmt("%.4f", cmp.hausdorff) + " (bound " + fmt("%.2f", 2 * h) + "), hull added " +
             std::to_string(hull.added) + ", ranks " + (rigid ? "all 2" : "not all 2") + ", " + fmt("%.1f s", secs);
  return o;
}

// 6 ------------------------------------------------------------------------------------------------
Outcome eikonal_endpoint_suite() {
  Rng rng(606);
  Outcome o;
  double err = 0.0;
  std::size_t sign_failures = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t m = 1 + rng() % 4, n = 1 + rng() % 4;
    Mat eta = testing::random_mat(rng, m, n);
    eta = testing::uniform(rng, 0.0, 0.999) / std::max(hs_norm(eta), 1e-300) * eta;
    const Vec a = testing::random_vec(rng, m), b = testing::random_vec(rng, n);
    if (norm(a) < 1e-3 || norm(b) < 1e-3) continue;
    const EikonalEndpoints e = eikonal_endpoints(eta, a, b);
    err = std::max({err, std::abs(hs_norm(e.eta_plus) - 1.0), std::abs(hs_norm(e.eta_minus) - 1.0)});
    if (!(e.s_plus > 0.0 && e.s_minus < 0.0)) ++sign_failures;
  }
  const EikonalEndpoints unit = eikonal_endpoints(Mat(2, 2), Vec{0, 1}, Vec{1, 0});
  Mat eta(2, 2);
  eta(0, 0) = 0.6;
  const EikonalEndpoints pyth = eikonal_endpoints(eta, Vec{0, 1}, Vec{1, 0});
  const double closed = std::max({std::abs(unit.s_plus - 1.0), std::abs(unit.s_minus + 1.0),
                                  std::abs(pyth.s_plus - 0.8), std::abs(pyth.s_minus + 0.8)});
  o.pass = err < 1e-12 && sign_failures == 0 && closed < 1e-12;
  o.detail = "norm error " + fmt("%.2e", err) + ", sign failures " + std::to_string(sign_failures) +
             ", closed forms " + fmt("%.2e", closed);
  return o;
}

// 7 and 9 ----------------------------------------------------------------------------------------
EikonalProblem eikonal_desk(unsigned seed) {
  EikonalProblem p;
  p.v.eta = Mat(2, 2);
  p.v.eta(0, 0) = 0.5;
  p.v.gamma = Vec(2, 0.0);
  p.a = Vec{0, 1};
  p.b = Vec{1, 0};
  p.c = LinearConstraint(Mat::identity(2), 0.5);
  p.epsilon = 0.1;
  p.stages = 3;
  p.grid = 256;
  p.seed = seed;
  return p;
}

double cumulative_in_approx = -1.0;

Outcome eikonal_desk_solve() {
  Outcome o;
  std::vector<GradientField> fields;
  double worst_time = 0.0;
  for (unsigned seed : {1u, 2u, 3u}) {
    const auto t0 = Clock::now();
    EikonalSolution s = solve_eikonal(eikonal_desk(seed));
    worst_time = std::max(worst_time, seconds_since(t0));
    const EikonalReport& r = s.report;
    const bool ok = r.endpoint_fraction >= 0.9 && r.max_residual < 1e-8 && r.boundary_trace_error == 0.0 &&
                    r.sup_distance < 0.1;
    o.pass = o.pass && ok;
    o.detail += "seed " + std::to_string(seed) + ": fraction " + fmt("%.4f", r.endpoint_fraction) + ", residual " +
                fmt("%.1e", r.max_residual) + ", trace " + fmt("%.1e", r.boundary_trace_error) + ", sup " +
                fmt("%.4f", r.sup_distance) + "; ";
    if (seed == 1u) cumulative_in_approx = r.stages["summary"]["cumulative_sup_change"].get<double>();
    fields.push_back(std::move(s.field));
  }
  double min_gap = INFINITY;
  for (std::size_t i = 0; i < fields.size(); ++i)
    for (std::size_t j = i + 1; j < fields.size(); ++j) min_gap = std::min(min_gap, fields[i].sup_distance(fields[j]));
  o.pass = o.pass && min_gap > 1e-6 && worst_time < 120.0;
  o.detail += "min pairwise sup gap " + fmt("%.2e", min_gap) + ", slowest " + fmt("%.1f s", worst_time);
  return o;
}

// 8 ------------------------------------------------------------------------------------------------
Outcome t4_desk_solve() {
  Outcome o;
  for (double k : {1.0, -1.0}) {
    T4Problem p;
    p.k = k;
    p.v.eta = Mat(2, 2);
    p.v.gamma = Vec(2, 0.0);
    p.epsilon = 0.25;
    p.depth = 4;
    p.grid = 256;
    const auto t0 = Clock::now();
    const T4Solution s = solve_t4(p);
    const double secs = seconds_since(t0);
    const T4Report& r = s.report;
    o.pass = o.pass && r.fraction_near_K >= 0.9 && r.max_residual < 1e-8 && r.sup_distance < 0.25 && secs < 120.0;
    o.detail += "k=" + fmt("%+.0f", k) + ": fraction " + fmt("%.4f", r.fraction_near_K) + ", residual " +
                fmt("%.1e", r.max_residual) + ", sup " + fmt("%.4f", r.sup_distance) + ", " + fmt("%.1f s", secs) +
                "; ";
  }
  return o;
}

// 9 ------------------------------------------------------------------------------------------------
Outcome schedule_bounds() {
  Outcome o;
  const LinearConstraint c(Mat::identity(2), 0.0);
  const Mat w = outer(Vec{0, 1}, Vec{1, 0});
  const TargetSpec target = testing::two_atom_target(c, w, -1.0 * w, 0.05);
  const double eps = 0.1;
  const GradientField f =
      GradientField::from_boundary(Box::unit(2), 256, c, BoundaryMap::affine(Mat(2, 2), Vec{0.25, -0.5}));
  RefineOptions opt;
  opt.realize.grid_hint = 256;
  const SolveResult s = solve_open(f, target, eps, 3, opt);
  o.detail = "solve_open stage/budget";
  for (std::size_t k = 1; k <= s.report.stages.size(); ++k) {
    const double budget = std::ldexp(eps, -static_cast<int>(k + 1));
    const auto& st = s.report.stages[k - 1];
    o.pass = o.pass && st.sup_change <= budget && st.sup_change_bound <= budget;
    o.detail += " " + fmt("%.3f", st.sup_change / budget);
  }
  o.pass = o.pass && s.report.stages.size() == 3;
  o.pass = o.pass && cumulative_in_approx >= 0.0 && cumulative_in_approx <= 0.1 / 2;
  o.detail += "; in_approx cumulative " + fmt("%.4f", cumulative_in_approx) + " (bound 0.05)";
  return o;
}

// 10 -----------------------------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  Outcome o;
  const fs::path base = fs::temp_directory_path() / ("cvxint_acceptance_" + std::to_string(::getpid()));
  struct Job {
    std::string cmd, cfg, csv;
  };
  const std::vector<Job> jobs{
      {"eikonal", "[run]\nseed = 5\ngrid = 128\n[eikonal]\neta = 0.5,0,0,0\na = 0,1\nb = 1,0\n", "eikonal_field.csv"},
      {"t4", "[run]\nseed = 5\ngrid = 128\n[t4]\nk = -1\n", "t4_field.csv"},
      {"patch", "[patch]\ntau = 0.1\nsamples = 4096\n", "patch_field.csv"},
  };
  std::size_t compared = 0;
  for (const Job& job : jobs) {
    std::string text[2];
    for (int run = 0; run < 2; ++run) {
      const fs::path dir = base / (job.cmd + std::to_string(run));
      cli::RunOptions opt;
      opt.config_text = job.cfg;
      opt.out_dir = dir.string();
      std::ostringstream log, err;
      const int code = cli::run_command(job.cmd, opt, log, err);
      if (code != cli::kExitOk) {
        o.pass = false;
        o.detail += job.cmd + " exit " + std::to_string(code) + "; ";
      }
      text[run] = slurp(dir / job.csv);
    }
    const bool same = !text[0].empty() && text[0] == text[1];
    o.pass = o.pass && same;
    o.detail += job.csv + (same ? " identical" : " DIFFERS") + " (" + std::to_string(text[0].size()) + " bytes); ";
    ++compared;
  }
  fs::remove_all(base);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "coefficient system", coefficient_system},
      {2, "patch properties", patch_properties},
      {3, "gradient consistency", gradient_consistency},
      {4, "laminate suite", laminate_suite},
      {5, "hull oracle agreement", hull_agreement},
      {6, "eikonal endpoints", eikonal_endpoint_suite},
      {7, "eikonal desk solve", eikonal_desk_solve},
      {8, "T4 desk solve", t4_desk_solve},
      {9, "schedule bounds", schedule_bounds},
      {10, "determinism", determinism},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failures;
    std::printf("%s %2d %-22s [%6.1f s] %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, seconds_since(t0),
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
