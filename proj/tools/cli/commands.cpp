#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "config.hpp"
#include "cvxint/applications.hpp"
#include "cvxint/error.hpp"
#include "cvxint/hulls.hpp"
#include "cvxint/io.hpp"
#include "cvxint/laminates.hpp"
#include "cvxint/oscillation.hpp"

namespace cvxint::cli {

namespace fs = std::filesystem;

namespace {

struct Context {
  const Config& cfg;
  fs::path out;
  unsigned long seed = 0;
  std::size_t threads = 1;
  std::ostream& log;
};

/// What a command hands back: its JSON report and whether every asserted invariant held.
struct Outcome {
  Json report;
  bool invariants_pass = true;
  int failure_code = kExitNumeric;
};

const Schema& schema_for(const std::string& command) {
  static const std::set<std::string> run_keys{"command", "seed", "threads", "grid"};
  static const std::map<std::string, Schema> schemas{
      {"hull",
       {{"run", run_keys},
        {"hull", {"preset", "m", "n", "points", "resolution", "samples_per_segment", "max_rounds", "L", "t"}}}},
      {"envelope", {{"run", run_keys}, {"envelope", {"preset", "points", "lo", "hi", "h", "tol", "max_sweeps"}}}},
      {"laminate", {{"run", run_keys}, {"laminate", {"preset", "m", "n", "root", "splits", "eta", "depth", "tests"}}}},
      {"patch",
       {{"run", run_keys},
        {"patch", {"m", "n", "L", "A", "B", "lambda", "tau", "domain_lo", "domain_hi", "samples", "csv_samples"}}}},
      {"eikonal",
       {{"run", run_keys},
        {"eikonal", {"m", "n", "L", "t", "eta", "gamma", "a", "b", "epsilon", "stages", "method", "tol_dist",
                     "delta1", "domain_lo", "domain_hi"}}}},
      {"t4",
       {{"run", run_keys}, {"t4", {"k", "eta", "gamma", "epsilon", "depth", "stages", "domain_lo", "domain_hi"}}}},
      {"report", {{"run", run_keys}, {"report", {"inputs"}}}},
  };
  return schemas.at(command);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

std::string matrix_header(const std::string& prefix, std::size_t m, std::size_t n) {
  std::string h;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) h += (h.empty() ? "" : ",") + prefix + std::to_string(i + 1) + std::to_string(j + 1);
  return h;
}

void write_matrix_row(std::ostream& os, const Mat& a) {
  for (std::size_t k = 0; k < a.size(); ++k) os << (k ? "," : "") << format_double(a.data()[k]);
}

Box read_domain(const Config& cfg, const std::string& sec, std::size_t n) {
  Box b{cfg.get_vec(sec, "domain_lo", Vec(n, 0.0)), cfg.get_vec(sec, "domain_hi", Vec(n, 1.0))};
  if (b.lo.size() != n || b.hi.size() != n || !b.valid()) {
    throw ConfigError("[" + sec + "] domain_lo/domain_hi must be " + std::to_string(n) + " increasing bounds");
  }
  return b;
}

std::size_t read_dim(const Config& cfg, const std::string& sec, const std::string& key, std::size_t fallback) {
  const std::size_t d = cfg.get_size(sec, key, fallback);
  if (d < 1 || d > 8) throw ConfigError("[" + sec + "] " + key + " must lie in 1..8");
  return d;
}

// ---------------------------------------------------------------------------------------------- hull

Outcome cmd_hull(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const std::string preset = cfg.get_string("hull", "preset", cfg.has("hull", "points") ? "custom" : "t4");
  std::size_t m = 2, n = 2;
  std::vector<Mat> pts;
  std::optional<LinearConstraint> c;
  if (preset == "t4") {
    pts = T4Config::standard().corners();
    c = t4_constraint(1.0);
  } else if (preset == "custom") {
    m = read_dim(cfg, "hull", "m", 2);
    n = read_dim(cfg, "hull", "n", 2);
    pts = cfg.get_mats("hull", "points", m, n);
  } else {
    throw ConfigError("[hull] preset must be t4 or custom");
  }
  if (pts.empty()) throw ConfigError("[hull] points: empty point list");
  if (cfg.has("hull", "L")) c = LinearConstraint(cfg.require_mat("hull", "L", m, n), cfg.get_double("hull", "t", 0.0));

  const double res = cfg.get_double("hull", "resolution", 0.05);
  if (!(res > 0.0)) throw ConfigError("[hull] resolution must be positive");
  const long sps = cfg.get_int("hull", "samples_per_segment", 5);
  const long rounds = cfg.get_int("hull", "max_rounds", 50);
  if (sps < 2) throw ConfigError("[hull] samples_per_segment must be >= 2");
  PointCloud cloud(m, n, res);
  for (const Mat& p : pts) cloud.insert(p);
  const HullResult hull = lamination_hull_discrete(cloud, static_cast<int>(sps), static_cast<int>(rounds));

  std::ofstream csv(ctx.out / "hull_points.csv", std::ios::binary);
  csv << matrix_header("p", m, n) << "\n";
  for (const Mat& p : hull.cloud.points()) {
    write_matrix_row(csv, p);
    csv << "\n";
  }

  Outcome o;
  o.report["preset"] = preset;
  o.report["input_points"] = cloud.size();
  o.report["hull_points"] = hull.cloud.size();
  o.report["converged"] = hull.converged;
  o.report["rounds"] = hull.rounds;
  o.report["added"] = hull.added;
  o.report["lc_equals_input"] = hull.added == 0 && hull.cloud.size() == cloud.size();
  if (c) {
    const RelativeHullReport rel = relative_hull_agreement_check(cloud, *c, static_cast<int>(sps), static_cast<int>(rounds));
    o.report["relative_hull"] = to_json(rel);
    o.invariants_pass = rel.agrees;
  }
  if (preset == "t4") {
    Json w = Json::array();
    bool rigid = true;
    for (const auto& r : t4_rank_witnesses()) {
      w.push_back({{"i", r.i}, {"j", r.j}, {"rank", r.rank}});
      rigid = rigid && r.rank == 2;
    }
    o.report["rank_witnesses"] = std::move(w);
    o.invariants_pass = o.invariants_pass && rigid && o.report["lc_equals_input"].get<bool>();
  }
  o.invariants_pass = o.invariants_pass && hull.converged;
  return o;
}

// ------------------------------------------------------------------------------------------ envelope

Outcome cmd_envelope(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const std::string preset = cfg.get_string("envelope", "preset", cfg.has("envelope", "points") ? "custom" : "t4");
  const double lo = cfg.get_double("envelope", "lo", -4.0);
  const double hi = cfg.get_double("envelope", "hi", 4.0);
  const double h = cfg.get_double("envelope", "h", 0.05);
  const double tol = cfg.get_double("envelope", "tol", 1e-12);
  const long sweeps = cfg.get_int("envelope", "max_sweeps", 2000);
  if (!(hi > lo) || !(h > 0.0) || !(tol > 0.0) || sweeps < 1) {
    throw ConfigError("[envelope] needs lo < hi, h > 0, tol > 0, max_sweeps >= 1");
  }
  Outcome o;
  o.report["preset"] = preset;
  const DiagLattice* lattice = nullptr;
  std::optional<T4EnvelopeComparison> cmp;
  std::optional<EnvelopeResult> env;
  if (preset == "t4") {
    cmp = t4_envelope_comparison(lo, hi, h, tol, static_cast<int>(sweeps));
    lattice = &cmp->envelope.lattice;
    o.report["comparison"] = to_json(*cmp);
    o.report["hausdorff_bound"] = 2.0 * h;
    o.invariants_pass = cmp->envelope.converged && cmp->hausdorff <= 2.0 * h && cmp->max_at_K <= 1e-9;
    if (!cmp->envelope.converged) o.failure_code = kExitNumeric;
  } else if (preset == "custom") {
    const std::vector<Mat> pts = cfg.get_mats("envelope", "points", 1, 2);
    if (pts.empty()) throw ConfigError("[envelope] points: empty point list (use x,y;x,y;...)");
    auto f = [&](double x, double y) {
      double d = std::numeric_limits<double>::infinity();
      for (const Mat& p : pts) d = std::min(d, std::hypot(x - p(0, 0), y - p(0, 1)));
      return d;
    };
    env = separately_convex_envelope(DiagLattice::from_function(lo, hi, h, f), tol, static_cast<int>(sweeps));
    lattice = &env->lattice;
    std::size_t zeros = 0;
    for (double v : lattice->values()) zeros += v <= 1e-9 ? 1 : 0;
    o.report["converged"] = env->converged;
    o.report["sweeps"] = env->sweeps;
    o.report["last_change"] = env->last_change;
    o.report["zero_points"] = zeros;
    o.invariants_pass = env->converged;
  } else {
    throw ConfigError("[envelope] preset must be t4 or custom");
  }
  std::ofstream csv(ctx.out / "envelope.csv", std::ios::binary);
  lattice->write_csv(csv);
  return o;
}

// ------------------------------------------------------------------------------------------ laminate

std::vector<std::string> split_fields(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

Outcome cmd_laminate(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const std::string preset = cfg.get_string("laminate", "preset", cfg.has("laminate", "root") ? "custom" : "t4_staircase");
  Laminate nu = Laminate::dirac(Mat(2, 2, 0.0));
  std::size_t m = 2, n = 2;
  if (preset == "t4_staircase") {
    const Mat eta = cfg.get_mat("laminate", "eta", 2, 2, Mat(2, 2, 0.0));
    const long depth = cfg.get_int("laminate", "depth", 4);
    if (depth < 1) throw ConfigError("[laminate] depth must be >= 1");
    nu = t4_staircase(eta, static_cast<int>(depth));
  } else if (preset == "custom") {
    m = read_dim(cfg, "laminate", "m", 2);
    n = read_dim(cfg, "laminate", "n", 2);
    nu = Laminate::dirac(cfg.require_mat("laminate", "root", m, n));
    // splits = k | eta1 | eta2 | s ; k | eta1 | eta2 | s ...
    for (const std::string& rec : split_fields(cfg.get_string("laminate", "splits", ""), ';')) {
      if (rec.find_first_not_of(" \t") == std::string::npos) continue;
      const auto f = split_fields(rec, '|');
      if (f.size() != 4) throw ConfigError("[laminate] splits: each record needs k | eta1 | eta2 | s");
      const double k = parse_double(f[0], "[laminate] splits");
      if (k < 0 || k != std::floor(k)) throw ConfigError("[laminate] splits: atom index must be a non-negative integer");
      const Vec e1 = parse_vec(f[1], "[laminate] splits"), e2 = parse_vec(f[2], "[laminate] splits");
      if (e1.size() != m * n || e2.size() != m * n) throw ConfigError("[laminate] splits: matrices need m*n entries");
      nu = nu.split(static_cast<std::size_t>(k), Mat(m, n, e1), Mat(m, n, e2), parse_double(f[3], "[laminate] splits"));
    }
  } else {
    throw ConfigError("[laminate] preset must be t4_staircase or custom");
  }
  m = nu.root().rows();
  n = nu.root().cols();

  std::vector<std::string> tests;
  for (auto t : split_fields(cfg.get_string("laminate", "tests", m == 2 && n == 2 ? "norm,plus_det,minus_det" : "norm"), ',')) {
    t.erase(std::remove_if(t.begin(), t.end(), [](unsigned char ch) { return std::isspace(ch); }), t.end());
    if (!t.empty()) tests.push_back(t);
  }
  Outcome o;
  o.report["preset"] = preset;
  o.report["laminate"] = nu.to_json();
  const Mat bary = nu.barycenter();
  const double drift = hs_norm(bary - nu.root());
  o.report["barycenter"] = to_json(bary);
  o.report["barycenter_drift"] = drift;
  o.report["weight_sum"] = nu.weight_sum();
  o.report["order"] = nu.order();
  o.report["tree_depth"] = nu.tree().depth();
  o.report["replay_matches"] = nu.replay_matches();
  if (preset == "t4_staircase") o.report["corner_weight"] = t4_corner_weight(nu);
  bool ok = drift < 1e-12 && std::abs(nu.weight_sum() - 1.0) <= 1e-12 && nu.replay_matches();
  Json jj = Json::array();
  for (const std::string& t : tests) {
    TestFunction f;
    if (t == "norm") {
      f = TestFunction::norm();
    } else if ((t == "plus_det" || t == "minus_det") && m == 2 && n == 2) {
      f = t == "plus_det" ? TestFunction::plus_det() : TestFunction::minus_det();
    } else {
      throw ConfigError("[laminate] tests: unknown or inapplicable test '" + t + "'");
    }
    const JensenResult r = jensen_check(nu, f);
    jj.push_back({{"test", t}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"pass", r.pass}});
    ok = ok && r.pass;
  }
  o.report["jensen"] = std::move(jj);
  o.invariants_pass = ok;

  std::ofstream csv(ctx.out / "laminate_atoms.csv", std::ios::binary);
  csv << "weight," << matrix_header("x", m, n) << "\n";
  for (const Atom& a : nu.atoms()) {
    csv << format_double(a.weight) << ",";
    write_matrix_row(csv, a.matrix);
    csv << "\n";
  }
  return o;
}

// --------------------------------------------------------------------------------------------- patch

Outcome cmd_patch(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const std::size_t m = read_dim(cfg, "patch", "m", 2);
  const std::size_t n = read_dim(cfg, "patch", "n", 2);
  const Mat L = cfg.get_mat("patch", "L", m, n, m == n ? Mat::identity(n) : Mat(m, n, 0.0));
  Mat Bdef(m, n, 0.0), Adef(m, n, 0.0);
  if (m >= 2) Adef(1, 0) = 1.0;
  const Mat A = cfg.get_mat("patch", "A", m, n, Adef);
  const Mat B = cfg.get_mat("patch", "B", m, n, Bdef);
  const double lambda = cfg.get_double("patch", "lambda", 0.5);
  const double tau = cfg.get_double("patch", "tau", 0.1);
  const Box omega = read_domain(cfg, "patch", n);
  const std::size_t samples = cfg.get_size("patch", "samples", 512 * 512);
  const std::size_t csv_samples = cfg.get_size("patch", "csv_samples", n <= 2 ? 128 : 16);
  if (samples < 4 || csv_samples < 1) throw ConfigError("[patch] samples and csv_samples must be positive");

  const LinearConstraint c(L, 0.0);
  const RankOnePair pair = RankOnePair::from_matrices(A, B);
  const OscillationPatch patch = make_patch(c, pair, lambda, omega, tau);
  const PatchPropertyReport props = check_patch_properties(patch, tau, samples);

  Outcome o;
  o.report["patch"] = patch.to_json();
  o.report["properties"] = props.to_json();
  o.invariants_pass = props.all();

  std::ofstream csv(ctx.out / "patch_field.csv", std::ios::binary);
  std::string head;
  for (std::size_t j = 0; j < n; ++j) head += "x" + std::to_string(j + 1) + ",";
  for (std::size_t i = 0; i < m; ++i) head += "v" + std::to_string(i + 1) + ",";
  csv << head << matrix_header("g", m, n) << ",region\n";
  std::size_t total = 1;
  for (std::size_t j = 0; j < n; ++j) total *= csv_samples + 1;
  Vec x(n);
  for (std::size_t lin = 0; lin < total; ++lin) {
    std::size_t rem = lin;
    for (std::size_t j = n; j-- > 0;) {
      const std::size_t k = rem % (csv_samples + 1);
      rem /= csv_samples + 1;
      x[j] = k == csv_samples ? omega.hi[j]
                              : omega.lo[j] + omega.extent(j) * static_cast<double>(k) / static_cast<double>(csv_samples);
    }
    const PatchSample s = patch.evaluate(x);
    for (double v : x) csv << format_double(v) << ",";
    for (double v : s.value) csv << format_double(v) << ",";
    write_matrix_row(csv, s.gradient);
    csv << "," << to_string(s.region) << "\n";
  }
  return o;
}

// ------------------------------------------------------------------------------- eikonal / t4

std::size_t grid_of(const Config& cfg) {
  const std::size_t g = cfg.get_size("run", "grid", 256);
  if (g < 1) throw ConfigError("[run] grid must be positive");
  return g;
}

Outcome cmd_eikonal(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const std::size_t m = read_dim(cfg, "eikonal", "m", 2);
  const std::size_t n = read_dim(cfg, "eikonal", "n", 2);
  EikonalProblem p;
  p.domain = read_domain(cfg, "eikonal", n);
  Mat eta_def(m, n, 0.0);
  eta_def(0, 0) = 0.5;
  p.v.eta = cfg.get_mat("eikonal", "eta", m, n, eta_def);
  p.v.gamma = cfg.get_vec("eikonal", "gamma", Vec(m, 0.0));
  if (p.v.gamma.size() != m) throw ConfigError("[eikonal] gamma must have m entries");
  Vec a_def(m, 0.0), b_def(n, 0.0);
  a_def[m > 1 ? 1 : 0] = 1.0;
  b_def[0] = 1.0;
  p.a = cfg.get_vec("eikonal", "a", a_def);
  p.b = cfg.get_vec("eikonal", "b", b_def);
  if (p.a.size() != m || p.b.size() != n) throw ConfigError("[eikonal] a needs m entries and b needs n entries");
  const Mat L = cfg.get_mat("eikonal", "L", m, n, m == n ? Mat::identity(n) : Mat(m, n, 0.0));
  const double t = cfg.get_double("eikonal", "t", hs_dot(L, p.v.eta));
  p.c = LinearConstraint(L, t);
  p.epsilon = cfg.get_double("eikonal", "epsilon", 0.1);
  p.stages = cfg.get_size("eikonal", "stages", 3);
  const std::string method = cfg.get_string("eikonal", "method", "in_approx");
  if (method == "in_approx") {
    p.method = EikonalMethod::InApprox;
  } else if (method == "baire") {
    p.method = EikonalMethod::Baire;
  } else {
    throw ConfigError("[eikonal] method must be in_approx or baire");
  }
  p.tol_dist = cfg.get_double("eikonal", "tol_dist", 0.0);
  p.delta1 = cfg.get_double("eikonal", "delta1", 0.5);
  p.grid = grid_of(cfg);
  p.seed = static_cast<unsigned>(ctx.seed);
  p.threads = ctx.threads;

  const auto hyps = eikonal_hypotheses(p);
  write_json(ctx.out / "eikonal_hypotheses.json", to_json(hyps));
  EikonalSolution sol = solve_eikonal(p);
  std::ofstream csv(ctx.out / "eikonal_field.csv", std::ios::binary);
  sol.field.write_csv(csv);
  write_json(ctx.out / "eikonal_stages.json", sol.report.stages);

  const EikonalReport& r = sol.report;
  Outcome o;
  o.report = r.to_json();
  Json inv;
  inv["constraint_residual_below_1e-8"] = r.max_residual < 1e-8;
  inv["boundary_trace_exact"] = r.boundary_trace_error == 0.0;
  inv["sup_distance_below_epsilon"] = r.sup_distance < p.epsilon;
  inv["budgets_honored"] = r.budgets_honored;
  inv["input_unit_norm_fraction_zero"] = r.input_unit_norm_fraction == 0.0;
  inv["hypotheses"] = all_required_pass(r.hypotheses);
  bool ok = true;
  for (const auto& [k, v] : inv.items()) ok = ok && v.get<bool>();
  o.report["invariants"] = std::move(inv);
  o.invariants_pass = ok;
  return o;
}

Outcome cmd_t4(Context& ctx) {
  const Config& cfg = ctx.cfg;
  T4Problem p;
  p.domain = read_domain(cfg, "t4", 2);
  p.k = cfg.get_double("t4", "k", 1.0);
  p.v.eta = cfg.get_mat("t4", "eta", 2, 2, Mat(2, 2, 0.0));
  p.v.gamma = cfg.get_vec("t4", "gamma", Vec(2, 0.0));
  if (p.v.gamma.size() != 2) throw ConfigError("[t4] gamma must have 2 entries");
  p.epsilon = cfg.get_double("t4", "epsilon", 0.25);
  p.depth = static_cast<int>(cfg.get_int("t4", "depth", 0));
  p.stages = static_cast<int>(cfg.get_int("t4", "stages", 3));
  p.grid = grid_of(cfg);
  p.seed = static_cast<unsigned>(ctx.seed);
  p.threads = ctx.threads;

  write_json(ctx.out / "t4_hypotheses.json", to_json(t4_hypotheses(p)));
  T4Solution sol = solve_t4(p);
  std::ofstream csv(ctx.out / "t4_field.csv", std::ios::binary);
  sol.field.write_csv(csv);
  write_json(ctx.out / "t4_stages.json", sol.report.solve.to_json());

  const T4Report& r = sol.report;
  Outcome o;
  o.report = r.to_json();
  bool rigid = true;
  for (const auto& w : r.witnesses) rigid = rigid && w.rank == 2;
  Json inv;
  inv["constraint_residual_below_1e-8"] = r.max_residual < 1e-8;
  inv["boundary_trace_exact"] = r.boundary_trace_error == 0.0;
  inv["sup_distance_below_epsilon"] = r.sup_distance < p.epsilon;
  inv["budgets_honored"] = r.budgets_honored;
  inv["rank_witnesses"] = rigid;
  inv["hypotheses"] = all_required_pass(r.hypotheses);
  bool ok = true;
  for (const auto& [k, v] : inv.items()) ok = ok && v.get<bool>();
  o.report["invariants"] = std::move(inv);
  o.invariants_pass = ok;
  return o;
}

// -------------------------------------------------------------------------------------------- report

Outcome cmd_report(Context& ctx) {
  std::vector<fs::path> inputs;
  const std::string listed = ctx.cfg.get_string("report", "inputs", "");
  for (auto s : split_fields(listed, ',')) {
    s.erase(0, s.find_first_not_of(" \t"));
    s.erase(s.find_last_not_of(" \t") + 1);
    if (!s.empty()) inputs.emplace_back(s);
  }
  if (inputs.empty() && fs::is_directory(ctx.out)) {
    for (const auto& e : fs::directory_iterator(ctx.out)) {
      const std::string name = e.path().filename().string();
      if (name.size() > 12 && name.ends_with("_report.json") && name != "report_report.json") inputs.push_back(e.path());
    }
    std::sort(inputs.begin(), inputs.end());
  }
  if (inputs.empty()) throw ConfigError("report: no *_report.json files found and no [report] inputs given");
  Outcome o;
  Json rows = Json::array();
  for (const fs::path& p : inputs) {
    std::ifstream in(p);
    if (!in) throw ConfigError("report: cannot read " + p.string());
    Json j;
    try {
      j = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw ConfigError("report: " + p.string() + " is not valid JSON");
    }
    Json row;
    row["file"] = p.filename().string();
    row["command"] = j.value("command", "");
    const bool pass = j.contains("status") && j["status"].value("invariants_pass", false);
    row["invariants_pass"] = pass;
    row["exit_code"] = j.contains("status") ? j["status"].value("exit_code", -1) : -1;
    ctx.log << (pass ? "PASS " : "FAIL ") << row["command"].get<std::string>() << "  (" << row["file"].get<std::string>()
            << ")\n";
    o.invariants_pass = o.invariants_pass && pass;
    rows.push_back(std::move(row));
  }
  o.report["reports"] = std::move(rows);
  return o;
}

using Handler = std::function<Outcome(Context&)>;

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h{
      {"hull", cmd_hull},         {"envelope", cmd_envelope}, {"laminate", cmd_laminate}, {"patch", cmd_patch},
      {"eikonal", cmd_eikonal},   {"t4", cmd_t4},             {"report", cmd_report},
  };
  return h;
}

int exit_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::NumericConvergence:
    case ErrorKind::Infeasible:
      return kExitNumeric;
    default:
      return kExitPrecondition;
  }
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"hull", "envelope", "laminate", "patch", "eikonal", "t4", "report"};
  return names;
}

int run_command(const std::string& command, const RunOptions& opt, std::ostream& log, std::ostream& err) {
  const auto it = handlers().find(command);
  if (it == handlers().end()) {
    err << "error: unknown command '" << command << "'\n";
    return kExitConfig;
  }
  Json doc;
  doc["command"] = command;
  try {
    const Config cfg = opt.config_path ? Config::load(*opt.config_path) : Config::parse(opt.config_text.value_or(""));
    cfg.validate(schema_for(command));
    if (cfg.has("run", "command") && cfg.get_string("run", "command", "") != command) {
      throw ConfigError("[run] command = " + cfg.get_string("run", "command", "") + " does not match '" + command + "'");
    }
    const long seed = cfg.get_int("run", "seed", 0);
    const long threads = cfg.get_int("run", "threads", 1);
    if (seed < 0) throw ConfigError("[run] seed must be non-negative");
    if (threads < 1) throw ConfigError("[run] threads must be >= 1");
    fs::path out(opt.out_dir);
    fs::create_directories(out);
    Context ctx{cfg, out, opt.seed.value_or(static_cast<unsigned long>(seed)),
                opt.threads.value_or(static_cast<std::size_t>(threads)), log};
    if (ctx.threads < 1) throw ConfigError("--threads must be >= 1");

    doc["config"] = {{"path", opt.config_path.value_or("")}, {"text", cfg.text()}, {"values", cfg.to_json()}};
    doc["effective"] = {{"seed", ctx.seed}, {"threads", ctx.threads}, {"out", out.string()}};
    Outcome o = it->second(ctx);
    const int code = o.invariants_pass ? kExitOk : o.failure_code;
    doc["result"] = std::move(o.report);
    doc["status"] = {{"invariants_pass", o.invariants_pass}, {"exit_code", code}};
    write_json(out / (command + "_report.json"), doc);
    log << command << ": " << (o.invariants_pass ? "ok" : "invariant check failed") << " -> "
        << (out / (command + "_report.json")).string() << "\n";
    return code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitOther;
  }
}

}  // namespace cvxint::cli
