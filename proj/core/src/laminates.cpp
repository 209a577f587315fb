#include "cvxint/laminates.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "cvxint/error.hpp"
#include "cvxint/hulls.hpp"

namespace cvxint {

int SplitTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  // Children always have larger indices than their parent.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    if (n.left >= 0) {
      d[static_cast<std::size_t>(n.left)] = d[i] + 1;
      d[static_cast<std::size_t>(n.right)] = d[i] + 1;
      best = std::max(best, d[i] + 1);
    }
  }
  return best;
}

Laminate Laminate::dirac(const Mat& xi) {
  if (!xi.all_finite()) fail(ErrorKind::InvalidArgument, "Dirac at a non-finite matrix");
  Laminate nu;
  nu.root_ = xi;
  nu.atoms_.push_back(Atom{1.0, xi});
  return nu;
}

Laminate Laminate::split(std::size_t k, const Mat& eta1, const Mat& eta2, double s) const {
  if (k >= atoms_.size()) fail(ErrorKind::InvalidArgument, "atom index out of range");
  if (!(s > 0.0 && s < 1.0)) fail(ErrorKind::BadWeight, "split weight must lie in (0,1)");
  const Mat& xi = atoms_[k].matrix;
  if (!eta1.same_shape(xi) || !eta2.same_shape(xi)) fail(ErrorKind::ShapeMismatch, "split shapes");
  const Mat diff = eta1 - eta2;
  if (max_abs(diff) == 0.0 || rank(diff) != 1) fail(ErrorKind::NotRankOne, "split endpoints are not rank-one connected");
  const Mat combo = s * eta1 + (1.0 - s) * eta2;
  const double scale = std::max({1.0, hs_norm(eta1), hs_norm(eta2)});
  if (hs_norm(combo - xi) > 1e-10 * scale) {
    fail(ErrorKind::NotOnSegment, "atom is not s·eta1 + (1−s)·eta2");
  }
  for (std::size_t j = 0; j < atoms_.size(); ++j) {
    if (j == k) continue;
    if (hs_norm(atoms_[j].matrix - eta1) <= kAtomDistinctness ||
        hs_norm(atoms_[j].matrix - eta2) <= kAtomDistinctness) {
      fail(ErrorKind::DuplicateAtom, "split endpoint coincides with atom " + std::to_string(j));
    }
  }
  Laminate out = *this;
  const double w = atoms_[k].weight;
  out.atoms_[k] = Atom{s * w, eta1};
  out.atoms_.push_back(Atom{(1.0 - s) * w, eta2});
  out.splits_.push_back(SplitRecord{k, eta1, eta2, s});
  return out;
}

Mat Laminate::barycenter() const {
  // Compensated summation keeps the drift well below the 1e-12 contract for long logs.
  Mat sum(root_.rows(), root_.cols());
  Mat comp(root_.rows(), root_.cols());
  for (const Atom& a : atoms_) {
    for (std::size_t i = 0; i < sum.size(); ++i) {
      const double y = a.weight * a.matrix.data()[i] - comp.data()[i];
      const double t = sum.data()[i] + y;
      comp.data()[i] = (t - sum.data()[i]) - y;
      sum.data()[i] = t;
    }
  }
  return sum;
}

double Laminate::weight_sum() const {
  double s = 0.0, c = 0.0;
  for (const Atom& a : atoms_) {
    const double y = a.weight - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

int Laminate::find_atom(const Mat& xi, double tol) const {
  for (std::size_t j = 0; j < atoms_.size(); ++j) {
    if (hs_norm(atoms_[j].matrix - xi) <= tol) return static_cast<int>(j);
  }
  return -1;
}

Laminate Laminate::replay(const Mat& root, const std::vector<SplitRecord>& log) {
  Laminate nu = dirac(root);
  for (const SplitRecord& r : log) nu = nu.split(r.atom, r.eta1, r.eta2, r.s);
  return nu;
}

bool Laminate::replay_matches() const {
  const Laminate again = replay(root_, splits_);
  if (again.atoms_.size() != atoms_.size()) return false;
  for (std::size_t j = 0; j < atoms_.size(); ++j) {
    if (again.atoms_[j].weight != atoms_[j].weight) return false;
    if (again.atoms_[j].matrix.entries() != atoms_[j].matrix.entries()) return false;
  }
  return true;
}

SplitTree Laminate::tree() const {
  SplitTree t;
  t.nodes.push_back(SplitTree::Node{root_, 1.0, 0.0, -1, -1, -1});
  std::vector<int> atom_node{0};
  for (const SplitRecord& r : splits_) {
    const int parent = atom_node.at(r.atom);
    const double w = t.nodes[static_cast<std::size_t>(parent)].weight;
    const int left = static_cast<int>(t.nodes.size());
    t.nodes.push_back(SplitTree::Node{r.eta1, r.s * w, 0.0, -1, -1, -1});
    const int right = static_cast<int>(t.nodes.size());
    t.nodes.push_back(SplitTree::Node{r.eta2, (1.0 - r.s) * w, 0.0, -1, -1, -1});
    SplitTree::Node& p = t.nodes[static_cast<std::size_t>(parent)];
    p.left = left;
    p.right = right;
    p.s = r.s;
    atom_node[r.atom] = left;
    atom_node.push_back(right);
  }
  for (std::size_t k = 0; k < atom_node.size(); ++k) {
    t.nodes[static_cast<std::size_t>(atom_node[k])].atom = static_cast<int>(k);
  }
  return t;
}

Json Laminate::to_json() const {
  Json j;
  Json atoms = Json::array();
  for (const Atom& a : atoms_) atoms.push_back(Json::array({a.weight, cvxint::to_json(a.matrix)}));
  j["atoms"] = std::move(atoms);
  Json splits = Json::array();
  for (const SplitRecord& r : splits_) {
    Json s;
    s["atom"] = r.atom;
    s["eta1"] = cvxint::to_json(r.eta1);
    s["eta2"] = cvxint::to_json(r.eta2);
    s["s"] = r.s;
    splits.push_back(std::move(s));
  }
  j["splits"] = std::move(splits);
  j["root"] = cvxint::to_json(root_);
  j["order"] = order();
  return j;
}

Laminate Laminate::from_json(const Json& j) {
  const Mat root = mat_from_json(j.at("root"));
  std::vector<SplitRecord> log;
  for (const Json& s : j.at("splits")) {
    log.push_back(SplitRecord{s.at("atom").get<std::size_t>(), mat_from_json(s.at("eta1")),
                              mat_from_json(s.at("eta2")), s.at("s").get<double>()});
  }
  return replay(root, log);
}

Laminate dirac(const Mat& xi) { return Laminate::dirac(xi); }

Laminate split(const Laminate& nu, std::size_t k, const Mat& eta1, const Mat& eta2, double s) {
  return nu.split(k, eta1, eta2, s);
}

Mat barycenter(const Laminate& nu) { return nu.barycenter(); }

std::string_view to_string(TestTag tag) {
  switch (tag) {
    case TestTag::Norm: return "norm";
    case TestTag::PlusDet: return "plus_det";
    case TestTag::MinusDet: return "minus_det";
    case TestTag::DistToConvexSet: return "dist_to_convex_set";
    case TestTag::User: return "user";
  }
  return "user";
}

namespace {

double det2(const Mat& xi) {
  if (xi.rows() != 2 || xi.cols() != 2) fail(ErrorKind::ShapeMismatch, "determinant test functions need 2x2 input");
  return xi(0, 0) * xi(1, 1) - xi(0, 1) * xi(1, 0);
}

}  // namespace

TestFunction TestFunction::norm() { return {[](const Mat& x) { return hs_norm(x); }, TestTag::Norm}; }
TestFunction TestFunction::plus_det() { return {[](const Mat& x) { return det2(x); }, TestTag::PlusDet}; }
TestFunction TestFunction::minus_det() { return {[](const Mat& x) { return -det2(x); }, TestTag::MinusDet}; }

TestFunction TestFunction::dist_to_ball(const Mat& center, double radius) {
  if (radius < 0.0) fail(ErrorKind::InvalidArgument, "ball radius must be nonnegative");
  return {[center, radius](const Mat& x) { return std::max(0.0, hs_norm(x - center) - radius); },
          TestTag::DistToConvexSet};
}

TestFunction TestFunction::user(std::function<double(const Mat&)> f) { return {std::move(f), TestTag::User}; }

JensenResult jensen_check(const Laminate& nu, const TestFunction& f) {
  double lhs = 0.0;
  for (const Atom& a : nu.atoms()) lhs += a.weight * f(a.matrix);
  const double rhs = f(nu.barycenter());
  return JensenResult{lhs, rhs, lhs >= rhs - 1e-10};
}

namespace {

// Lines of the T4 hull. Line i carries corner A_i and ends at J_i on the square.
struct T4Line {
  bool horizontal;   // y fixed, coordinate is x
  double fixed;      // the fixed coordinate value
  double lo, hi;     // range of the free coordinate inside the hull
};

constexpr T4Line kLines[4] = {
    {true, -1.0, -1.0, 3.0},   // y = −1 : A1 = (3,−1), J1 = (−1,−1)
    {false, 1.0, -1.0, 3.0},   // x = 1  : A2 = (1,3),  J2 = (1,−1)
    {true, 1.0, -3.0, 1.0},    // y = 1  : A3 = (−3,1), J3 = (1,1)
    {false, -1.0, -3.0, 1.0},  // x = −1 : A4 = (−1,−3), J4 = (−1,1)
};
// J_k continues along line kLineOfJ[k]: J2→A1/J1, J1→A4/J4, J4→A3/J3, J3→A2/J2.
constexpr int kLineOfJ[4] = {3, 0, 1, 2};

double free_coord(const T4Line& L, const Mat& xi) { return L.horizontal ? xi(0, 0) : xi(1, 1); }

bool on_line(const T4Line& L, const Mat& xi) {
  const double fixed = L.horizontal ? xi(1, 1) : xi(0, 0);
  const double c = free_coord(L, xi);
  return std::abs(fixed - L.fixed) <= 1e-12 && c >= L.lo - 1e-12 && c <= L.hi + 1e-12;
}

Mat point_on_line(const T4Line& L, double c) {
  return L.horizontal ? Mat::diag2(c, L.fixed) : Mat::diag2(L.fixed, c);
}

bool occupied(const Laminate& nu, const Mat& xi, std::size_t except) {
  const int j = nu.find_atom(xi);
  return j >= 0 && static_cast<std::size_t>(j) != except;
}

// Splits atom k, lying on line i, into a corner-side atom and the line's J end.
// Occupied endpoints are nudged along the line towards each other, staying inside the hull.
Laminate split_on_line(const Laminate& nu, std::size_t k, int i, std::deque<std::size_t>& remainder) {
  const T4Config t4 = T4Config::standard();
  const T4Line& L = kLines[i];
  const Mat& P = nu.atoms()[k].matrix;
  const double cP = free_coord(L, P);
  const double cA0 = free_coord(L, t4.A[static_cast<std::size_t>(i)]);
  const double cJ0 = free_coord(L, t4.J[static_cast<std::size_t>(i)]);
  const double dir = cJ0 > cA0 ? 1.0 : -1.0;  // from A towards J
  constexpr double kNudge = 1e-8;
  double cA = cA0;
  for (int v = 1; occupied(nu, point_on_line(L, cA), k); ++v) cA = cA0 + dir * kNudge * v;
  double cJ = cJ0;
  for (int v = 1; occupied(nu, point_on_line(L, cJ), k); ++v) cJ = cJ0 - dir * kNudge * v;
  const double mu = (cP - cJ) / (cA - cJ);
  Laminate out = nu.split(k, point_on_line(L, cA), point_on_line(L, cJ), mu);
  remainder.push_back(out.atoms().size() - 1);
  return out;
}

int line_for_point(const Mat& P) {
  const T4Config t4 = T4Config::standard();
  for (int k = 0; k < 4; ++k) {
    if (hs_norm(P - t4.J[static_cast<std::size_t>(k)]) <= 1e-12) return kLineOfJ[k];
  }
  for (int i = 0; i < 4; ++i) {
    if (on_line(kLines[i], P)) return i;
  }
  return -1;
}

}  // namespace

Laminate t4_staircase(const Mat& eta, int depth) {
  if (depth < 1) fail(ErrorKind::InvalidArgument, "staircase depth must be >= 1");
  if (!t4_hull_membership(eta)) fail(ErrorKind::NotInHull, "matrix is outside the T4 hull");
  const T4Config t4 = T4Config::standard();
  Mat start = Mat::diag2(eta(0, 0), eta(1, 1));
  for (const Mat& A : t4.A) {
    if (hs_norm(start - A) <= 1e-12) return dirac(eta);
  }
  Laminate nu = dirac(start);
  std::deque<std::size_t> remainder;
  const double x = start(0, 0), y = start(1, 1);
  if (line_for_point(start) < 0) {
    // Strict interior of the square: split horizontally onto the vertical edges.
    nu = nu.split(0, Mat::diag2(1.0, y), Mat::diag2(-1.0, y), (x + 1.0) / 2.0);
    remainder.push_back(0);
    remainder.push_back(1);
  } else {
    remainder.push_back(0);
  }
  const double budget = std::ldexp(1.0, -depth);
  auto remainder_weight = [&] {
    double w = 0.0;
    for (std::size_t k : remainder) w += nu.atoms()[k].weight;
    return w;
  };
  while (!remainder.empty() && remainder_weight() > budget) {
    const std::size_t k = remainder.front();
    remainder.pop_front();
    const int line = line_for_point(nu.atoms()[k].matrix);
    if (line < 0) fail(ErrorKind::NotInHull, "staircase left the hull skeleton");
    nu = split_on_line(nu, k, line, remainder);
  }
  return nu;
}

double t4_corner_weight(const Laminate& nu, double tol) {
  const T4Config t4 = T4Config::standard();
  double w = 0.0;
  for (const Atom& a : nu.atoms()) {
    for (const Mat& A : t4.A) {
      if (a.matrix.same_shape(A) && hs_norm(a.matrix - A) <= tol) {
        w += a.weight;
        break;
      }
    }
  }
  return w;
}

}  // namespace cvxint
