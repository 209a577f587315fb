#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "cvxint/io.hpp"
#include "cvxint/matcore.hpp"

namespace cvxint {

struct Atom {
  double weight;
  Mat matrix;
};

/// One split of the construction log: atom `atom` = s·eta1 + (1−s)·eta2.
struct SplitRecord {
  std::size_t atom;
  Mat eta1;
  Mat eta2;
  double s;
};

/// Binary-tree view of a split log; node 0 is the root Dirac.
struct SplitTree {
  struct Node {
    Mat matrix;
    double weight = 1.0;
    double s = 0.0;
    int left = -1;
    int right = -1;
    int atom = -1;  // atom index for leaves
    bool is_leaf() const { return left < 0; }
  };
  std::vector<Node> nodes;
  int depth() const;
};

inline constexpr double kAtomDistinctness = 1e-10;

/// Finitely supported probability measure built from a Dirac by rank-one splits.
class Laminate {
 public:
  static Laminate dirac(const Mat& xi);

  const Mat& root() const noexcept { return root_; }
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  const std::vector<SplitRecord>& splits() const noexcept { return splits_; }
  std::size_t order() const noexcept { return splits_.size(); }

  Laminate split(std::size_t k, const Mat& eta1, const Mat& eta2, double s) const;
  Mat barycenter() const;
  double weight_sum() const;
  /// Index of the atom within `tol` of xi, or -1.
  int find_atom(const Mat& xi, double tol = kAtomDistinctness) const;

  /// Rebuilds the atom list from the root by replaying the split log.
  static Laminate replay(const Mat& root, const std::vector<SplitRecord>& log);
  bool replay_matches() const;
  SplitTree tree() const;

  Json to_json() const;
  static Laminate from_json(const Json& j);

 private:
  Mat root_;
  std::vector<Atom> atoms_;
  std::vector<SplitRecord> splits_;
};

Laminate dirac(const Mat& xi);
Laminate split(const Laminate& nu, std::size_t k, const Mat& eta1, const Mat& eta2, double s);
Mat barycenter(const Laminate& nu);

enum class TestTag { Norm, PlusDet, MinusDet, DistToConvexSet, User };

std::string_view to_string(TestTag tag);

struct TestFunction {
  std::function<double(const Mat&)> evaluator;
  TestTag tag = TestTag::User;

  double operator()(const Mat& xi) const { return evaluator(xi); }

  static TestFunction norm();
  static TestFunction plus_det();
  static TestFunction minus_det();
  /// Distance to the closed Hilbert-Schmidt ball with given center and radius.
  static TestFunction dist_to_ball(const Mat& center, double radius);
  static TestFunction user(std::function<double(const Mat&)> f);
};

struct JensenResult {
  double lhs;
  double rhs;
  bool pass;
};

JensenResult jensen_check(const Laminate& nu, const TestFunction& f);

/// Staircase laminate supported on the T4 corners plus remainder atoms of total weight ≤ 2^{−depth}.
Laminate t4_staircase(const Mat& eta, int depth);

/// Total weight of atoms within `tol` of one of the four T4 corners.
double t4_corner_weight(const Laminate& nu, double tol = 1e-6);

}  // namespace cvxint
