#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "cvxint/box.hpp"
#include "cvxint/laminates.hpp"
#include "cvxint/matcore.hpp"
#include "cvxint/oscillation.hpp"

namespace cvxint {

/// What a leaf of a realization stands for.
enum class LeafRole : std::uint8_t {
  Base,    // untouched input gradient
  Atom,    // a laminate atom
  Parent,  // margin or cutoff-zero region that still carries the pre-split gradient
};

std::string_view to_string(LeafRole r);

class Realization;
using RealizationPtr = std::shared_ptr<const Realization>;

/// Immutable node of a piecewise construction φ on the box [0, extent].
/// Subtrees are shared between all congruent placements, so one node may sit in many places.
class Realization {
 public:
  enum class Kind : std::uint8_t { Leaf, Split, Tiling };

  static RealizationPtr leaf(Vec extent, Mat nominal, int stage, LeafRole role, int atom = -1,
                             bool partial = false);
  static RealizationPtr split(Vec extent, std::shared_ptr<const OscillationPatch> patch, Mat nominal, int stage,
                              std::vector<RealizationPtr> children);
  static RealizationPtr tiling(Vec extent, std::vector<std::size_t> counts, RealizationPtr tile);

  Kind kind() const noexcept { return kind_; }
  const Vec& extent() const noexcept { return extent_; }
  /// Gradient the node realizes on average (the leaf value for leaves).
  const Mat& nominal() const noexcept { return nominal_; }
  int stage() const noexcept { return stage_; }
  LeafRole role() const noexcept { return role_; }
  int atom() const noexcept { return atom_; }
  bool partial() const noexcept { return partial_; }

  const OscillationPatch& patch() const { return *patch_; }
  const std::shared_ptr<const OscillationPatch>& patch_ptr() const noexcept { return patch_; }
  const std::vector<RealizationPtr>& children() const noexcept { return children_; }
  const std::vector<std::size_t>& counts() const noexcept { return counts_; }
  const RealizationPtr& tile() const noexcept { return tile_; }
  const Vec& tile_extent() const noexcept { return tile_extent_; }

  /// Rigorous bound on sup|φ| over the node's box.
  double sup_bound() const noexcept { return sup_bound_; }
  /// Nesting depth in split levels.
  int split_depth() const noexcept { return split_depth_; }

 private:
  Kind kind_ = Kind::Leaf;
  Vec extent_;
  Mat nominal_;
  int stage_ = 0;
  LeafRole role_ = LeafRole::Base;
  int atom_ = -1;
  bool partial_ = false;
  std::shared_ptr<const OscillationPatch> patch_;
  std::vector<RealizationPtr> children_;
  std::vector<std::size_t> counts_;
  RealizationPtr tile_;
  Vec tile_extent_;
  double sup_bound_ = 0.0;
  int split_depth_ = 0;
};

/// Result of locating a point in a realization.
struct RealizationHit {
  const Realization* leaf = nullptr;  // null when the point is in a ramp or cutoff band
  const Realization* owner = nullptr; // split node owning the exceptional region
  PatchRegion region = PatchRegion::Outside;
};

/// Adds φ(y) and ∇φ(y) for local coordinates y ∈ [0, extent] into value and grad.
RealizationHit accumulate(const Realization& root, std::span<const double> y, std::span<double> value, Mat& grad);

struct RealizeOptions {
  PatchGeometry geometry;
  /// Splits deeper than this become partial leaves.
  int max_depth = 16;
  /// Grid resolution that top-level tile counts must stay coprime with (0 = none).
  std::size_t grid_hint = 0;
  /// Seed-derived offset for the top-level tile count.
  unsigned jitter = 0;
  /// Smallest tile side, relative to the box, before a budget is declared unresolvable.
  double min_relative_tile = 1e-9;
  /// Absolute length below which margin and cutoff gap bands are not representable; splits that would
  /// need thinner bands become partial leaves (0 = no limit).
  double min_feature = 0.0;
};

struct BuildFlags {
  bool partial = false;                // some split was cut off by max_depth or min_feature
  bool unsupported_direction = false;  // some split direction was not axis-parallel
  bool budget_infeasible = false;      // tiles would have to be smaller than min_relative_tile
};

/// Realizes the laminate's split tree on [0, extent] with sup|φ| ≤ budget.
/// `align` applies the grid-coprime and jitter rules to the top-level tile count.
RealizationPtr realize_tree(const LinearConstraint& c, const Laminate& nu, const Vec& extent, double budget,
                            int stage, bool align, const RealizeOptions& opt, BuildFlags& flags);

/// Exact volume fractions of a realization: per laminate atom index, plus the parent and exceptional parts.
struct VolumeFractions {
  std::vector<double> atoms;
  double parent = 0.0;
  double base = 0.0;
  double exceptional = 0.0;
};

VolumeFractions volume_fractions(const Realization& root, std::size_t atom_count);

/// Number of distinct nodes (after sharing) reachable from root.
std::size_t distinct_nodes(const Realization& root);

}  // namespace cvxint
