#include "cvxint/realization.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "cvxint/error.hpp"

namespace cvxint {

std::string_view to_string(LeafRole r) {
  switch (r) {
    case LeafRole::Base: return "base";
    case LeafRole::Atom: return "atom";
    case LeafRole::Parent: return "parent";
  }
  return "base";
}

RealizationPtr Realization::leaf(Vec extent, Mat nominal, int stage, LeafRole role, int atom, bool partial) {
  auto r = std::make_shared<Realization>();
  r->kind_ = Kind::Leaf;
  r->extent_ = std::move(extent);
  r->nominal_ = std::move(nominal);
  r->stage_ = stage;
  r->role_ = role;
  r->atom_ = atom;
  r->partial_ = partial;
  return r;
}

RealizationPtr Realization::split(Vec extent, std::shared_ptr<const OscillationPatch> patch, Mat nominal,
                                  int stage, std::vector<RealizationPtr> children) {
  if (children.size() != patch->slot_count()) fail(ErrorKind::InvalidArgument, "split needs one child per slot");
  auto r = std::make_shared<Realization>();
  r->kind_ = Kind::Split;
  r->extent_ = std::move(extent);
  r->nominal_ = std::move(nominal);
  r->stage_ = stage;
  r->role_ = LeafRole::Parent;
  double plateau = std::max(children[0]->sup_bound(), children[1]->sup_bound());
  double quiet = 0.0;
  int depth = 0;
  for (std::size_t s = 0; s < children.size(); ++s) {
    if (s >= 2) quiet = std::max(quiet, children[s]->sup_bound());
    depth = std::max(depth, children[s]->split_depth());
  }
  r->sup_bound_ = std::max(patch->sup_bound() + plateau, quiet);
  r->split_depth_ = depth + 1;
  r->patch_ = std::move(patch);
  r->children_ = std::move(children);
  return r;
}

RealizationPtr Realization::tiling(Vec extent, std::vector<std::size_t> counts, RealizationPtr tile) {
  auto r = std::make_shared<Realization>();
  r->kind_ = Kind::Tiling;
  r->tile_extent_ = tile->extent();
  r->extent_ = std::move(extent);
  r->nominal_ = tile->nominal();
  r->stage_ = tile->stage();
  r->role_ = tile->role();
  r->counts_ = std::move(counts);
  r->sup_bound_ = tile->sup_bound();
  r->split_depth_ = tile->split_depth();
  r->tile_ = std::move(tile);
  return r;
}

RealizationHit accumulate(const Realization& root, std::span<const double> y0, std::span<double> value, Mat& grad) {
  const std::size_t n = y0.size();
  std::array<double, 8> y{};
  std::copy(y0.begin(), y0.end(), y.begin());
  const Realization* node = &root;
  PatchRegion last = PatchRegion::Outside;
  PatchLocation loc;
  for (;;) {
    switch (node->kind()) {
      case Realization::Kind::Leaf:
        return {node, nullptr, last};
      case Realization::Kind::Tiling: {
        const Vec& te = node->tile_extent();
        for (std::size_t j = 0; j < n; ++j) {
          const double f = std::floor(y[j] / te[j]);
          const double top = static_cast<double>(node->counts()[j] - 1);
          const double idx = std::clamp(f, 0.0, top);
          y[j] -= idx * te[j];
        }
        node = node->tile().get();
        break;
      }
      case Realization::Kind::Split: {
        const PatchRegion region =
            node->patch().accumulate(std::span<const double>(y.data(), n), value, grad, &loc);
        if (region != PatchRegion::PlateauA && region != PatchRegion::PlateauB && region != PatchRegion::Margin &&
            region != PatchRegion::CutoffZero) {
          return {nullptr, node, region};
        }
        for (std::size_t j = 0; j < n; ++j) y[j] -= loc.box.lo[j];
        last = region;
        node = node->children()[loc.slot].get();
        break;
      }
    }
  }
}

namespace {

bool resolvable_impl(const Vec& extent, const RealizeOptions& opt) {
  if (opt.min_feature <= 0.0) return true;
  const double thinnest = *std::min_element(extent.begin(), extent.end());
  return thinnest * std::min(opt.geometry.margin, opt.geometry.cutoff_gap) >= opt.min_feature;
}

std::vector<std::size_t> near_cube_counts(const Vec& extent) {
  const double mn = *std::min_element(extent.begin(), extent.end());
  std::vector<std::size_t> k(extent.size());
  for (std::size_t j = 0; j < extent.size(); ++j) {
    k[j] = static_cast<std::size_t>(std::max(1.0, std::round(extent[j] / mn)));
  }
  return k;
}

Vec divide(const Vec& e, const std::vector<std::size_t>& k) {
  Vec out(e.size());
  for (std::size_t j = 0; j < e.size(); ++j) out[j] = e[j] / static_cast<double>(k[j]);
  return out;
}

struct Builder {
  const LinearConstraint& c;
  const SplitTree& tree;
  int stage;
  const RealizeOptions& opt;
  BuildFlags& flags;
  std::map<std::pair<int, Vec>, RealizationPtr> memo;

  RealizationPtr parent_leaf(const Vec& extent, int idx, bool partial) const {
    return Realization::leaf(extent, tree.nodes[static_cast<std::size_t>(idx)].matrix, stage, LeafRole::Parent, -1,
                             partial);
  }

  // Realizes tree node idx on an arbitrary box: near-cube tiling around a split.
  RealizationPtr node(int idx, const Vec& extent, int depth) {
    const auto& nd = tree.nodes[static_cast<std::size_t>(idx)];
    if (nd.is_leaf()) return Realization::leaf(extent, nd.matrix, stage, LeafRole::Atom, nd.atom);
    auto key = std::make_pair(idx, extent);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const auto k = near_cube_counts(extent);
    const Vec tile = divide(extent, k);
    RealizationPtr inner = split(idx, tile, depth);
    RealizationPtr out = std::all_of(k.begin(), k.end(), [](std::size_t q) { return q == 1; })
                             ? inner
                             : Realization::tiling(extent, k, inner);
    memo.emplace(std::move(key), out);
    return out;
  }

  // Realizes the split at tree node idx directly on a box of the given extent.
  RealizationPtr split(int idx, const Vec& extent, int depth) {
    const auto& nd = tree.nodes[static_cast<std::size_t>(idx)];
    if (depth >= opt.max_depth || !resolvable_impl(extent, opt)) {
      flags.partial = true;
      return parent_leaf(extent, idx, true);
    }
    const auto& left = tree.nodes[static_cast<std::size_t>(nd.left)];
    const auto& right = tree.nodes[static_cast<std::size_t>(nd.right)];
    const RankOnePair pair = RankOnePair::from_matrices(left.matrix, right.matrix);
    const Mat diff = left.matrix - right.matrix;
    if (std::abs(hs_dot(c.L(), diff)) > 1e-10 * c.L_norm() * std::max(1.0, hs_norm(diff))) {
      fail(ErrorKind::ConstraintViolated, "split direction leaves the constraint hyperplane");
    }
    std::size_t axis = 0;
    for (std::size_t j = 1; j < pair.b.size(); ++j)
      if (std::abs(pair.b[j]) > std::abs(pair.b[axis])) axis = j;
    if (std::abs(std::abs(pair.b[axis]) - 1.0) > 1e-12) {
      flags.unsupported_direction = true;
      flags.partial = true;
      return parent_leaf(extent, idx, true);
    }
    RankOnePair exact = pair;
    std::fill(exact.b.begin(), exact.b.end(), 0.0);
    exact.b[axis] = pair.b[axis] > 0.0 ? 1.0 : -1.0;
    auto patch = std::make_shared<const OscillationPatch>(
        make_patch_with_geometry(c, exact, nd.s, Box::from_extent(extent), opt.geometry));
    std::vector<RealizationPtr> children(patch->slot_count());
    children[0] = node(nd.left, patch->slot_extent(0), depth + 1);
    children[1] = node(nd.right, patch->slot_extent(1), depth + 1);
    for (std::size_t s = 2; s < children.size(); ++s) children[s] = parent_leaf(patch->slot_extent(s), idx, false);
    return Realization::split(extent, std::move(patch), nd.matrix, stage, std::move(children));
  }
};

}  // namespace

RealizationPtr realize_tree(const LinearConstraint& c, const Laminate& nu, const Vec& extent, double budget,
                            int stage, bool align, const RealizeOptions& opt, BuildFlags& flags) {
  if (!(budget > 0.0)) fail(ErrorKind::InvalidArgument, "sup budget must be positive");
  const SplitTree tree = nu.tree();
  if (tree.nodes.front().is_leaf()) return Realization::leaf(extent, nu.root(), stage, LeafRole::Atom, 0);
  Builder b{c, tree, stage, opt, flags, {}};
  const auto k = near_cube_counts(extent);
  const double min_extent = *std::min_element(extent.begin(), extent.end());
  auto counts_for = [&](std::size_t qq) {
    std::vector<std::size_t> cnt(k.size());
    for (std::size_t j = 0; j < k.size(); ++j) cnt[j] = k[j] * qq;
    return cnt;
  };
  auto coprime = [&](const std::vector<std::size_t>& cnt) {
    return std::all_of(cnt.begin(), cnt.end(), [&](std::size_t v) { return std::gcd(v, opt.grid_hint) == 1; });
  };
  // Least q meeting the budget first; the seed jitter is added on top so it always changes the layout.
  std::size_t q = 1;
  bool jittered = !align || opt.jitter == 0;
  for (int iter = 0; iter < 64; ++iter) {
    auto counts = counts_for(q);
    if (align && opt.grid_hint > 0) {
      while (!coprime(counts)) counts = counts_for(++q);
    }
    const Vec tile = divide(extent, counts);
    const double side = *std::min_element(tile.begin(), tile.end());
    if (side < opt.min_relative_tile * min_extent) {
      flags.budget_infeasible = true;
      return nullptr;
    }
    b.memo.clear();
    RealizationPtr inner = b.split(0, tile, 0);
    const double bound = inner->sup_bound();
    if (bound <= budget) {
      if (!jittered) {
        jittered = true;
        q += 2 * static_cast<std::size_t>(opt.jitter);
        continue;
      }
      if (std::all_of(counts.begin(), counts.end(), [](std::size_t v) { return v == 1; })) return inner;
      return Realization::tiling(extent, std::move(counts), std::move(inner));
    }
    const double grow = std::ceil(static_cast<double>(q) * bound / budget * (1.0 + 1e-9));
    q = std::max(q + 1, static_cast<std::size_t>(grow));
  }
  flags.budget_infeasible = true;
  return nullptr;
}

namespace {

void add_scaled(VolumeFractions& acc, const VolumeFractions& f, double w) {
  if (acc.atoms.size() < f.atoms.size()) acc.atoms.resize(f.atoms.size(), 0.0);
  for (std::size_t i = 0; i < f.atoms.size(); ++i) acc.atoms[i] += w * f.atoms[i];
  acc.parent += w * f.parent;
  acc.base += w * f.base;
  acc.exceptional += w * f.exceptional;
}

const VolumeFractions& fractions_rec(const Realization& r, std::size_t atoms,
                                     std::unordered_map<const Realization*, VolumeFractions>& memo) {
  if (auto it = memo.find(&r); it != memo.end()) return it->second;
  VolumeFractions out;
  out.atoms.assign(atoms, 0.0);
  switch (r.kind()) {
    case Realization::Kind::Leaf:
      if (r.role() == LeafRole::Atom && r.atom() >= 0 && static_cast<std::size_t>(r.atom()) < atoms) {
        out.atoms[static_cast<std::size_t>(r.atom())] = 1.0;
      } else if (r.role() == LeafRole::Base) {
        out.base = 1.0;
      } else {
        out.parent = 1.0;
      }
      break;
    case Realization::Kind::Tiling:
      out = fractions_rec(*r.tile(), atoms, memo);
      break;
    case Realization::Kind::Split: {
      const OscillationPatch& p = r.patch();
      const double vol = p.domain().volume();
      double covered = 0.0;
      for (std::size_t s = 0; s < r.children().size(); ++s) {
        double share;
        if (s == 0) {
          share = p.measure_A() / vol;
        } else if (s == 1) {
          share = p.measure_B() / vol;
        } else {
          const Vec e = p.slot_extent(s);
          share = 2.0 * std::accumulate(e.begin(), e.end(), 1.0, std::multiplies<>()) / vol;
        }
        covered += share;
        add_scaled(out, fractions_rec(*r.children()[s], atoms, memo), share);
      }
      out.exceptional += std::max(0.0, 1.0 - covered);
      break;
    }
  }
  return memo.emplace(&r, std::move(out)).first->second;
}

}  // namespace

VolumeFractions volume_fractions(const Realization& root, std::size_t atom_count) {
  std::unordered_map<const Realization*, VolumeFractions> memo;
  return fractions_rec(root, atom_count, memo);
}

std::size_t distinct_nodes(const Realization& root) {
  std::unordered_set<const Realization*> seen;
  std::vector<const Realization*> stack{&root};
  while (!stack.empty()) {
    const Realization* r = stack.back();
    stack.pop_back();
    if (!seen.insert(r).second) continue;
    if (r->kind() == Realization::Kind::Tiling) stack.push_back(r->tile().get());
    for (const auto& ch : r->children()) stack.push_back(ch.get());
  }
  return seen.size();
}

}  // namespace cvxint
