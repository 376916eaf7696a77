#pragma once

// Exact dyadic net pre-measures M^s_δ on digital sets.
//
// With δ = 2^{-j0}, M^s_δ(E) is the least Σ|B|^s over disjoint covers of E by
// dyadic cubes of depth >= j0. On a digital set of depth D the optimum never
// needs cubes finer than D (splitting a full cube multiplies its cost by
// 2^{d-s} >= 1 for s <= d), so a bottom-up pass over the occupied part of the
// dyadic tree computes it exactly.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "mfkit/error.hpp"
#include "mfkit/geometry.hpp"

namespace mfkit {

/// Covers coarser than the children are kept when their costs agree within this.
inline constexpr double kCoverTieTolerance = 1e-12;

struct NetMeasureQuery {
  const DigitalSet& set;
  double s;
  int delta_depth;  // covers use cubes of side <= 2^{-delta_depth}
};

struct CoverCertificate {
  std::vector<DyadicCube> cubes;
  double value = 0.0;
};

namespace detail {

struct NetNode {
  Coords coords;
  double value;
  bool whole;  // this cube itself belongs to the cover
  std::uint32_t child_begin;
  std::uint32_t child_end;
};

inline void validate(const NetMeasureQuery& q) {
  if (!(q.s > 0.0 && q.s <= q.set.dim() && q.delta_depth >= 0 && q.delta_depth <= q.set.depth()))
    throw ValidationError("invalid exponent/depth");
}

// Runs the dynamic program. levels[k] holds the occupied depth-k cubes in
// Z-order; levels is empty when the set is.
inline std::vector<std::vector<NetNode>> net_measure_levels(const NetMeasureQuery& q, bool keep_all) {
  validate(q);
  const int dim = q.set.dim();
  const int depth = q.set.depth();
  std::vector<std::vector<NetNode>> levels;
  if (q.set.empty()) return levels;
  levels.resize(static_cast<std::size_t>(depth) + 1);

  auto& leaves = levels[depth];
  leaves.reserve(q.set.size());
  const double leaf_cost = cube_power(depth, q.s);
  for (const auto& c : q.set.cubes()) leaves.push_back(NetNode{c.coords, leaf_cost, true, 0, 0});
  if (dim > 1) {
    std::sort(leaves.begin(), leaves.end(),
              [dim](const NetNode& a, const NetNode& b) { return zorder_less(a.coords, b.coords, dim); });
  }

  for (int k = depth - 1; k >= 0; --k) {
    const auto& finer = levels[k + 1];
    auto& coarse = levels[k];
    const double own = cube_power(k, q.s);
    const bool admissible = k >= q.delta_depth;
    std::size_t i = 0;
    while (i < finer.size()) {
      Coords parent = finer[i].coords;
      for (int a = 0; a < dim; ++a) parent[a] >>= 1;
      double sum = 0.0;
      std::size_t j = i;
      for (; j < finer.size(); ++j) {
        Coords pj = finer[j].coords;
        for (int a = 0; a < dim; ++a) pj[a] >>= 1;
        if (pj != parent) break;
        sum += finer[j].value;
      }
      NetNode node{parent, sum, false, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)};
      if (admissible && own <= sum + kCoverTieTolerance) {
        node.value = own;
        node.whole = true;
      }
      coarse.push_back(node);
      i = j;
    }
    if (!keep_all) std::vector<NetNode>().swap(levels[k + 1]);
  }
  return levels;
}

}  // namespace detail

/// M^s_{2^{-j0}}(E), exact up to floating point.
inline double net_measure(const NetMeasureQuery& q) {
  const auto levels = detail::net_measure_levels(q, false);
  return levels.empty() ? 0.0 : levels[0][0].value;
}

inline double net_measure(const DigitalSet& e, double s, int delta_depth) {
  return net_measure(NetMeasureQuery{e, s, delta_depth});
}

/// M^s_{2^{-j0}} of growing prefixes of a one-dimensional digital set inside a
/// fixed dyadic interval, one cube at a time. Cubes must arrive in increasing
/// order. Each push returns the value of the prefix so far, equal bit for bit
/// to net_measure on that prefix.
class PrefixCover1D {
 public:
  PrefixCover1D(int region_depth, int set_depth, double s, int delta_depth)
      : top_(region_depth),
        depth_(set_depth),
        j0_(delta_depth),
        own_(static_cast<std::size_t>(set_depth) + 1),
        partial_(static_cast<std::size_t>(set_depth) + 1, 0.0) {
    detail::require(region_depth >= 0 && region_depth <= set_depth && set_depth <= kMaxDepth, "invalid depths");
    for (int k = 0; k <= set_depth; ++k) own_[k] = cube_power(k, s);
  }

  double push(std::int64_t coord) {
    if (started_) {
      detail::require(coord > last_, "prefix cubes must increase");
      int changed = depth_;  // shallowest level whose node differs
      for (int l = depth_ - 1; l > top_; --l)
        if ((coord >> (depth_ - l)) != (last_ >> (depth_ - l))) changed = l;
      double child = own_[depth_];
      for (int l = depth_ - 1; l >= changed; --l) {
        child = decide(l, partial_[l] + child);
        partial_[l] = 0.0;
      }
      partial_[changed - 1] += child;
    }
    started_ = true;
    last_ = coord;
    double child = own_[depth_];
    for (int l = depth_ - 1; l >= 0; --l) child = decide(l, partial_[l] + child);
    return child;
  }

 private:
  double decide(int level, double sum) const {
    return level >= j0_ && own_[level] <= sum + kCoverTieTolerance ? own_[level] : sum;
  }

  int top_, depth_, j0_;
  std::vector<double> own_;
  std::vector<double> partial_;  // summed values of closed children of the open node per level
  std::int64_t last_ = 0;
  bool started_ = false;
};

/// One minimizing cover. Ties between a cube and its children resolve to the
/// cube. The certificate's value is the DP value.
inline CoverCertificate optimal_cover(const NetMeasureQuery& q) {
  const auto levels = detail::net_measure_levels(q, true);
  CoverCertificate cert;
  if (levels.empty()) return cert;
  cert.value = levels[0][0].value;
  struct Frame {
    int depth;
    std::uint32_t index;
  };
  std::vector<Frame> stack{{0, 0}};
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    const auto& node = levels[f.depth][f.index];
    if (node.whole) {
      cert.cubes.push_back(DyadicCube{f.depth, node.coords});
      continue;
    }
    for (std::uint32_t c = node.child_end; c-- > node.child_begin;) stack.push_back({f.depth + 1, c});
  }
  std::sort(cert.cubes.begin(), cert.cubes.end());
  return cert;
}

inline CoverCertificate optimal_cover(const DigitalSet& e, double s, int delta_depth) {
  return optimal_cover(NetMeasureQuery{e, s, delta_depth});
}

/// Σ|B|^s recomputed from a certificate's cube list.
inline double cover_cost(const std::vector<DyadicCube>& cubes, double s) {
  double sum = 0.0;
  for (const auto& c : cubes) sum += cube_power(c.depth, s);
  return sum;
}

}  // namespace mfkit
