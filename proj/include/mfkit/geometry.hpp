#pragma once

// Dyadic cubes, digital sets and box-counting estimators.
//
// Everything lives in the ambient domain [0,1)^d, d <= kMaxDim. A cube of
// depth k with integer coordinates m identifies prod_i [m_i 2^-k, (m_i+1) 2^-k).
// The size |B| of a cube is its side length 2^-k throughout the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mfkit/error.hpp"

namespace mfkit {

inline constexpr int kMaxDim = 3;
inline constexpr int kMaxDepth = 40;

using Coords = std::array<std::int64_t, kMaxDim>;
using Point = std::vector<double>;

struct DyadicCube {
  int depth = 0;
  Coords coords{};  // axes >= dim stay zero

  double side() const { return std::ldexp(1.0, -depth); }

  /// The unique cube of depth j <= depth containing this one.
  DyadicCube ancestor(int j) const {
    DyadicCube a{j, coords};
    for (auto& c : a.coords) c >>= (depth - j);
    return a;
  }

  double lower(int axis) const { return std::ldexp(static_cast<double>(coords[axis]), -depth); }
  double center(int axis) const {
    return std::ldexp(static_cast<double>(2 * coords[axis] + 1), -depth - 1);
  }

  friend auto operator<=>(const DyadicCube&, const DyadicCube&) = default;
};

/// |C|^s for a cube of the given depth.
inline double cube_power(int depth, double s) { return std::exp2(-static_cast<double>(depth) * s); }

inline Point cube_center(const DyadicCube& c, int dim) {
  Point p(dim);
  for (int a = 0; a < dim; ++a) p[a] = c.center(a);
  return p;
}

namespace detail {

// Z-order comparison of two same-depth coordinate tuples. Cubes sharing an
// ancestor are contiguous in this order at every depth.
inline bool zorder_less(const Coords& x, const Coords& y, int dim) {
  auto less_msb = [](std::uint64_t a, std::uint64_t b) { return a < b && a < (a ^ b); };
  int msd = 0;
  for (int a = 1; a < dim; ++a) {
    if (less_msb(static_cast<std::uint64_t>(x[msd] ^ y[msd]),
                 static_cast<std::uint64_t>(x[a] ^ y[a])))
      msd = a;
  }
  return x[msd] < y[msd];
}

inline void check_dim_depth(int dim, int depth) {
  require(dim >= 1 && dim <= kMaxDim, "dimension must be in 1.." + std::to_string(kMaxDim));
  require(depth >= 0 && depth <= kMaxDepth, "depth must be in 0.." + std::to_string(kMaxDepth));
}

/// Ordinary least-squares slope of ys against xs.
inline double ls_slope(std::span<const double> xs, std::span<const double> ys) {
  const auto n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace detail

/// A finite union of same-depth dyadic cubes, kept sorted and duplicate free.
class DigitalSet {
 public:
  DigitalSet() = default;

  DigitalSet(int dim, int depth) : dim_(dim), depth_(depth) { detail::check_dim_depth(dim, depth); }

  DigitalSet(int dim, int depth, std::vector<DyadicCube> cubes)
      : dim_(dim), depth_(depth), cubes_(std::move(cubes)) {
    detail::check_dim_depth(dim, depth);
    const std::int64_t n = std::int64_t{1} << depth;
    for (const auto& c : cubes_) {
      detail::require(c.depth == depth, "cube depth differs from set depth");
      for (int a = 0; a < kMaxDim; ++a) {
        if (a < dim)
          detail::require(c.coords[a] >= 0 && c.coords[a] < n, "cube outside the unit cube");
        else
          detail::require(c.coords[a] == 0, "cube has coordinates beyond the set dimension");
      }
    }
    std::sort(cubes_.begin(), cubes_.end());
    cubes_.erase(std::unique(cubes_.begin(), cubes_.end()), cubes_.end());
  }

  static DigitalSet full(int dim, int depth) {
    detail::check_dim_depth(dim, depth);
    const std::int64_t n = std::int64_t{1} << depth;
    std::int64_t total = 1;
    for (int a = 0; a < dim; ++a) total *= n;
    std::vector<DyadicCube> cubes;
    cubes.reserve(static_cast<std::size_t>(total));
    for (std::int64_t idx = 0; idx < total; ++idx) {
      DyadicCube c{depth, {}};
      std::int64_t rest = idx;
      for (int a = dim - 1; a >= 0; --a) {
        c.coords[a] = rest % n;
        rest /= n;
      }
      cubes.push_back(c);
    }
    return DigitalSet(dim, depth, std::move(cubes));
  }

  int dim() const { return dim_; }
  int depth() const { return depth_; }
  std::size_t size() const { return cubes_.size(); }
  bool empty() const { return cubes_.empty(); }
  const std::vector<DyadicCube>& cubes() const { return cubes_; }

  bool contains(const DyadicCube& c) const { return std::binary_search(cubes_.begin(), cubes_.end(), c); }

  /// E ∩ C for a cube C with C.depth <= depth().
  DigitalSet within(const DyadicCube& region) const {
    detail::require(region.depth <= depth_, "region finer than the set");
    const int shift = depth_ - region.depth;
    DyadicCube lo{depth_, {}}, hi{depth_, {}};
    lo.coords[0] = region.coords[0] << shift;
    hi.coords[0] = (region.coords[0] + 1) << shift;
    auto first = std::lower_bound(cubes_.begin(), cubes_.end(), lo);
    auto last = std::lower_bound(first, cubes_.end(), hi);
    DigitalSet out(dim_, depth_);
    if (dim_ == 1) {
      out.cubes_.assign(first, last);
    } else {
      for (auto it = first; it != last; ++it)
        if (it->ancestor(region.depth) == region) out.cubes_.push_back(*it);
    }
    return out;
  }

  bool meets(const DyadicCube& region) const { return !within(region).empty(); }

  bool is_subset_of(const DigitalSet& other) const {
    if (dim_ != other.dim_ || depth_ != other.depth_) return false;
    return std::includes(other.cubes_.begin(), other.cubes_.end(), cubes_.begin(), cubes_.end());
  }

  friend bool operator==(const DigitalSet&, const DigitalSet&) = default;

 private:
  friend DigitalSet set_union(const DigitalSet&, const DigitalSet&);
  friend DigitalSet set_difference(const DigitalSet&, const DigitalSet&);

  int dim_ = 1;
  int depth_ = 0;
  std::vector<DyadicCube> cubes_;
};

inline DigitalSet set_union(const DigitalSet& a, const DigitalSet& b) {
  detail::require(a.dim() == b.dim() && a.depth() == b.depth(), "union of incompatible sets");
  DigitalSet out(a.dim(), a.depth());
  std::set_union(a.cubes_.begin(), a.cubes_.end(), b.cubes_.begin(), b.cubes_.end(),
                 std::back_inserter(out.cubes_));
  return out;
}

inline DigitalSet set_difference(const DigitalSet& a, const DigitalSet& b) {
  detail::require(a.dim() == b.dim() && a.depth() == b.depth(), "difference of incompatible sets");
  DigitalSet out(a.dim(), a.depth());
  std::set_difference(a.cubes_.begin(), a.cubes_.end(), b.cubes_.begin(), b.cubes_.end(),
                      std::back_inserter(out.cubes_));
  return out;
}

/// E × F as a set of dimension dim(E) + dim(F).
inline DigitalSet product(const DigitalSet& e, const DigitalSet& f) {
  detail::require(e.depth() == f.depth(), "product of sets with different depths");
  detail::require(e.dim() + f.dim() <= kMaxDim, "product dimension too large");
  std::vector<DyadicCube> cubes;
  cubes.reserve(e.size() * f.size());
  for (const auto& a : e.cubes()) {
    for (const auto& b : f.cubes()) {
      DyadicCube c{e.depth(), a.coords};
      for (int i = 0; i < f.dim(); ++i) c.coords[e.dim() + i] = b.coords[i];
      cubes.push_back(c);
    }
  }
  return DigitalSet(e.dim() + f.dim(), e.depth(), std::move(cubes));
}

/// Depth-`depth` cubes containing at least one of the points.
inline DigitalSet rasterize_points(std::span<const Point> points, int depth) {
  detail::require(!points.empty(), "empty point list");
  const int dim = static_cast<int>(points.front().size());
  detail::check_dim_depth(dim, depth);
  std::vector<DyadicCube> cubes;
  cubes.reserve(points.size());
  for (const auto& p : points) {
    detail::require(static_cast<int>(p.size()) == dim, "points of mixed dimension");
    DyadicCube c{depth, {}};
    for (int a = 0; a < dim; ++a) {
      detail::require(std::isfinite(p[a]) && p[a] >= 0.0 && p[a] < 1.0, "point outside [0,1)^d");
      c.coords[a] = static_cast<std::int64_t>(std::floor(std::ldexp(p[a], depth)));
    }
    cubes.push_back(c);
  }
  return DigitalSet(dim, depth, std::move(cubes));
}

/// Outer approximation of E(γ) = {x : dist(x, E) < γ} at the resolution of E:
/// every cube whose center is closer than γ + sqrt(d)·2^{-D-1} to some cube of E.
inline DigitalSet enlargement(const DigitalSet& e, double gamma) {
  detail::require(gamma > 0.0 && std::isfinite(gamma), "gamma must be positive");
  const int dim = e.dim();
  const int depth = e.depth();
  const double h = std::ldexp(1.0, -depth);
  const double reach = gamma + std::sqrt(static_cast<double>(dim)) * h / 2;
  const std::int64_t n = std::int64_t{1} << depth;
  // Along one axis a cube k cells away has its center (|k| - 1/2) h from the
  // source cube.
  std::int64_t kmax = 0;
  while (kmax < n && (static_cast<double>(kmax + 1) - 0.5) * h < reach) ++kmax;

  std::vector<DyadicCube> out;
  if (dim == 1) {
    std::int64_t covered_to = -1;  // last coordinate already emitted
    for (const auto& c : e.cubes()) {
      const std::int64_t lo = std::max<std::int64_t>({0, c.coords[0] - kmax, covered_to + 1});
      const std::int64_t hi = std::min<std::int64_t>(n - 1, c.coords[0] + kmax);
      for (std::int64_t m = lo; m <= hi; ++m) out.push_back(DyadicCube{depth, {m, 0, 0}});
      covered_to = std::max(covered_to, hi);
    }
    return DigitalSet(1, depth, std::move(out));
  }

  std::vector<Coords> offsets;
  Coords off{};
  const std::int64_t width = 2 * kmax + 1;
  std::int64_t total = 1;
  for (int a = 0; a < dim; ++a) total *= width;
  if (static_cast<double>(total) * static_cast<double>(e.size()) > 2e8)
    throw NumericError("enlargement too large for this resolution");
  for (std::int64_t idx = 0; idx < total; ++idx) {
    std::int64_t rest = idx;
    double d2 = 0;
    for (int a = 0; a < dim; ++a) {
      off[a] = rest % width - kmax;
      rest /= width;
      const double gap = std::max(0.0, static_cast<double>(std::llabs(off[a])) - 0.5) * h;
      d2 += gap * gap;
    }
    if (std::sqrt(d2) < reach) offsets.push_back(off);
  }
  out.reserve(offsets.size() * e.size());
  for (const auto& c : e.cubes()) {
    for (const auto& o : offsets) {
      DyadicCube nb{depth, c.coords};
      bool inside = true;
      for (int a = 0; a < dim; ++a) {
        nb.coords[a] += o[a];
        inside = inside && nb.coords[a] >= 0 && nb.coords[a] < n;
      }
      if (inside) out.push_back(nb);
    }
  }
  return DigitalSet(dim, depth, std::move(out));
}

struct BoxCount {
  int level;
  std::size_t count;
};

/// N_j = number of depth-j cubes meeting E, for j = 0..j_max.
inline std::vector<BoxCount> box_counts(const DigitalSet& e, int j_max) {
  detail::require(j_max >= 0, "negative resolution");
  detail::require(j_max <= e.depth(), "resolution exceeded");
  std::vector<BoxCount> out(static_cast<std::size_t>(j_max) + 1);
  std::vector<DyadicCube> level;
  level.reserve(e.size());
  for (const auto& c : e.cubes()) level.push_back(c.ancestor(j_max));
  for (int j = j_max; j >= 0; --j) {
    if (j < j_max)
      for (auto& c : level) c = c.ancestor(j);
    std::sort(level.begin(), level.end());
    level.erase(std::unique(level.begin(), level.end()), level.end());
    out[j] = BoxCount{j, level.size()};
  }
  return out;
}

struct BoxDimEstimate {
  double slope;    // least-squares slope of log2 N_j against j
  double limsup;   // max of log2(N_j)/j over the window
};

inline BoxDimEstimate box_dim_from_counts(std::span<const BoxCount> counts, int j_lo, int j_hi) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (counts[j_hi].count == 0) return {kNegInf, kNegInf};
  std::vector<double> xs, ys;
  double limsup = kNegInf;
  for (int j = j_lo; j <= j_hi; ++j) {
    const double y = std::log2(static_cast<double>(counts[j].count));
    xs.push_back(j);
    ys.push_back(y);
    if (j >= 1) limsup = std::max(limsup, y / j);
  }
  return {detail::ls_slope(xs, ys), limsup};
}

/// Upper box dimension proxies of E over the dyadic window [j_lo, j_hi].
inline BoxDimEstimate upper_box_dim_estimate(const DigitalSet& e, int j_lo, int j_hi) {
  detail::require(j_lo >= 0 && j_lo < j_hi, "window too small");
  detail::require(j_hi <= e.depth(), "resolution exceeded");
  const auto counts = box_counts(e, j_hi);
  return box_dim_from_counts(counts, j_lo, j_hi);
}

/// Minimum over depth-`probe_depth` cubes C meeting K of the box dimension
/// estimate of K ∩ C. Isolated cells therefore pull the result down to 0.
inline BoxDimEstimate local_upper_box_dim_estimate(const DigitalSet& k, int probe_depth, int j_lo,
                                                   int j_hi) {
  detail::require(probe_depth >= 0 && probe_depth < k.depth(), "probe depth must be below set depth");
  detail::require(!k.empty(), "empty set");
  std::vector<DyadicCube> probes;
  for (const auto& c : k.cubes()) probes.push_back(c.ancestor(probe_depth));
  std::sort(probes.begin(), probes.end());
  probes.erase(std::unique(probes.begin(), probes.end()), probes.end());
  BoxDimEstimate best{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (const auto& p : probes) {
    const auto est = upper_box_dim_estimate(k.within(p), j_lo, j_hi);
    best.slope = std::min(best.slope, est.slope);
    best.limsup = std::min(best.limsup, est.limsup);
  }
  return best;
}

}  // namespace mfkit
