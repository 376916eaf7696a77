#pragma once

// Finitely supported measures and the explicit constructions built from them:
// blends, truncated geometric mixtures, cover measures concentrated on a small
// set, sprays that smear each atom over a separated cloud, and the U_{l,m}
// ball-mass test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mfkit/error.hpp"
#include "mfkit/geometry.hpp"
#include "mfkit/net_measure.hpp"
#include "mfkit/parallel.hpp"

namespace mfkit {

struct Atom {
  Point x;
  double w = 0.0;
};

inline double distance(std::span<const double> a, std::span<const double> b) {
  long double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const long double diff = static_cast<long double>(a[i]) - b[i];
    acc += diff * diff;
  }
  return static_cast<double>(std::sqrt(acc));
}

/// Atoms sorted lexicographically by position, duplicates merged, zero
/// weights dropped.
class AtomicMeasure {
 public:
  static constexpr double kMassTolerance = 1e-10;

  AtomicMeasure() = default;

  AtomicMeasure(int dim, std::vector<Atom> atoms, bool normalized = true) : dim_(dim), normalized_(normalized) {
    detail::require(dim >= 1 && dim <= kMaxDim, "unsupported dimension");
    for (const auto& a : atoms) {
      detail::require(static_cast<int>(a.x.size()) == dim, "atom of wrong dimension");
      detail::require(std::all_of(a.x.begin(), a.x.end(), [](double v) { return std::isfinite(v); }),
                      "non-finite atom position");
      detail::require(std::isfinite(a.w) && a.w >= 0.0, "atom weights must be nonnegative");
    }
    std::stable_sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
    for (auto& a : atoms) {
      if (a.w == 0.0) continue;
      if (!atoms_.empty() && atoms_.back().x == a.x) {
        atoms_.back().w += a.w;
      } else {
        atoms_.push_back(std::move(a));
      }
    }
    prefix_.assign(atoms_.size() + 1, 0.0L);
    for (std::size_t i = 0; i < atoms_.size(); ++i) prefix_[i + 1] = prefix_[i] + atoms_[i].w;
    if (normalized_)
      detail::require(std::abs(total_mass() - 1.0) <= kMassTolerance, "weights must sum to 1");
  }

  static AtomicMeasure dirac(Point x) {
    const int d = static_cast<int>(x.size());
    return AtomicMeasure(d, {Atom{std::move(x), 1.0}});
  }

  /// Equal weights on the given points (repeats add up).
  static AtomicMeasure uniform(std::span<const Point> points) {
    detail::require(!points.empty(), "empty point list");
    std::vector<Atom> atoms;
    const double w = 1.0 / static_cast<double>(points.size());
    for (const auto& p : points) atoms.push_back(Atom{p, w});
    return AtomicMeasure(static_cast<int>(points.front().size()), std::move(atoms), false).normalize();
  }

  /// Copy with weights divided by the total mass.
  AtomicMeasure normalize() const {
    const double total = total_mass();
    if (!(total > 0.0)) throw ValidationError("cannot normalize a zero measure");
    std::vector<Atom> atoms = atoms_;
    for (auto& a : atoms) a.w /= total;
    AtomicMeasure out(dim_, std::move(atoms), false);
    out.normalized_ = std::abs(out.total_mass() - 1.0) <= kMassTolerance;
    if (!out.normalized_) throw NumericError("normalization lost mass");
    return out;
  }

  int dim() const { return dim_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  bool normalized() const { return normalized_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  double total_mass() const { return static_cast<double>(prefix_.back()); }

  /// μ(B(x, r)) for the open Euclidean ball.
  double ball_mass(std::span<const double> x, double r) const {
    detail::require(r > 0.0, "radius must be positive");
    detail::require(static_cast<int>(x.size()) == dim_, "point of wrong dimension");
    const std::size_t n = atoms_.size();
    if (n == 0) return 0.0;
    const double x0 = x[0];
    auto first_coord_at_least = [&](double v) {
      return static_cast<std::size_t>(
          std::lower_bound(atoms_.begin(), atoms_.end(), v, [](const Atom& a, double t) { return a.x[0] < t; }) -
          atoms_.begin());
    };
    if (dim_ == 1) {
      auto inside = [&](std::size_t i) { return std::abs(atoms_[i].x[0] - x0) < r; };
      std::size_t lo = first_coord_at_least(x0 - r);
      while (lo > 0 && inside(lo - 1)) --lo;
      while (lo < n && atoms_[lo].x[0] < x0 && !inside(lo)) ++lo;
      std::size_t hi = std::max(lo, first_coord_at_least(x0 + r));
      while (hi > lo && atoms_[hi - 1].x[0] > x0 && !inside(hi - 1)) --hi;
      while (hi < n && inside(hi)) ++hi;
      return static_cast<double>(prefix_[hi] - prefix_[lo]);
    }
    const double slack = r * (1.0 + 1e-12);
    long double acc = 0;
    for (std::size_t i = first_coord_at_least(x0 - slack); i < n && atoms_[i].x[0] < x0 + slack; ++i) {
      if (distance(atoms_[i].x, x) < r) acc += atoms_[i].w;
    }
    return static_cast<double>(acc);
  }

  bool operator==(const AtomicMeasure& o) const {
    if (dim_ != o.dim_ || atoms_.size() != o.atoms_.size()) return false;
    for (std::size_t i = 0; i < atoms_.size(); ++i)
      if (atoms_[i].x != o.atoms_[i].x || atoms_[i].w != o.atoms_[i].w) return false;
    return true;
  }

 private:
  int dim_ = 1;
  bool normalized_ = false;
  std::vector<Atom> atoms_;
  std::vector<long double> prefix_{0.0L};
};

inline double ball_mass(const AtomicMeasure& mu, std::span<const double> x, double r) { return mu.ball_mass(x, r); }

/// (1 - t) ν + t μ₀.
inline AtomicMeasure blend(const AtomicMeasure& nu, const AtomicMeasure& mu0, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("invalid blend weight");
  detail::require(nu.normalized() && mu0.normalized(), "not probability measures");
  detail::require(nu.dim() == mu0.dim(), "measures of different dimension");
  std::vector<Atom> atoms;
  for (const auto& a : nu.atoms()) atoms.push_back(Atom{a.x, (1.0 - t) * a.w});
  for (const auto& a : mu0.atoms()) atoms.push_back(Atom{a.x, t * a.w});
  return AtomicMeasure(nu.dim(), std::move(atoms));
}

/// Weight of component k (1-based) in a K-term truncated geometric mixture.
inline double mixture_coefficient(std::size_t k, std::size_t count) {
  return std::ldexp(1.0, -static_cast<int>(k)) / (1.0 - std::ldexp(1.0, -static_cast<int>(count)));
}

/// Σ_k 2^{-k} μ_k renormalized by 1 / (1 - 2^{-K}).
inline AtomicMeasure geometric_mixture(std::span<const AtomicMeasure> measures) {
  if (measures.empty()) throw ValidationError("empty mixture");
  const int d = measures.front().dim();
  std::vector<Atom> atoms;
  for (std::size_t k = 0; k < measures.size(); ++k) {
    detail::require(measures[k].normalized(), "not probability measures");
    detail::require(measures[k].dim() == d, "measures of different dimension");
    const double c = mixture_coefficient(k + 1, measures.size());
    for (const auto& a : measures[k].atoms()) atoms.push_back(Atom{a.x, c * a.w});
  }
  return AtomicMeasure(d, std::move(atoms));
}

struct CoverLevel {
  int n = 0;
  int delta_depth = 0;  // cover cubes have depth >= this
  double sigma = 0.0;   // Σ |B|^α over the cover
  double omega = 0.0;
  double rho = 0.0;     // smallest side in the cover
  std::vector<DyadicCube> cubes;
  std::vector<Point> reps;  // x_B, one per cube
};

struct CoverMeasure {
  AtomicMeasure measure;
  std::vector<CoverLevel> levels;
  double c = 0.0;           // ω_n = c 2^{n/2}
  double tail_bound = 0.0;  // upper bound on the mass the truncation dropped
};

/// Measure Σ_{n <= n_max} ω_n Σ_{B ∈ B_n} |B|^α δ_{x_B}, where B_n is an
/// optimal dyadic cover of E by cubes of side <= 2^{-(n+1)} that meets the
/// budget Σ |B|^α <= 2^{-(n+1)}, and x_B is the center of the first K cube in B.
inline CoverMeasure prop41_measure(const DigitalSet& k_set, const DigitalSet& e, double alpha, int n_max) {
  detail::require(alpha > 0.0 && alpha <= e.dim(), "exponent outside (0, d]");
  detail::require(n_max >= 1, "n_max must be at least 1");
  detail::require(e.dim() == k_set.dim() && e.depth() == k_set.depth(), "target and K must share dimension and depth");
  if (e.empty()) throw ValidationError("empty target");
  detail::require(e.is_subset_of(k_set), "target is not contained in K");

  const int d = e.dim();
  CoverMeasure out;
  double norm = 0.0;
  for (int n = 1; n <= n_max; ++n) {
    CoverLevel level;
    level.n = n;
    level.delta_depth = std::min(n + 1, e.depth());
    const auto cert = optimal_cover(e, alpha, level.delta_depth);
    const double budget = std::ldexp(1.0, -(n + 1));
    if (cert.value > budget) throw NumericError("cover budget unreachable at n=" + std::to_string(n));
    level.sigma = cert.value;
    level.cubes = cert.cubes;
    level.rho = std::numeric_limits<double>::infinity();
    for (const auto& b : level.cubes) {
      level.rho = std::min(level.rho, b.side());
      const auto inside = k_set.within(b);
      level.reps.push_back(cube_center(inside.cubes().front(), d));
    }
    norm += std::exp2(0.5 * n) * level.sigma;
    out.levels.push_back(std::move(level));
  }
  out.c = 1.0 / norm;
  out.tail_bound = out.c * 0.5 * std::exp2(-0.5 * (n_max + 1)) / (1.0 - std::exp2(-0.5));

  std::vector<Atom> atoms;
  for (auto& level : out.levels) {
    level.omega = out.c * std::exp2(0.5 * level.n);
    for (std::size_t i = 0; i < level.cubes.size(); ++i)
      atoms.push_back(Atom{level.reps[i], level.omega * cube_power(level.cubes[i].depth, alpha)});
  }
  out.measure = AtomicMeasure(d, std::move(atoms));
  return out;
}

/// Minimum pairwise gap a spray of n points must exceed.
inline double spray_separation(std::size_t n, double s) { return 8.0 * std::pow(static_cast<double>(n), -1.0 / s); }

namespace detail {

// Cube centers of K inside the open ball B(x, rho), lexicographic order.
inline std::vector<Point> grid_points_near(const DigitalSet& k_set, std::span<const double> x, double rho) {
  const int d = k_set.dim();
  const double h = std::ldexp(1.0, -k_set.depth());
  const auto lo_index = static_cast<std::int64_t>(std::floor((x[0] - rho) / h - 0.5)) - 1;
  const auto& cubes = k_set.cubes();
  auto it = std::lower_bound(cubes.begin(), cubes.end(), lo_index,
                             [](const DyadicCube& c, std::int64_t v) { return c.coords[0] < v; });
  std::vector<Point> out;
  for (; it != cubes.end() && it->center(0) < x[0] + rho; ++it) {
    Point c = cube_center(*it, d);
    if (distance(c, x) < rho) out.push_back(std::move(c));
  }
  return out;
}

// Greedy pass keeping each candidate farther than sep from all kept ones.
inline std::vector<Point> separated_subset(const std::vector<Point>& candidates, double sep) {
  const int d = candidates.empty() ? 1 : static_cast<int>(candidates.front().size());
  std::map<Coords, std::vector<std::size_t>> grid;
  std::vector<Point> kept;
  auto cell_of = [&](const Point& p) {
    Coords c{};
    for (int a = 0; a < d; ++a) c[a] = static_cast<std::int64_t>(std::floor(p[a] / sep));
    return c;
  };
  for (const auto& p : candidates) {
    const Coords cell = cell_of(p);
    bool ok = true;
    Coords off{};
    const int total = d == 1 ? 3 : d == 2 ? 9 : 27;
    for (int idx = 0; idx < total && ok; ++idx) {
      int rest = idx;
      for (int a = 0; a < d; ++a) {
        off[a] = cell[a] + (rest % 3) - 1;
        rest /= 3;
      }
      const auto found = grid.find(off);
      if (found == grid.end()) continue;
      for (std::size_t j : found->second) {
        if (!(distance(kept[j], p) > sep)) {
          ok = false;
          break;
        }
      }
    }
    if (!ok) continue;
    grid[cell].push_back(kept.size());
    kept.push_back(p);
  }
  return kept;
}

}  // namespace detail

/// Replaces atom x_i by counts[i] equal atoms at K grid points inside
/// B(x_i, ρ) with pairwise gaps above spray_separation(counts[i], s).
inline AtomicMeasure spray_measure(const AtomicMeasure& mu, const DigitalSet& k_set, double s, double rho,
                                   std::span<const std::size_t> counts) {
  detail::require(mu.normalized(), "not probability measures");
  detail::require(mu.dim() == k_set.dim(), "measure and K of different dimension");
  detail::require(counts.size() == mu.size(), "one spray count per atom");
  detail::require(s > 0.0, "spray exponent must be positive");
  detail::require(rho > 0.0, "spray radius must be positive");
  const auto& atoms = mu.atoms();
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (std::size_t j = i + 1; j < atoms.size(); ++j)
      detail::require(4.0 * rho < distance(atoms[i].x, atoms[j].x), "spray radius too large for atom spacing");

  std::vector<std::vector<Atom>> parts(atoms.size());
  parallel_for(atoms.size(), [&](std::size_t i) {
    const std::size_t n = counts[i];
    detail::require(n >= 1, "spray counts must be positive");
    const auto packed = detail::separated_subset(detail::grid_points_near(k_set, atoms[i].x, rho), spray_separation(n, s));
    if (packed.size() < n) throw NumericError("insufficient local box dimension for spray");
    const double w = atoms[i].w / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) parts[i].push_back(Atom{packed[k * packed.size() / n], w});
  });
  std::vector<Atom> merged;
  for (auto& p : parts) merged.insert(merged.end(), p.begin(), p.end());
  return AtomicMeasure(mu.dim(), std::move(merged));
}

struct UlmResult {
  bool holds = false;               // every grid point has a certified witness
  std::vector<double> radii;        // radius grid searched, increasing
  std::vector<double> witness;      // per K cube, NaN when none was found
  std::size_t missing = 0;
};

/// Geometric radius grid strictly inside (1/m, 1/l).
inline std::vector<double> ulm_radius_grid(std::int64_t l, std::int64_t m, int count) {
  if (!(l >= 1 && m > l && count >= 1)) throw ValidationError("empty radius interval");
  const double lo = 1.0 / static_cast<double>(m);
  const double ratio = static_cast<double>(m) / static_cast<double>(l);
  std::vector<double> r(count);
  for (int i = 0; i < count; ++i) r[i] = lo * std::pow(ratio, static_cast<double>(i + 1) / (count + 1));
  return r;
}

/// Searches, for each K grid point x, a radius r in the grid with μ(B(x,r)) < r^s.
/// A true answer is certified; a false one only means the grid found no witness.
inline UlmResult check_Ulm(const AtomicMeasure& mu, const DigitalSet& k_set, std::int64_t l, std::int64_t m, double s,
                           int r_grid) {
  detail::require(mu.dim() == k_set.dim(), "measure and K of different dimension");
  detail::require(s > 0.0, "exponent must be positive");
  UlmResult res;
  res.radii = ulm_radius_grid(l, m, r_grid);
  std::vector<double> bounds(res.radii.size());
  for (std::size_t i = 0; i < bounds.size(); ++i) bounds[i] = std::pow(res.radii[i], s);
  const int d = k_set.dim();
  res.witness.assign(k_set.size(), std::numeric_limits<double>::quiet_NaN());
  parallel_for(k_set.size(), [&](std::size_t c) {
    const Point x = cube_center(k_set.cubes()[c], d);
    for (std::size_t i = 0; i < res.radii.size(); ++i) {
      if (mu.ball_mass(x, res.radii[i]) < bounds[i]) {
        res.witness[c] = res.radii[i];
        return;
      }
    }
  });
  res.missing = static_cast<std::size_t>(
      std::count_if(res.witness.begin(), res.witness.end(), [](double w) { return std::isnan(w); }));
  res.holds = res.missing == 0 && !k_set.empty();
  return res;
}

}  // namespace mfkit
