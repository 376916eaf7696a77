#pragma once

// Self-similar sets and measures: similarity dimension, symbolic codes and
// digit frequencies, the entropy ratio Λ, the constrained maximum
// f(λ) = max_{p ∈ C(λ)} Λ(p), its right inverse g, and rasterized attractors.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "mfkit/error.hpp"
#include "mfkit/geometry.hpp"

namespace mfkit {

/// x -> ratio · R x + translation, R orthogonal (row-major, identity if empty).
struct Similarity {
  double ratio = 0.5;
  std::vector<double> rotation;
  std::vector<double> translation;

  int dim() const { return static_cast<int>(translation.size()); }

  double linear(int row, int col) const {
    const double r = rotation.empty() ? (row == col ? 1.0 : 0.0) : rotation[row * dim() + col];
    return ratio * r;
  }

  Point apply(std::span<const double> x) const {
    const int d = dim();
    Point y(translation);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) y[i] += linear(i, j) * x[j];
    return y;
  }

  /// Rotation is a signed permutation, so images of boxes are boxes.
  bool axis_aligned() const {
    if (rotation.empty()) return true;
    const int d = dim();
    for (int i = 0; i < d; ++i) {
      int nonzero = 0;
      for (int j = 0; j < d; ++j) {
        const double v = rotation[i * d + j];
        if (v == 0.0) continue;
        if (std::abs(std::abs(v) - 1.0) > 1e-12) return false;
        ++nonzero;
      }
      if (nonzero != 1) return false;
    }
    return true;
  }
};

struct Box {
  std::vector<double> lo, hi;
};

namespace detail {

// Affine map x -> A x + b stored row-major, with its contraction ratio.
struct Affine {
  int dim;
  double ratio;
  std::vector<double> a;
  std::vector<double> b;

  static Affine identity(int d) {
    Affine m{d, 1.0, std::vector<double>(d * d, 0.0), std::vector<double>(d, 0.0)};
    for (int i = 0; i < d; ++i) m.a[i * d + i] = 1.0;
    return m;
  }

  // this ∘ s
  Affine then_inner(const Similarity& s) const {
    Affine out{dim, ratio * s.ratio, std::vector<double>(dim * dim, 0.0), b};
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        double acc = 0;
        for (int k = 0; k < dim; ++k) acc += a[i * dim + k] * s.linear(k, j);
        out.a[i * dim + j] = acc;
      }
      for (int k = 0; k < dim; ++k) out.b[i] += a[i * dim + k] * s.translation[k];
    }
    return out;
  }

  Point apply(std::span<const double> x) const {
    Point y(b);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) y[i] += a[i * dim + j] * x[j];
    return y;
  }

  // Bounding box of the image of [0,1]^d.
  Box unit_image() const {
    Box box{b, b};
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        const double v = a[i * dim + j];
        (v < 0 ? box.lo[i] : box.hi[i]) += v;
      }
    }
    return box;
  }
};

inline double xlogx(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

}  // namespace detail

class IFSystem {
 public:
  IFSystem(std::vector<Similarity> maps, bool osc_declared) : maps_(std::move(maps)), osc_(osc_declared) {
    detail::require(maps_.size() >= 2, "an IFS needs at least two maps");
    const int d = maps_.front().dim();
    detail::require(d >= 1 && d <= kMaxDim, "unsupported IFS dimension");
    for (const auto& m : maps_) {
      detail::require(m.dim() == d, "maps of mixed dimension");
      detail::require(m.ratio > 0.0 && m.ratio < 1.0, "similarity ratio must lie in (0,1)");
      if (!m.rotation.empty()) {
        detail::require(static_cast<int>(m.rotation.size()) == d * d, "rotation must be d x d");
        for (int i = 0; i < d; ++i) {
          for (int j = 0; j < d; ++j) {
            double dot = 0;
            for (int k = 0; k < d; ++k) dot += m.rotation[i * d + k] * m.rotation[j * d + k];
            detail::require(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-9, "rotation is not orthogonal");
          }
        }
      }
      const Box img = detail::Affine::identity(d).then_inner(m).unit_image();
      for (int i = 0; i < d; ++i)
        detail::require(img.lo[i] >= -1e-12 && img.hi[i] <= 1.0 + 1e-12, "map leaves the unit cube");
    }
    if (osc_ && std::all_of(maps_.begin(), maps_.end(), [](const Similarity& m) { return m.axis_aligned(); })) {
      for (std::size_t i = 0; i < maps_.size(); ++i) {
        const Box bi = detail::Affine::identity(d).then_inner(maps_[i]).unit_image();
        for (std::size_t j = i + 1; j < maps_.size(); ++j) {
          const Box bj = detail::Affine::identity(d).then_inner(maps_[j]).unit_image();
          bool overlap = true;
          for (int a = 0; a < d; ++a)
            overlap = overlap && std::min(bi.hi[a], bj.hi[a]) - std::max(bi.lo[a], bj.lo[a]) > 1e-12;
          detail::require(!overlap, "open set condition fails: cube images overlap");
        }
      }
    }
  }

  /// Homotheties x -> r_i x + t_i in one dimension.
  static IFSystem line(const std::vector<double>& ratios, const std::vector<double>& shifts, bool osc = true) {
    detail::require(ratios.size() == shifts.size(), "ratio/shift count mismatch");
    std::vector<Similarity> maps;
    for (std::size_t i = 0; i < ratios.size(); ++i) maps.push_back(Similarity{ratios[i], {}, {shifts[i]}});
    return IFSystem(std::move(maps), osc);
  }

  std::size_t size() const { return maps_.size(); }
  int dim() const { return maps_.front().dim(); }
  bool osc_declared() const { return osc_; }
  const std::vector<Similarity>& maps() const { return maps_; }

  std::vector<double> ratios() const {
    std::vector<double> r;
    for (const auto& m : maps_) r.push_back(m.ratio);
    return r;
  }

 private:
  std::vector<Similarity> maps_;
  bool osc_;
};

/// A point of the simplex in R^m.
class ProbVector {
 public:
  explicit ProbVector(std::vector<double> p) : p_(std::move(p)) {
    detail::require(!p_.empty(), "not a probability vector");
    double sum = 0;
    for (double v : p_) {
      detail::require(std::isfinite(v) && v >= 0.0, "not a probability vector");
      sum += v;
    }
    detail::require(std::abs(sum - 1.0) <= 1e-12, "not a probability vector");
  }

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  const std::vector<double>& values() const { return p_; }

 private:
  std::vector<double> p_;
};

/// Finite word over {0, ..., m-1}; digit i addresses map i.
using Code = std::vector<std::size_t>;

/// Unique s with Σ r_i^s = 1.
inline double similarity_dimension(std::span<const double> ratios) {
  detail::require(ratios.size() >= 2, "need at least two ratios");
  for (double r : ratios) detail::require(r > 0.0 && r < 1.0, "similarity ratio must lie in (0,1)");
  auto excess = [&](double s) {
    double sum = 0;
    for (double r : ratios) sum += std::pow(r, s);
    return sum - 1.0;
  };
  double lo = 0.0, hi = 1.0;
  while (excess(hi) > 0.0) hi *= 2.0;
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Λ(p) = Σ p_j log p_j / Σ p_j log r_j, with 0 log 0 = 0.
inline double entropy_dim(std::span<const double> p, std::span<const double> ratios) {
  detail::require(p.size() == ratios.size(), "probability/ratio length mismatch");
  double num = 0, den = 0, mass = 0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    detail::require(p[j] >= 0.0, "not a probability vector");
    num += detail::xlogx(p[j]);
    den += p[j] * std::log(ratios[j]);
    mass += p[j];
  }
  if (mass <= 0.0) throw ValidationError("not a probability vector");
  return num / den;
}

inline double entropy_dim(const ProbVector& p, std::span<const double> ratios) {
  return entropy_dim(std::span<const double>(p.values()), ratios);
}

struct FResult {
  double value = 0.0;          // max of Λ over C(λ)
  std::vector<double> argmax;  // maximizer
  int iterations = 0;          // Dinkelbach updates
};

namespace detail {

inline std::vector<double> lambda_caps(double lambda, std::span<const double> ratios, double s) {
  std::vector<double> caps(ratios.size(), 1.0);
  for (std::size_t j = 0; j + 1 < ratios.size(); ++j) caps[j] = std::min(1.0, lambda * std::pow(ratios[j], s));
  return caps;
}

// argmax over {Σp = 1, 0 <= p_j <= cap_j} of Σ -p log p + θ p log r:
// p_j = min(cap_j, c r_j^θ) with c fixed by the mass constraint.
inline std::vector<double> dinkelbach_step(double theta, std::span<const double> ratios,
                                           std::span<const double> caps) {
  const std::size_t m = ratios.size();
  std::vector<double> base(m);
  for (std::size_t j = 0; j < m; ++j) base[j] = std::pow(ratios[j], theta);
  auto mass = [&](double c) {
    double sum = 0;
    for (std::size_t j = 0; j < m; ++j) sum += std::min(caps[j], c * base[j]);
    return sum;
  };
  double lo = 0.0, hi = 1.0;
  while (mass(hi) < 1.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) < 1.0 ? lo : hi) = mid;
  }
  std::vector<double> p(m);
  double total = 0;
  for (std::size_t j = 0; j < m; ++j) total += (p[j] = std::min(caps[j], hi * base[j]));
  // Absorb the bisection residue in an uncapped coordinate.
  for (std::size_t j = m; j-- > 0;) {
    if (p[j] < caps[j]) {
      p[j] = std::max(0.0, p[j] + (1.0 - total));
      break;
    }
  }
  return p;
}

}  // namespace detail

/// f(λ) = max Λ(p) over C(λ) = {p ∈ Δ : p_j <= λ r_j^s, j < m}, by Dinkelbach
/// iteration on the ratio -Σ p log p / -Σ p log r.
inline FResult f_of_lambda(double lambda, std::span<const double> ratios, double s) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("lambda out of range");
  detail::require(ratios.size() >= 2, "need at least two ratios");
  const auto caps = detail::lambda_caps(lambda, ratios, s);
  FResult res;
  double theta = 0.0;
  std::vector<double> p;
  for (int it = 0; it < 100; ++it) {
    p = detail::dinkelbach_step(theta, ratios, caps);
    double h = 0, l = 0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      h -= detail::xlogx(p[j]);
      l -= p[j] * std::log(ratios[j]);
    }
    const double gap = h - theta * l;
    res.iterations = it + 1;
    const double next = h / l;
    if (gap <= 1e-15 || next <= theta) break;
    theta = next;
  }
  res.value = entropy_dim(p, ratios);
  res.value = std::max(res.value, theta);
  res.argmax = std::move(p);
  return res;
}

/// Brute-force maximum of Λ over C(λ) on a grid of the given pitch, with the
/// cap values added as grid points. Supports m = 2 and m = 3.
inline double f_of_lambda_grid(double lambda, std::span<const double> ratios, double s, double pitch = 1e-3) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("lambda out of range");
  const std::size_t m = ratios.size();
  detail::require(m == 2 || m == 3, "grid maximizer supports m = 2 or 3");
  const auto caps = detail::lambda_caps(lambda, ratios, s);
  auto axis = [pitch](double cap) {
    std::vector<double> v;
    const auto n = static_cast<std::int64_t>(std::floor(cap / pitch));
    for (std::int64_t i = 0; i <= n; ++i) v.push_back(static_cast<double>(i) * pitch);
    if (v.back() < cap) v.push_back(cap);
    return v;
  };
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> p(m);
  if (m == 2) {
    for (double a : axis(caps[0])) {
      p = {a, 1.0 - a};
      best = std::max(best, entropy_dim(p, ratios));
    }
    return best;
  }
  const auto xs = axis(caps[0]);
  for (double a : xs) {
    auto ys = axis(std::min(caps[1], 1.0 - a));
    for (double b : ys) {
      const double c = 1.0 - a - b;
      if (c < 0.0) continue;
      p = {a, b, c};
      best = std::max(best, entropy_dim(p, ratios));
    }
  }
  return best;
}

/// g(α) = sup{λ ∈ [0,1] : f(λ) = α}, by bisection on the monotone f.
inline double g_of_alpha(double alpha, std::span<const double> ratios, double s) {
  if (!(alpha > 0.0 && alpha < s)) throw ValidationError("alpha out of range");
  double lo = 0.0, hi = 1.0;  // f(lo) <= α < f(hi)
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f_of_lambda(mid, ratios, s).value <= alpha + 1e-12 ? lo : hi) = mid;
  }
  return lo;
}

struct CodePoint {
  Point point;
  double diameter_bound;  // Π r_{i_j} · diam([0,1]^d)
};

/// S_{i_1} ∘ ... ∘ S_{i_n} applied to the center of the unit cube.
inline CodePoint code_point(const IFSystem& ifs, const Code& code) {
  detail::require(!code.empty(), "empty code");
  const int d = ifs.dim();
  auto comp = detail::Affine::identity(d);
  for (std::size_t digit : code) {
    detail::require(digit < ifs.size(), "digit outside the alphabet");
    comp = comp.then_inner(ifs.maps()[digit]);
  }
  const Point center(d, 0.5);
  return CodePoint{comp.apply(center), comp.ratio * std::sqrt(static_cast<double>(d))};
}

inline ProbVector digit_frequency(const Code& code, std::size_t m) {
  detail::require(!code.empty(), "empty code");
  std::vector<std::size_t> counts(m, 0);
  for (std::size_t digit : code) {
    detail::require(digit < m, "digit outside the alphabet");
    ++counts[digit];
  }
  std::vector<double> p(m);
  for (std::size_t j = 0; j < m; ++j) p[j] = static_cast<double>(counts[j]) / static_cast<double>(code.size());
  // Summing the quotients can be off by an ulp; fix the largest entry.
  const double sum = std::accumulate(p.begin(), p.end(), 0.0);
  auto big = std::max_element(p.begin(), p.end());
  *big += 1.0 - sum;
  return ProbVector(std::move(p));
}

/// Deterministic codes of length n whose digit counts realize ⌊n p_j⌋ (the
/// remainder going to the largest fractional parts), spread by a
/// largest-deficit schedule. Codes differ only by a cyclic rotation drawn from
/// the seed.
inline std::vector<Code> sample_frequency_codes(const ProbVector& p, std::size_t n, std::size_t count,
                                                std::uint64_t seed) {
  const std::size_t m = p.size();
  if (n < m) throw ValidationError("code too short");
  std::vector<std::size_t> quota(m);
  std::vector<std::pair<double, std::size_t>> frac;
  std::size_t assigned = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const double exact = static_cast<double>(n) * p[j];
    quota[j] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[j];
    frac.emplace_back(exact - std::floor(exact), j);
  }
  std::stable_sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++quota[frac[i % m].second];

  Code base;
  base.reserve(n);
  std::vector<std::size_t> emitted(m, 0);
  for (std::size_t t = 1; t <= n; ++t) {
    std::size_t pick = m;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      if (emitted[j] == quota[j]) continue;
      const double deficit = static_cast<double>(t) * static_cast<double>(quota[j]) / static_cast<double>(n) -
                             static_cast<double>(emitted[j]);
      if (deficit > best) {
        best = deficit;
        pick = j;
      }
    }
    ++emitted[pick];
    base.push_back(pick);
  }

  std::mt19937_64 rng(seed);
  std::vector<Code> out;
  out.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t shift = static_cast<std::size_t>(rng() % n);
    Code code(n);
    for (std::size_t i = 0; i < n; ++i) code[i] = base[(i + shift) % n];
    out.push_back(std::move(code));
  }
  return out;
}

/// Π_j p_{i_j}, the Bernoulli mass of the cylinder of a code.
inline double bernoulli_cylinder_mass(const ProbVector& p, const Code& code) {
  double mass = 1.0;
  for (std::size_t digit : code) {
    detail::require(digit < p.size(), "digit outside the alphabet");
    mass *= p[digit];
  }
  return mass;
}

/// Outer rasterization of the attractor: codes are expanded until the cylinder
/// diameter bound drops to 2^{-depth}, then each cylinder's image of the unit
/// cube is rasterized as a closed box.
inline DigitalSet ifs_digital_set(const IFSystem& ifs, int depth, std::size_t max_cylinders = std::size_t{1} << 24) {
  const int d = ifs.dim();
  detail::check_dim_depth(d, depth);
  const double target = std::ldexp(1.0, -depth);
  const double diam = std::sqrt(static_cast<double>(d));
  const std::int64_t n = std::int64_t{1} << depth;
  std::vector<DyadicCube> cubes;
  std::vector<detail::Affine> stack{detail::Affine::identity(d)};
  std::size_t visited = 0;
  while (!stack.empty()) {
    const auto cur = std::move(stack.back());
    stack.pop_back();
    if (++visited > max_cylinders) throw NumericError("depth too large for ratios");
    if (cur.ratio * diam > target) {
      for (const auto& m : ifs.maps()) stack.push_back(cur.then_inner(m));
      continue;
    }
    const Box box = cur.unit_image();
    std::array<std::int64_t, kMaxDim> lo{}, hi{};
    for (int a = 0; a < d; ++a) {
      lo[a] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(std::ldexp(box.lo[a], depth))), 0, n - 1);
      hi[a] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(std::ldexp(box.hi[a], depth))), 0, n - 1);
    }
    DyadicCube c{depth, {}};
    for (int a = 0; a < d; ++a) c.coords[a] = lo[a];
    while (true) {
      cubes.push_back(c);
      int a = 0;
      for (; a < d; ++a) {
        if (++c.coords[a] <= hi[a]) break;
        c.coords[a] = lo[a];
      }
      if (a == d) break;
    }
  }
  return DigitalSet(d, depth, std::move(cubes));
}

}  // namespace mfkit
