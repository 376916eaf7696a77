#pragma once

// Fortet–Mourier (bounded Lipschitz) distance between atomic probability
// measures, solved as a linear program over the merged support.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <tuple>
#include <vector>

#include "mfkit/error.hpp"
#include "mfkit/geometry.hpp"
#include "mfkit/measures.hpp"

namespace mfkit {

inline constexpr std::size_t kMaxFmSupport = 400;

struct LpResult {
  double value = 0.0;
  std::vector<double> x;
  std::size_t pivots = 0;
};

/// max c·x subject to A x <= b, x >= 0, for b >= 0. Dense tableau, Bland's rule.
inline LpResult simplex_max(std::span<const double> c, const std::vector<std::vector<double>>& a,
                            std::span<const double> b) {
  constexpr double kEps = 1e-12;
  const std::size_t n = c.size();
  const std::size_t m = a.size();
  detail::require(b.size() == m, "constraint size mismatch");
  for (double v : b) detail::require(v >= 0.0, "simplex needs a feasible origin");
  const std::size_t cols = n + m + 1;
  std::vector<double> t((m + 1) * cols, 0.0);
  auto at = [&](std::size_t r, std::size_t col) -> double& { return t[r * cols + col]; };
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) {
    detail::require(a[i].size() == n, "constraint size mismatch");
    for (std::size_t j = 0; j < n; ++j) at(i, j) = a[i][j];
    at(i, n + i) = 1.0;
    at(i, cols - 1) = b[i];
    basis[i] = n + i;
  }
  for (std::size_t j = 0; j < n; ++j) at(m, j) = -c[j];

  LpResult res;
  while (true) {
    std::size_t enter = cols;
    for (std::size_t j = 0; j + 1 < cols; ++j) {
      if (at(m, j) < -kEps) {
        enter = j;
        break;
      }
    }
    if (enter == cols) break;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i)
      if (at(i, enter) > kEps) best = std::min(best, at(i, cols - 1) / at(i, enter));
    std::size_t leave = m;
    for (std::size_t i = 0; i < m; ++i) {
      if (at(i, enter) <= kEps || at(i, cols - 1) / at(i, enter) > best + kEps) continue;
      if (leave == m || basis[i] < basis[leave]) leave = i;
    }
    if (leave == m) throw NumericError("linear program is unbounded");
    const double piv = at(leave, enter);
    for (std::size_t j = 0; j < cols; ++j) at(leave, j) /= piv;
    for (std::size_t i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const double f = at(i, enter);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < cols; ++j) at(i, j) -= f * at(leave, j);
    }
    basis[leave] = enter;
    ++res.pivots;
  }
  res.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (basis[i] < n) res.x[basis[i]] = at(i, cols - 1);
  res.value = at(m, cols - 1);
  return res;
}

/// Merged support with coefficients μ({z}) − ν({z}); points where both agree are dropped.
struct FMProgram {
  std::vector<Point> points;
  std::vector<double> coeff;
};

namespace detail {

inline void check_pair(const AtomicMeasure& mu, const AtomicMeasure& nu) {
  if (!mu.normalized() || !nu.normalized()) throw ValidationError("not probability measures");
  require(mu.dim() == nu.dim(), "measures of different dimension");
}

// Lexicographic order on (position, weight) lists so that both argument
// orders run the same computation.
inline bool canonical_less(const AtomicMeasure& a, const AtomicMeasure& b) {
  const auto& x = a.atoms();
  const auto& y = b.atoms();
  return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end(), [](const Atom& p, const Atom& q) {
    return std::tie(p.x, p.w) < std::tie(q.x, q.w);
  });
}

}  // namespace detail

inline FMProgram fm_program(const AtomicMeasure& mu, const AtomicMeasure& nu) {
  FMProgram prog;
  const auto& a = mu.atoms();
  const auto& b = nu.atoms();
  std::size_t i = 0, j = 0;
  auto push = [&](const Point& z, double c) {
    if (c == 0.0) return;
    prog.points.push_back(z);
    prog.coeff.push_back(c);
  };
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].x < b[j].x)) {
      push(a[i].x, a[i].w);
      ++i;
    } else if (i == a.size() || b[j].x < a[i].x) {
      push(b[j].x, -b[j].w);
      ++j;
    } else {
      push(a[i].x, a[i].w - b[j].w);
      ++i;
      ++j;
    }
  }
  return prog;
}

/// The distance through the linear program, whatever the inputs.
/// With g = f + 1 in [0, 2] the origin is feasible and the objective shifts
/// by Σ c_i. In one dimension the Lipschitz constraints between
/// neighbours imply all others; otherwise violated pairs are added until none remain.
inline double fortet_mourier_lp(const AtomicMeasure& mu, const AtomicMeasure& nu) {
  detail::check_pair(mu, nu);
  if (detail::canonical_less(nu, mu)) return fortet_mourier_lp(nu, mu);
  const FMProgram prog = fm_program(mu, nu);
  const std::size_t n = prog.points.size();
  if (n == 0) return 0.0;
  if (n > kMaxFmSupport) throw NumericError("support too large");
  long double shift = 0;
  for (double c : prog.coeff) shift += c;

  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;
  for (std::size_t i = 0; i < n; ++i) {
    rows.emplace_back(n, 0.0);
    rows.back()[i] = 1.0;
    rhs.push_back(2.0);
  }
  auto add_pair = [&](std::size_t i, std::size_t j, double dist) {
    rows.emplace_back(n, 0.0);
    rows.back()[i] = 1.0;
    rows.back()[j] = -1.0;
    rhs.push_back(dist);
  };
  const int d = mu.dim();
  if (d == 1) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double gap = distance(prog.points[i], prog.points[i + 1]);
      add_pair(i, i + 1, gap);
      add_pair(i + 1, i, gap);
    }
    return std::max(0.0, simplex_max(prog.coeff, rows, rhs).value - static_cast<double>(shift));
  }
  std::vector<double> dist(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) dist[i * n + j] = distance(prog.points[i], prog.points[j]);
  std::vector<char> added(n * n, 0);
  while (true) {
    const auto sol = simplex_max(prog.coeff, rows, rhs);
    std::vector<std::tuple<double, std::size_t, std::size_t>> bad;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double excess = sol.x[i] - sol.x[j] - dist[i * n + j];
        if (i != j && !added[i * n + j] && excess > 1e-12) bad.emplace_back(-excess, i, j);
      }
    if (bad.empty()) return std::max(0.0, sol.value - static_cast<double>(shift));
    std::sort(bad.begin(), bad.end());
    bad.resize(std::min(bad.size(), 2 * n));
    for (const auto& [neg, i, j] : bad) {
      added[i * n + j] = 1;
      add_pair(i, j, dist[i * n + j]);
    }
  }
}

/// ∫ min(2, ‖x − y‖) dν(y), the distance from δ_x to ν.
inline double fortet_mourier_dirac(std::span<const double> x, const AtomicMeasure& nu) {
  long double acc = 0;
  for (const auto& a : nu.atoms()) acc += a.w * std::min(2.0, distance(a.x, x));
  return static_cast<double>(acc);
}

/// L(μ, ν). Uses the closed form when one side is a point mass.
inline double fortet_mourier(const AtomicMeasure& mu, const AtomicMeasure& nu) {
  detail::check_pair(mu, nu);
  if (mu.size() == 1) return fortet_mourier_dirac(mu.atoms().front().x, nu);
  if (nu.size() == 1) return fortet_mourier_dirac(nu.atoms().front().x, mu);
  return fortet_mourier_lp(mu, nu);
}

/// Mass of the atoms lying in cubes of E.
inline double mass_on(const AtomicMeasure& mu, const DigitalSet& e) {
  detail::require(mu.dim() == e.dim(), "measure and set of different dimension");
  const std::int64_t n = std::int64_t{1} << e.depth();
  long double acc = 0;
  for (const auto& a : mu.atoms()) {
    DyadicCube c{e.depth(), {}};
    bool inside = true;
    for (int i = 0; i < e.dim(); ++i) {
      const double scaled = std::ldexp(a.x[i], e.depth());
      if (!(scaled >= 0.0 && scaled < static_cast<double>(n))) inside = false;
      c.coords[i] = inside ? static_cast<std::int64_t>(std::floor(scaled)) : 0;
    }
    if (inside && e.contains(c)) acc += a.w;
  }
  return static_cast<double>(acc);
}

struct ProbeResult {
  double excess = 0.0;    // μ(E) − ν(E(γ))
  double distance = 0.0;  // L(μ, ν)
};

inline ProbeResult lemma_topo1_probe(const AtomicMeasure& mu, const AtomicMeasure& nu, const DigitalSet& e,
                                     double gamma) {
  detail::require(gamma > 0.0, "enlargement radius must be positive");
  return ProbeResult{mass_on(mu, e) - mass_on(nu, enlargement(e, gamma)), fortet_mourier(mu, nu)};
}

}  // namespace mfkit
