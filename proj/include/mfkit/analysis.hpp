#pragma once

// Finite-scale multifractal estimators on atomic measures: local dimensions
// over a dyadic radius window, coarse level sets and spectra, the lower
// L^q-spectrum, and its Legendre transform.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mfkit/error.hpp"
#include "mfkit/geometry.hpp"
#include "mfkit/measures.hpp"
#include "mfkit/parallel.hpp"

namespace mfkit {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Dyadic radius window r_j = 2^{-j}, j_lo <= j <= j_hi.
struct Window {
  int j_lo = 0;
  int j_hi = 0;
};

namespace detail {
inline void check_window(Window w) {
  detail::require(w.j_lo >= 0 && w.j_lo < w.j_hi && w.j_hi <= 60, "invalid radius window");
}
}  // namespace detail

struct SpectrumCurve {
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<std::string> flags;  // empty string when the value is plain

  SpectrumCurve() = default;
  SpectrumCurve(std::vector<double> g, std::vector<double> v, std::vector<std::string> f = {})
      : grid(std::move(g)), values(std::move(v)), flags(std::move(f)) {
    if (flags.empty()) flags.assign(grid.size(), "");
    detail::require(values.size() == grid.size() && flags.size() == grid.size(), "curve length mismatch");
    for (std::size_t i = 1; i < grid.size(); ++i)
      detail::require(grid[i] > grid[i - 1], "curve grid must be strictly increasing");
  }

  std::size_t size() const { return grid.size(); }
};

struct LocalDimEstimate {
  double lower = kInf;  // smallest two-point slope
  double upper = kInf;  // largest two-point slope
  double fit = kInf;    // least-squares slope over radii with positive mass
  Window window;
  bool undefined = false;  // every ball in the window was empty
};

/// Slopes of log μ(B(x, r)) against log r over the window.
inline LocalDimEstimate local_dims(const AtomicMeasure& mu, std::span<const double> x, Window w) {
  detail::check_window(w);
  LocalDimEstimate est;
  est.window = w;
  std::vector<double> log_mass;
  for (int j = w.j_lo; j <= w.j_hi; ++j) {
    const double m = mu.ball_mass(x, std::ldexp(1.0, -j));
    log_mass.push_back(m > 0.0 ? std::log2(m) : -kInf);
  }
  est.lower = kInf;
  est.upper = -kInf;
  for (std::size_t i = 0; i + 1 < log_mass.size(); ++i) {
    const double slope = std::isfinite(log_mass[i + 1]) ? log_mass[i] - log_mass[i + 1] : kInf;
    est.lower = std::min(est.lower, slope);
    est.upper = std::max(est.upper, slope);
  }
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < log_mass.size(); ++i) {
    if (!std::isfinite(log_mass[i])) break;
    xs.push_back(-static_cast<double>(w.j_lo + static_cast<int>(i)));
    ys.push_back(log_mass[i]);
  }
  est.undefined = xs.empty();
  est.fit = xs.size() >= 2 ? std::clamp(detail::ls_slope(xs, ys), est.lower, est.upper) : kInf;
  return est;
}

/// local_dims at every cube center of K.
inline std::vector<LocalDimEstimate> local_dims_on(const AtomicMeasure& mu, const DigitalSet& k_set, Window w) {
  detail::check_window(w);
  detail::require(mu.dim() == k_set.dim(), "measure and K of different dimension");
  std::vector<LocalDimEstimate> out(k_set.size());
  parallel_for(k_set.size(),
               [&](std::size_t i) { out[i] = local_dims(mu, cube_center(k_set.cubes()[i], k_set.dim()), w); });
  return out;
}

enum class LevelMode {
  fit,    // fit within [α - ε, α + ε]
  lower,  // lower <= α
  upper,  // upper >= α; box-dim of these sets is not a packing-dimension estimate
};

namespace detail {
inline bool in_level(const LocalDimEstimate& e, double alpha, double eps, LevelMode mode) {
  switch (mode) {
    case LevelMode::fit: return e.fit >= alpha - eps && e.fit <= alpha + eps;
    case LevelMode::lower: return e.lower <= alpha;
    case LevelMode::upper: return e.upper >= alpha && !e.undefined;
  }
  return false;
}

inline DigitalSet select_level(const DigitalSet& k_set, const std::vector<LocalDimEstimate>& est, double alpha,
                               double eps, LevelMode mode) {
  std::vector<DyadicCube> keep;
  for (std::size_t i = 0; i < est.size(); ++i)
    if (in_level(est[i], alpha, eps, mode)) keep.push_back(k_set.cubes()[i]);
  return DigitalSet(k_set.dim(), k_set.depth(), std::move(keep));
}
}  // namespace detail

/// Cubes of K whose center has a local-dimension estimate near α.
inline DigitalSet coarse_level_set(const AtomicMeasure& mu, const DigitalSet& k_set, double alpha, double eps, Window w,
                                   LevelMode mode = LevelMode::fit) {
  detail::require(eps > 0.0, "epsilon must be positive");
  return detail::select_level(k_set, local_dims_on(mu, k_set, w), alpha, eps, mode);
}

struct SpectrumOptions {
  double eps = 0.1;
  Window local;             // radii for local dimensions
  Window boxes{1, 8};       // levels for the box-counting slope
  LevelMode mode = LevelMode::fit;
};

/// Box-dimension estimate of coarse_level_set at each α; -inf for empty sets.
inline SpectrumCurve coarse_spectrum(const AtomicMeasure& mu, const DigitalSet& k_set, std::vector<double> alphas,
                                     const SpectrumOptions& opt) {
  detail::require(opt.eps > 0.0, "epsilon must be positive");
  detail::check_window(opt.boxes);
  const auto est = local_dims_on(mu, k_set, opt.local);
  std::vector<double> values;
  std::vector<std::string> flags;
  for (double a : alphas) {
    const auto level = detail::select_level(k_set, est, a, opt.eps, opt.mode);
    if (level.empty()) {
      values.push_back(-kInf);
      flags.push_back("empty");
      continue;
    }
    const auto box = upper_box_dim_estimate(level, opt.boxes.j_lo, opt.boxes.j_hi);
    values.push_back(std::clamp(box.slope, 0.0, static_cast<double>(k_set.dim())));
    flags.push_back("");
  }
  return SpectrumCurve(std::move(alphas), std::move(values), std::move(flags));
}

struct LqSpectrum {
  SpectrumCurve fit;        // least-squares slope of log S_r(q) against log r
  SpectrumCurve min_slope;  // smallest two-point slope
};

/// S_r(q) = Σ_i w_i μ(B(x_i, r))^{q-1} over the atoms, evaluated in the log domain.
inline LqSpectrum lq_spectrum(const AtomicMeasure& mu, const std::vector<double>& qs, Window w) {
  detail::check_window(w);
  detail::require(mu.normalized() && !mu.empty(), "not a probability measure");
  const std::size_t nr = static_cast<std::size_t>(w.j_hi - w.j_lo + 1);
  const auto& atoms = mu.atoms();
  // log_m[i * nr + j]: log2 of the mass of the ball around atom i at radius j.
  std::vector<double> log_m(atoms.size() * nr);
  parallel_for(atoms.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < nr; ++j)
      log_m[i * nr + j] = std::log2(mu.ball_mass(atoms[i].x, std::ldexp(1.0, -(w.j_lo + static_cast<int>(j)))));
  });
  std::vector<double> log_w(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) log_w[i] = std::log2(atoms[i].w);

  std::vector<double> fit(qs.size()), low(qs.size());
  std::vector<std::string> flags(qs.size());
  std::vector<double> xs(nr);
  for (std::size_t j = 0; j < nr; ++j) xs[j] = -static_cast<double>(w.j_lo + static_cast<int>(j));
  for (std::size_t k = 0; k < qs.size(); ++k) {
    const double q = qs[k];
    if (q == 1.0) {
      fit[k] = low[k] = 0.0;
      continue;
    }
    std::vector<double> ys(nr);
    for (std::size_t j = 0; j < nr; ++j) {
      double peak = -kInf;
      for (std::size_t i = 0; i < atoms.size(); ++i) peak = std::max(peak, log_w[i] + (q - 1.0) * log_m[i * nr + j]);
      long double acc = 0;
      for (std::size_t i = 0; i < atoms.size(); ++i)
        acc += std::exp2(static_cast<long double>(log_w[i] + (q - 1.0) * log_m[i * nr + j] - peak));
      ys[j] = peak + static_cast<double>(std::log2(acc));
    }
    fit[k] = detail::ls_slope(xs, ys);
    low[k] = kInf;
    for (std::size_t j = 0; j + 1 < nr; ++j) low[k] = std::min(low[k], ys[j] - ys[j + 1]);
    if (!std::isfinite(fit[k]) || !std::isfinite(low[k])) flags[k] = "capped";
  }
  return LqSpectrum{SpectrumCurve(qs, std::move(fit), flags), SpectrumCurve(qs, std::move(low), flags)};
}

struct LegendreValue {
  double value = kInf;
  bool flagged = false;  // no finite sample was available
};

/// min over the grid of qα - D(q); samples with D = -inf are skipped.
inline LegendreValue legendre_transform(const SpectrumCurve& curve, double alpha) {
  detail::require(curve.size() > 0, "empty curve");
  LegendreValue out;
  bool any = false;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double d = curve.values[i];
    if (d == -kInf) continue;
    any = true;
    // One rounding for qα − D keeps exact identities exact on the grid.
    const long double v = static_cast<long double>(curve.grid[i]) * alpha - static_cast<long double>(d);
    out.value = std::min(out.value, static_cast<double>(v));
  }
  out.flagged = !any;
  return out;
}

/// The L^q-spectrum shared by typical measures on a set of upper box dimension s.
inline double reference_typical_spectrum(double s, double q) {
  detail::require(s > 0.0, "dimension must be positive");
  if (q >= 1.0) return 0.0;
  if (q >= 0.0) return std::fma(s, q, -s);  // -s(1 - q) with one rounding
  return -kInf;
}

inline SpectrumCurve reference_typical_curve(double s, std::vector<double> qs) {
  std::vector<double> v;
  for (double q : qs) v.push_back(reference_typical_spectrum(s, q));
  return SpectrumCurve(std::move(qs), std::move(v));
}

}  // namespace mfkit
