#pragma once

// The nine acceptance checks, shared by the acceptance test binary and the
// `acceptance` pipeline of the command-line tool. Every check is seeded, so
// reruns print the same numbers.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mfkit/analysis.hpp"
#include "mfkit/geometry.hpp"
#include "mfkit/ifs.hpp"
#include "mfkit/measures.hpp"
#include "mfkit/metric.hpp"
#include "mfkit/net_measure.hpp"
#include "mfkit/prescribed.hpp"

namespace mfkit::acceptance {

struct Outcome {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail = {};
  double seconds = 0.0;
};

namespace fixtures {

inline std::string num(double v, int prec = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

// Every disjoint dyadic cover of E ∩ C by cubes of depth >= j0, listed
// explicitly. Returns nullopt once more than `limit` covers would be needed.
inline std::optional<std::vector<std::vector<DyadicCube>>> covers_of(const DigitalSet& e, const DyadicCube& c, int j0,
                                                                     std::size_t limit) {
  using Covers = std::vector<std::vector<DyadicCube>>;
  if (c.depth == e.depth()) return Covers{{c}};
  const int d = e.dim();
  Covers acc{{}};
  for (int child = 0; child < (1 << d); ++child) {
    DyadicCube ch{c.depth + 1, {}};
    for (int a = 0; a < d; ++a) ch.coords[a] = 2 * c.coords[a] + ((child >> a) & 1);
    if (!e.meets(ch)) continue;
    const auto sub = covers_of(e, ch, j0, limit);
    if (!sub || sub->size() * acc.size() > limit) return std::nullopt;
    Covers next;
    for (const auto& left : acc) {
      for (const auto& right : *sub) {
        auto joined = left;
        joined.insert(joined.end(), right.begin(), right.end());
        next.push_back(std::move(joined));
      }
    }
    acc = std::move(next);
  }
  if (c.depth >= j0) acc.push_back({c});
  return acc;
}

// Least Σ side^s over the explicit list of covers.
inline std::optional<double> brute_force_net_measure(const DigitalSet& e, double s, int j0, std::size_t limit) {
  if (e.empty()) return 0.0;
  const auto all = covers_of(e, DyadicCube{}, j0, limit);
  if (!all) return std::nullopt;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& cover : *all) {
    double sum = 0;
    for (const auto& b : cover) sum += std::pow(std::ldexp(1.0, -b.depth), s);
    best = std::min(best, sum);
  }
  return best;
}

inline DigitalSet random_set(std::mt19937_64& rng, int dim, int depth, double density) {
  std::bernoulli_distribution keep(density);
  const std::int64_t n = std::int64_t{1} << depth;
  std::vector<DyadicCube> cubes;
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < (dim == 2 ? n : 1); ++j)
      if (keep(rng)) cubes.push_back(DyadicCube{depth, {i, j, 0}});
  }
  if (cubes.empty()) cubes.push_back(DyadicCube{depth, {}});
  return DigitalSet(dim, depth, std::move(cubes));
}

// A few cubes clustered inside one random sub-cube, so covers branch at many levels.
inline DigitalSet clustered_set(std::mt19937_64& rng, int dim, int depth) {
  std::uniform_int_distribution<int> anchor_depth(0, depth);
  const int ad = anchor_depth(rng);
  const std::int64_t span = std::int64_t{1} << (depth - ad);
  std::uniform_int_distribution<std::int64_t> anchor(0, (std::int64_t{1} << ad) - 1), off(0, span - 1);
  Coords base{};
  for (int a = 0; a < dim; ++a) base[a] = anchor(rng) * span;
  std::uniform_int_distribution<int> count(1, 7);
  std::vector<DyadicCube> cubes;
  for (int i = count(rng); i > 0; --i) {
    DyadicCube c{depth, {}};
    for (int a = 0; a < dim; ++a) c.coords[a] = base[a] + off(rng);
    cubes.push_back(c);
  }
  return DigitalSet(dim, depth, std::move(cubes));
}

inline DigitalSet cantor_set(int depth) {
  std::vector<std::int64_t> codes{0};
  for (int j = 0; j < depth / 2; ++j) {
    std::vector<std::int64_t> next;
    for (auto c : codes) {
      next.push_back(4 * c);
      next.push_back(4 * c + 3);
    }
    codes = std::move(next);
  }
  std::vector<DyadicCube> cubes;
  for (auto c : codes) cubes.push_back(DyadicCube{depth, {c, 0, 0}});
  return DigitalSet(1, depth, std::move(cubes));
}

// Binomial cascade: digit 0 carries p0, digit 1 carries 1 - p0; atoms at cylinder midpoints.
inline AtomicMeasure binomial_measure(int depth, double p0) {
  const std::size_t n = std::size_t{1} << depth;
  std::vector<Atom> atoms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int ones = std::popcount(i);
    atoms[i] = Atom{{(static_cast<double>(i) + 0.5) / static_cast<double>(n)},
                    std::pow(p0, depth - ones) * std::pow(1.0 - p0, ones)};
  }
  return AtomicMeasure(1, std::move(atoms), false).normalize();
}

inline AtomicMeasure lebesgue_proxy(int depth) {
  const std::size_t n = std::size_t{1} << depth;
  std::vector<Point> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = {(static_cast<double>(i) + 0.5) / static_cast<double>(n)};
  return AtomicMeasure::uniform(pts);
}

inline AtomicMeasure random_measure(std::mt19937_64& rng, int dim) {
  std::uniform_int_distribution<int> count(1, 4), cell(0, 4);
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  std::vector<Atom> atoms;
  for (int i = count(rng); i > 0; --i) {
    Point x(dim);
    for (auto& v : x) v = 0.25 * cell(rng);
    atoms.push_back(Atom{x, weight(rng)});
  }
  return AtomicMeasure(dim, std::move(atoms), false).normalize();
}

}  // namespace fixtures

inline Outcome net_measure_exactness() {
  Outcome out{.id = 1, .name = "net-measure exactness"};
  std::mt19937_64 rng(101);
  std::size_t checked = 0, skipped = 0;
  double worst = 0.0;
  while (checked < 200) {
    const int dim = 1 + static_cast<int>(rng() % 2);
    const int depth = 1 + static_cast<int>(rng() % 6);
    const DigitalSet e = rng() % 3 == 0
                             ? fixtures::random_set(rng, dim, depth, std::uniform_real_distribution<double>(0.05, 0.6)(rng))
                             : fixtures::clustered_set(rng, dim, depth);
    const double s = dim * std::uniform_real_distribution<double>(0.05, 1.0)(rng);
    const int j0 = static_cast<int>(rng() % (depth + 1));
    const auto oracle = fixtures::brute_force_net_measure(e, s, j0, 200000);
    if (!oracle) {
      ++skipped;
      continue;
    }
    // Scaled by max(1, value): large sums of many leaves differ by summation order only.
    worst = std::max(worst, std::abs(net_measure(e, s, j0) - *oracle) / std::max(1.0, *oracle));
    ++checked;
  }
  out.pass = worst <= 1e-12;
  out.detail = "200 sets, max |DP - enumeration| / max(1, value) = " + fixtures::num(worst) + " (" + std::to_string(skipped) +
               " draws with too many covers redrawn)";
  return out;
}

inline Outcome exponent_comparison_suite() {
  Outcome out{.id = 2, .name = "net-measure exponent comparison"};
  std::mt19937_64 rng(202);
  std::size_t swapped_bad = 0, derived_bad = 0, derived_j0_bad = 0;
  for (int i = 0; i < 500; ++i) {
    const int dim = 1 + static_cast<int>(rng() % 2);
    const int depth = 1 + static_cast<int>(rng() % (dim == 1 ? 10 : 6));
    const DigitalSet e = fixtures::random_set(rng, dim, depth, std::uniform_real_distribution<double>(0.02, 0.9)(rng));
    std::uniform_real_distribution<double> u(0.02, 1.0);
    double a = dim * u(rng), b = dim * u(rng);
    if (a > b) std::swap(a, b);
    const double ma = net_measure(e, a, 0), mb = net_measure(e, b, 0);
    if (ma + 1e-12 < std::pow(mb, b / a)) ++swapped_bad;
    if (mb <= 1.0 && ma + 1e-12 < std::pow(mb, a / b)) ++derived_bad;
    // The derived form needs no side condition; check it at a random δ as well.
    const int j0 = static_cast<int>(rng() % (depth + 1));
    if (net_measure(e, a, j0) * (1 + 1e-12) < std::pow(net_measure(e, b, j0), a / b)) ++derived_j0_bad;
  }
  out.pass = swapped_bad == 0 && derived_bad == 0 && derived_j0_bad == 0;
  out.detail = "500 sets at delta=1: swapped-exponent violations " + std::to_string(swapped_bad) +
               ", derived-form violations " + std::to_string(derived_bad) + "; derived form at random delta: " +
               std::to_string(derived_j0_bad);
  return out;
}

inline Outcome prescribed_family() {
  Outcome out{.id = 3, .name = "prescribed family"};
  const auto k_set = DigitalSet::full(1, 10);
  const std::vector<double> alphas{0.3, 0.6, 0.9};
  const int k_max = 6;
  const auto fam = build_prescribed_family(k_set, alphas, k_max);
  const auto rep = verify_family(fam, k_set);
  bool dims_ok = true;
  std::string dims;
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    const double est = upper_box_dim_estimate(fam.limit(a), 0, k_max).slope;
    dims_ok = dims_ok && std::abs(est - alphas[a]) <= 0.1;
    dims += " " + fixtures::num(est, 3);
  }
  out.pass = rep.all_pass() && dims_ok;
  out.detail = std::string("A-D ") + (rep.all_pass() ? "pass" : "FAIL") + "; box dims over levels 0..6:" + dims;
  return out;
}

inline Outcome entropy_identities() {
  Outcome out{.id = 4, .name = "entropy identities"};
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> ratio(0.05, 0.9);
  double worst_fixed = 0, worst_ends = 0, worst_inverse = 0, worst_grid = 0;
  int inverse_systems = 0, grid_systems = 0;
  for (int sys = 0; sys < 100; ++sys) {
    const std::size_t m = 2 + rng() % 3;
    std::vector<double> r(m);
    for (auto& v : r) v = ratio(rng);
    const double s = similarity_dimension(r);
    std::vector<double> p(m);
    for (std::size_t j = 0; j < m; ++j) p[j] = std::pow(r[j], s);
    worst_fixed = std::max(worst_fixed, std::abs(entropy_dim(p, r) - s));
    worst_ends = std::max({worst_ends, std::abs(f_of_lambda(0.0, r, s).value),
                           std::abs(f_of_lambda(1.0, r, s).value - s)});
    if (inverse_systems < 5) {
      ++inverse_systems;
      for (int i = 0; i < 50; ++i) {
        const double alpha = s * (i + 0.5) / 50.0;
        const double lambda = g_of_alpha(alpha, r, s);
        worst_inverse = std::max(worst_inverse, std::abs(f_of_lambda(lambda, r, s).value - alpha));
      }
    }
    if (m <= 3 && grid_systems < 12) {
      ++grid_systems;
      for (double lambda : {0.1, 0.3, 0.5, 0.7, 0.9, 1.0})
        worst_grid = std::max(worst_grid, std::abs(f_of_lambda(lambda, r, s).value - f_of_lambda_grid(lambda, r, s)));
    }
  }
  out.pass = worst_fixed <= 1e-9 && worst_ends <= 1e-6 && worst_inverse <= 1e-4 && worst_grid <= 1e-4;
  out.detail = "Lambda(r^s)-s " + fixtures::num(worst_fixed) + ", f(0)/f(1) " + fixtures::num(worst_ends) +
               ", f(g(a))-a " + fixtures::num(worst_inverse) + " (250 values), Dinkelbach vs grid " +
               fixtures::num(worst_grid) + " (" + std::to_string(grid_systems) + " systems, m<=3)";
  return out;
}

inline Outcome cover_measure_witness() {
  Outcome out{.id = 5, .name = "cover measure on the Cantor set"};
  const auto cantor = fixtures::cantor_set(16);
  const double alpha = 0.6;
  CoverMeasure cm;
  try {
    cm = prop41_measure(cantor, cantor, alpha, 4);
  } catch (const NumericError& err) {
    out.pass = false;
    out.detail = std::string(err.what()) + "; M^0.6 of the depth-16 set is " +
                 fixtures::num(net_measure(cantor, alpha, 2)) + " > budget 0.25";
    return out;
  }
  std::size_t short_atoms = 0;
  for (const auto& level : cm.levels) {
    for (std::size_t i = 0; i < level.cubes.size(); ++i) {
      const double r = level.cubes[i].side();
      if (cm.measure.ball_mass(level.reps[i], 2 * r) < level.omega * std::pow(r, alpha) * (1 - 1e-12)) ++short_atoms;
    }
  }
  double worst_lower = 0;
  for (int i = 0; i < 20; ++i) {
    const auto& c = cantor.cubes()[i * cantor.size() / 20];
    worst_lower = std::max(worst_lower, local_dims(cm.measure, cube_center(c, 1), Window{4, 14}).lower);
  }
  out.pass = short_atoms == 0 && worst_lower <= 0.7;
  out.detail = "ball-mass bound failures " + std::to_string(short_atoms) + ", max lower local dim " +
               fixtures::num(worst_lower, 3);
  return out;
}

inline Outcome spray_and_ulm() {
  Outcome out{.id = 6, .name = "spray and U_{l,m}"};
  const auto k_set = DigitalSet::full(1, 20);
  const auto mu = AtomicMeasure::dirac({0.5});
  const double s = 0.5, rho = 0.1;
  const std::vector<std::size_t> counts{10000};
  const auto nu = spray_measure(mu, k_set, s, rho, counts);
  const auto ulm = check_Ulm(nu, k_set, 1, 1000000000, s, 90);
  const double dist = fortet_mourier(mu, nu);
  out.pass = ulm.holds && nu.size() == 10000 && dist <= rho + 1e-9;
  out.detail = std::to_string(nu.size()) + " atoms, U_{1,1e9} " + (ulm.holds ? "certified" : "not certified") + " (" +
               std::to_string(ulm.missing) + " points without witness), L(mu, spray) = " + fixtures::num(dist, 6);
  return out;
}

inline Outcome fortet_mourier_axioms() {
  Outcome out{.id = 7, .name = "Fortet-Mourier metric"};
  std::mt19937_64 rng(707);
  std::size_t bad_sym = 0, bad_id = 0, bad_tri = 0, bad_neg = 0;
  for (int i = 0; i < 1000; ++i) {
    const int dim = 1 + static_cast<int>(rng() % 2);
    const auto a = fixtures::random_measure(rng, dim);
    const auto b = fixtures::random_measure(rng, dim);
    const auto c = fixtures::random_measure(rng, dim);
    const double ab = fortet_mourier(a, b), ba = fortet_mourier(b, a);
    const double bc = fortet_mourier(b, c), ac = fortet_mourier(a, c);
    if (ab < 0 || bc < 0 || ac < 0) ++bad_neg;
    if (ab != ba) ++bad_sym;
    if (fortet_mourier(a, a) != 0.0 || (a == b) != (ab == 0.0)) ++bad_id;
    if (ac > ab + bc + 1e-9) ++bad_tri;
  }
  double worst_pair = 0;
  std::uniform_real_distribution<double> coord(-1.5, 2.5);
  for (int i = 0; i < 200; ++i) {
    const int dim = 1 + static_cast<int>(rng() % 3);
    Point x(dim), y(dim);
    for (int k = 0; k < dim; ++k) {
      x[k] = coord(rng);
      y[k] = coord(rng);
    }
    const double lp = fortet_mourier_lp(AtomicMeasure::dirac(x), AtomicMeasure::dirac(y));
    worst_pair = std::max(worst_pair, std::abs(lp - std::min(2.0, distance(x, y))));
  }
  out.pass = bad_sym + bad_id + bad_tri + bad_neg == 0 && worst_pair <= 1e-9;
  out.detail = "1000 triples: symmetry " + std::to_string(bad_sym) + ", identity " + std::to_string(bad_id) +
               ", triangle " + std::to_string(bad_tri) + " failures; Dirac pairs LP vs closed form " +
               fixtures::num(worst_pair);
  return out;
}

inline Outcome spectrum_machinery() {
  Outcome out{.id = 8, .name = "spectrum machinery"};
  std::vector<double> qs;
  for (int i = 0; i <= 600; ++i) qs.push_back((i - 200) / 100.0);
  std::size_t inexact = 0;
  for (double s : {0.5, 1.0, 1.585}) {
    const auto curve = reference_typical_curve(s, qs);
    for (int i = 0; i <= 100; ++i) {
      const double alpha = s * (i / 100.0);
      if (legendre_transform(curve, alpha).value != alpha) ++inexact;
    }
  }
  std::vector<double> lq_grid;
  for (int i = 0; i <= 20; ++i) lq_grid.push_back(i / 10.0);
  const auto lq = lq_spectrum(fixtures::lebesgue_proxy(16), lq_grid, Window{2, 10});
  double worst_lq = 0;
  for (std::size_t i = 0; i < lq_grid.size(); ++i)
    worst_lq = std::max(worst_lq, std::abs(lq.fit.values[i] - (lq_grid[i] - 1.0)));
  const auto bin = fixtures::binomial_measure(20, 0.25);
  const double xs[] = {0.0, 1.0 / 3.0, 1.0};
  const double expect[] = {2.0, -0.5 * std::log2(3.0 / 16.0), -std::log2(0.75)};
  double worst_local = 0;
  std::string locals;
  for (int i = 0; i < 3; ++i) {
    const double fit = local_dims(bin, Point{xs[i]}, Window{4, 14}).fit;
    worst_local = std::max(worst_local, std::abs(fit - expect[i]));
    locals += " " + fixtures::num(fit, 5);
  }
  out.pass = inexact == 0 && worst_lq <= 0.1 && worst_local <= 0.05;
  out.detail = "Legendre inexact points " + std::to_string(inexact) + "/303, Lebesgue L^q error " +
               fixtures::num(worst_lq, 3) + ", binomial local dims" + locals;
  return out;
}

inline Outcome mixture_spectrum() {
  Outcome out{.id = 9, .name = "mixture spectrum on the unit interval"};
  const int depth = 20;
  const auto k_set = DigitalSet::full(1, depth);
  std::vector<double> alphas;
  for (int i = 2; i <= 8; ++i) alphas.push_back(i / 10.0);
  std::vector<AtomicMeasure> parts;
  std::string levels;
  for (double a : alphas) {
    const auto e = golden_moran_set(depth, a);
    for (int n = 6; n >= 1; --n) {
      try {
        parts.push_back(prop41_measure(k_set, e, std::min(1.0, a + 0.15), n).measure);
        levels += std::to_string(n);
        break;
      } catch (const NumericError&) {
        if (n == 1) throw;
      }
    }
  }
  const auto mu = geometric_mixture(parts);
  SpectrumOptions opt;
  opt.eps = 0.1;
  opt.local = Window{8, 18};
  opt.boxes = Window{1, 12};
  const auto curve = coarse_spectrum(mu, k_set, alphas, opt);
  double worst = 0;
  std::string vals;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    worst = std::max(worst, std::abs(curve.values[i] - alphas[i]));
    vals += " " + fixtures::num(curve.values[i], 3);
  }
  out.pass = worst <= 0.15;
  out.detail = "spectrum at 0.2..0.8:" + vals + " (max deviation " + fixtures::num(worst, 3) + ", n_max per part " +
               levels + ")";
  return out;
}

/// Runtime limits in seconds; 0 when the criterion sets none.
inline double time_limit(int id) {
  switch (id) {
    case 1: return 10;
    case 3: return 30;
    case 9: return 300;
    default: return 0;
  }
}

/// Runs one check, timing it and turning exceptions into failures.
inline Outcome run(const std::function<Outcome()>& check, int id) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = check();
  } catch (const std::exception& err) {
    out.id = id;
    out.name = "criterion " + std::to_string(id);
    out.pass = false;
    out.detail = std::string("exception: ") + err.what();
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double limit = time_limit(id);
  if (limit > 0 && out.seconds > limit) {
    out.pass = false;
    out.detail += "; exceeded the " + fixtures::num(limit) + " s limit";
  }
  return out;
}

inline const std::vector<std::function<Outcome()>>& checks() {
  static const std::vector<std::function<Outcome()>> all{
      net_measure_exactness, exponent_comparison_suite, prescribed_family, entropy_identities, cover_measure_witness,
      spray_and_ulm,         fortet_mourier_axioms, spectrum_machinery, mixture_spectrum};
  return all;
}

inline std::string format(const Outcome& o) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2fs", o.seconds);
  return std::string(o.pass ? "PASS" : "FAIL") + " [" + std::to_string(o.id) + "] " + o.name + ": " + o.detail +
         " (" + buf + ")";
}

}  // namespace mfkit::acceptance
