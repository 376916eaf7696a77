#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mfkit/mfkit.hpp"
#include "support.hpp"

using namespace mfkit;
using namespace testing_support;
namespace fx = mfkit::acceptance::fixtures;

namespace {

AtomicMeasure grid_uniform(int j) {
  std::vector<Point> pts;
  for (int i = 0; i < (1 << j); ++i) pts.push_back({std::ldexp(static_cast<double>(i), -j)});
  return AtomicMeasure::uniform(pts);
}

double min_gap(const AtomicMeasure& mu) {
  double gap = std::numeric_limits<double>::infinity();
  const auto& a = mu.atoms();
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) gap = std::min(gap, distance(a[i].x, a[j].x));
  return gap;
}

}  // namespace

TEST(AtomicMeasureTest, MergesAndValidates) {
  const AtomicMeasure mu(1, {Atom{{0.5}, 0.25}, Atom{{0.1}, 0.5}, Atom{{0.5}, 0.25}});
  ASSERT_EQ(mu.size(), 2u);
  EXPECT_EQ(mu.atoms()[1].w, 0.5);
  EXPECT_THROW(AtomicMeasure(1, {Atom{{0.5}, 0.5}}), ValidationError);
  EXPECT_NO_THROW(AtomicMeasure(1, {Atom{{0.5}, 0.5}}, false));
  EXPECT_THROW(AtomicMeasure(1, {Atom{{0.5}, -1.0}}, false), ValidationError);
  EXPECT_THROW(AtomicMeasure(2, {Atom{{0.5}, 1.0}}), ValidationError);
}

TEST(BallMass, Examples) {
  const auto d0 = AtomicMeasure::dirac({0.0});
  EXPECT_EQ(ball_mass(d0, std::vector{0.0}, 1e-9), 1.0);
  EXPECT_EQ(ball_mass(d0, std::vector{1.0}, 0.5), 0.0);
  const auto u = AtomicMeasure::uniform(std::vector<Point>{{0.0}, {0.25}, {0.5}, {0.75}});
  EXPECT_EQ(ball_mass(u, std::vector{0.0}, 0.3), 0.5);
  EXPECT_EQ(ball_mass(u, std::vector{0.0}, 0.25), 0.25);  // open ball
}

TEST(BallMass, AgreesWithDirectSumAndIsMonotone) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const int dim = 1 + t % 3;
    std::vector<Atom> atoms;
    for (int i = 0; i < 30; ++i) {
      Point x(dim);
      for (auto& v : x) v = unit(rng);
      atoms.push_back(Atom{x, unit(rng)});
    }
    const auto mu = AtomicMeasure(dim, atoms, false).normalize();
    Point x(dim);
    for (auto& v : x) v = unit(rng);
    double prev = 0;
    for (int j = 0; j < 12; ++j) {
      const double r = 0.05 * (j + 1);
      long double direct = 0;
      for (const auto& a : mu.atoms()) direct += distance(a.x, x) < r ? a.w : 0.0;
      const double m = mu.ball_mass(x, r);
      EXPECT_NEAR(m, static_cast<double>(direct), 1e-15);
      EXPECT_GE(m, prev);
      prev = m;
    }
  }
}

TEST(Blend, Examples) {
  const auto nu = AtomicMeasure::dirac({0.0});
  const auto mu0 = AtomicMeasure::dirac({1.0});
  EXPECT_EQ(blend(nu, mu0, 0.0), nu);
  EXPECT_EQ(blend(nu, mu0, 1.0), mu0);
  const auto b = blend(nu, mu0, 0.25);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b.atoms()[0].w, 0.75);
  EXPECT_EQ(b.atoms()[1].w, 0.25);
  EXPECT_THROW(blend(nu, mu0, 1.5), ValidationError);
  EXPECT_THROW(blend(nu, mu0, -0.1), ValidationError);
}

TEST(Blend, BallMassIsLinear) {
  std::mt19937_64 rng(52);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const auto nu = fx::random_measure(rng, 1 + t % 2);
    const auto mu0 = fx::random_measure(rng, 1 + t % 2);
    const double tt = unit(rng);
    const auto b = blend(nu, mu0, tt);
    EXPECT_NEAR(b.total_mass(), 1.0, 1e-10);
    Point x(nu.dim());
    for (auto& v : x) v = unit(rng);
    const double r = unit(rng);
    EXPECT_NEAR(b.ball_mass(x, r), (1 - tt) * nu.ball_mass(x, r) + tt * mu0.ball_mass(x, r), 1e-15);
  }
}

TEST(Mixture, Examples) {
  const auto a = AtomicMeasure::dirac({0.0});
  const auto b = AtomicMeasure::dirac({1.0});
  EXPECT_EQ(geometric_mixture(std::vector{a}), a);
  const auto m = geometric_mixture(std::vector{a, b});
  EXPECT_NEAR(m.atoms()[0].w, 2.0 / 3, 1e-15);
  EXPECT_NEAR(m.atoms()[1].w, 1.0 / 3, 1e-15);
  EXPECT_THROW(geometric_mixture(std::vector<AtomicMeasure>{}), ValidationError);
}

TEST(Mixture, ComponentLowerBoundAndMass) {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<AtomicMeasure> parts;
    const std::size_t count = 1 + t % 6;
    for (std::size_t k = 0; k < count; ++k) parts.push_back(fx::random_measure(rng, 2));
    const auto mix = geometric_mixture(parts);
    EXPECT_NEAR(mix.total_mass(), 1.0, 1e-10);
    for (int probe = 0; probe < 20; ++probe) {
      const Point x{unit(rng), unit(rng)};
      const double r = unit(rng);
      for (std::size_t k = 0; k < count; ++k)
        EXPECT_GE(mix.ball_mass(x, r), mixture_coefficient(k + 1, count) * parts[k].ball_mass(x, r) - 1e-15);
    }
  }
}

TEST(Prop41, SinglePointCube) {
  const auto k = DigitalSet::full(1, 16);
  const auto e = set1(16, {0});
  const auto cm = prop41_measure(k, e, 0.5, 3);
  ASSERT_EQ(cm.levels.size(), 3u);
  EXPECT_NEAR(cm.measure.total_mass(), 1.0, 1e-10);
  for (const auto& level : cm.levels) {
    ASSERT_EQ(level.cubes.size(), 1u);
    EXPECT_GE(level.cubes[0].depth, 2 * (level.n + 1));
    EXPECT_LE(level.sigma, std::ldexp(1.0, -(level.n + 1)));
    EXPECT_NEAR(level.reps[0][0], std::ldexp(1.0, -17), 1e-18);
    const double jn = std::ldexp(1.0, -level.cubes[0].depth);
    EXPECT_GE(cm.measure.ball_mass(level.reps[0], jn), level.omega * level.sigma - 1e-15);
  }
  // All levels share the point, so one atom holds all the mass.
  EXPECT_EQ(cm.measure.size(), 1u);
  EXPECT_GT(cm.levels[1].omega, cm.levels[0].omega);
}

TEST(Prop41, Errors) {
  const auto k = DigitalSet::full(1, 8);
  EXPECT_THROW(prop41_measure(k, DigitalSet(1, 8), 0.5, 3), ValidationError);
  EXPECT_THROW(prop41_measure(set1(8, {1}), set1(8, {2}), 0.5, 3), ValidationError);
  EXPECT_THROW(prop41_measure(k, set1(8, {2}), 0.5, 0), ValidationError);
  // The full interval has positive measure at every exponent up to 1.
  EXPECT_THROW(prop41_measure(k, k, 0.9, 2), NumericError);
}

// With covers of side <= 2^{-(n+1)} the Cantor digital set of depth 16 costs
// 2^{-0.1 D} at its own depth, above the 2^{-(n+1)} budget already at n = 1.
TEST(Prop41, CantorDepthSixteenBudget) {
  const auto c = fx::cantor_set(16);
  EXPECT_NEAR(net_measure(c, 0.6, 16), std::exp2(-1.6), 1e-12);
  EXPECT_THROW(prop41_measure(c, c, 0.6, 4), NumericError);
}

TEST(Prop41, BallBoundOnSparseTarget) {
  const auto k = DigitalSet::full(1, 20);
  const auto e = golden_moran_set(20, 0.3);
  const auto cm = prop41_measure(k, e, 0.6, 3);
  for (const auto& level : cm.levels) {
    EXPECT_EQ(level.delta_depth, level.n + 1);
    EXPECT_LE(level.sigma, std::ldexp(1.0, -(level.n + 1)));
    for (std::size_t i = 0; i < level.cubes.size(); ++i) {
      const double r = level.cubes[i].side();
      EXPECT_GE(cm.measure.ball_mass(level.reps[i], 2 * r), level.omega * std::pow(r, 0.6) * (1 - 1e-12));
    }
  }
}

TEST(Spray, PackingArithmetic) {
  const auto k = DigitalSet::full(1, 14);
  const auto mu = AtomicMeasure::dirac({0.5});
  // Sixteen points 8 · 16^{-2} apart do not fit in a ball of radius 0.1.
  EXPECT_THROW(spray_measure(mu, k, 0.5, 0.1, std::vector<std::size_t>{16}), NumericError);
  // A hundred points need gaps above 8 · 10^{-4}, which the same ball allows.
  const auto nu = spray_measure(mu, k, 0.5, 0.1, std::vector<std::size_t>{100});
  EXPECT_EQ(nu.size(), 100u);
  EXPECT_GT(min_gap(nu), spray_separation(100, 0.5));
  EXPECT_NEAR(spray_separation(100, 0.5), 8e-4, 1e-15);
  for (const auto& a : nu.atoms()) {
    EXPECT_EQ(a.w, 0.01);
    EXPECT_LT(std::abs(a.x[0] - 0.5), 0.1);
  }
  EXPECT_LE(fortet_mourier(mu, nu), 0.1 + 1e-9);
}

TEST(Spray, GapInKIsAnError) {
  std::vector<std::int64_t> ms;
  for (std::int64_t m = 0; m < 1024; ++m)
    if (std::abs(m - 512) > 200) ms.push_back(m);
  EXPECT_THROW(spray_measure(AtomicMeasure::dirac({0.5}), set1(10, ms), 0.5, 0.1, std::vector<std::size_t>{1}),
               NumericError);
}

TEST(Spray, CountsGapsAndDistance) {
  const auto k = DigitalSet::full(1, 12);
  std::mt19937_64 rng(54);
  for (int t = 0; t < 10; ++t) {
    const double x1 = 0.1 + 0.3 * (t % 3) / 3.0, x2 = 0.6 + 0.3 * (t % 2);
    const auto mu = AtomicMeasure(1, {Atom{{x1}, 0.4}, Atom{{x2}, 0.6}});
    const std::vector<std::size_t> counts{5 + rng() % 20, 5 + rng() % 20};
    const double rho = 0.05;
    const auto nu = spray_measure(mu, k, 0.25, rho, counts);
    EXPECT_EQ(nu.size(), counts[0] + counts[1]);
    EXPECT_NEAR(nu.total_mass(), 1.0, 1e-10);
    for (std::size_t i = 0; i < 2; ++i) {
      std::vector<Atom> part;
      for (const auto& a : nu.atoms())
        if (std::abs(a.x[0] - mu.atoms()[i].x[0]) < rho) part.push_back(a);
      EXPECT_EQ(part.size(), counts[i]);
      EXPECT_GT(min_gap(AtomicMeasure(1, part, false)), spray_separation(counts[i], 0.25));
    }
    EXPECT_LE(fortet_mourier(mu, nu), rho + 1e-9);
  }
}

TEST(Ulm, SprayHasWitnesses) {
  const auto k = DigitalSet::full(1, 12);
  const auto nu = spray_measure(AtomicMeasure::dirac({0.5}), k, 0.5, 0.1, std::vector<std::size_t>{100});
  // Near r = 2 · 100^{-2} a ball meets at most one atom: 1/100 < r^{1/2}.
  const auto res = check_Ulm(nu, k, 3000, 6000, 0.5, 8);
  EXPECT_TRUE(res.holds);
  for (std::size_t c = 0; c < k.size(); ++c) {
    const auto x = cube_center(k.cubes()[c], 1);
    EXPECT_LT(nu.ball_mass(x, res.witness[c]), std::pow(res.witness[c], 0.5));
  }
}

TEST(Ulm, DiracFails) {
  const auto k = DigitalSet::full(1, 6);
  const auto res = check_Ulm(AtomicMeasure::dirac({0.5}), k, 1, 4, 0.3, 20);
  EXPECT_FALSE(res.holds);
  EXPECT_GT(res.missing, 0u);
  EXPECT_THROW(check_Ulm(AtomicMeasure::dirac({0.5}), k, 4, 4, 0.3, 20), ValidationError);
}

TEST(Ulm, AgreesWithEnumeration) {
  const auto k = DigitalSet::full(1, 7);
  for (int j : {3, 5, 7}) {
    const auto mu = grid_uniform(j);
    for (double s : {0.3, 0.6, 0.9}) {
      const auto res = check_Ulm(mu, k, 2, 200, s, 25);
      bool all = true;
      for (std::size_t c = 0; c < k.size(); ++c) {
        const double x = k.cubes()[c].center(0);
        double found = std::numeric_limits<double>::quiet_NaN();
        for (double r : res.radii) {
          double mass = 0;
          for (int i = 0; i < (1 << j); ++i) mass += std::abs(std::ldexp(i, -j) - x) < r ? std::ldexp(1.0, -j) : 0.0;
          if (mass < std::pow(r, s)) {
            found = r;
            break;
          }
        }
        all = all && !std::isnan(found);
        if (std::isnan(found))
          EXPECT_TRUE(std::isnan(res.witness[c]));
        else
          EXPECT_EQ(res.witness[c], found);
      }
      EXPECT_EQ(res.holds, all);
    }
  }
}
