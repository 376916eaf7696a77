#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "mfkit/mfkit.hpp"
#include "support.hpp"

using namespace mfkit;
using namespace testing_support;

namespace {

const std::vector<double> kHalves{0.5, 0.5};

double binary_entropy_bits(double p) { return -(p * std::log2(p) + (1 - p) * std::log2(1 - p)); }

std::vector<double> random_ratios(std::mt19937_64& rng, std::size_t m) {
  std::uniform_real_distribution<double> r(0.05, 0.9);
  std::vector<double> out(m);
  for (auto& v : out) v = r(rng);
  return out;
}

// Digits in the tests are 0-based: digit 0 addresses the first map.
IFSystem binary() { return IFSystem::line(kHalves, {0.0, 0.5}); }
IFSystem cantor() { return IFSystem::line({1.0 / 3, 1.0 / 3}, {0.0, 2.0 / 3}); }

}  // namespace

TEST(SimilarityDimension, ClosedForms) {
  EXPECT_NEAR(similarity_dimension(kHalves), 1.0, 1e-12);
  EXPECT_NEAR(similarity_dimension(std::vector{1.0 / 3, 1.0 / 3}), std::log(2.0) / std::log(3.0), 1e-10);
  EXPECT_NEAR(similarity_dimension(std::vector{0.5, 0.5, 0.5}), std::log(3.0) / std::log(2.0), 1e-10);
  EXPECT_THROW(similarity_dimension(std::vector{0.5, 1.0}), ValidationError);
  EXPECT_THROW(similarity_dimension(std::vector{0.5}), ValidationError);
}

TEST(SimilarityDimension, RootResidual) {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 200; ++t) {
    const auto r = random_ratios(rng, 2 + t % 4);
    const double s = similarity_dimension(r);
    double sum = 0;
    for (double v : r) sum += std::pow(v, s);
    EXPECT_NEAR(sum, 1.0, 1e-10);
  }
}

TEST(EntropyDim, Examples) {
  EXPECT_DOUBLE_EQ(entropy_dim(ProbVector({0.5, 0.5}), kHalves), 1.0);
  EXPECT_EQ(entropy_dim(ProbVector({1.0, 0.0}), std::vector{0.3, 0.6}), 0.0);
  EXPECT_NEAR(entropy_dim(ProbVector({0.25, 0.75}), kHalves), binary_entropy_bits(0.25), 1e-12);
  EXPECT_NEAR(entropy_dim(ProbVector({0.25, 0.75}), kHalves), 0.8112781, 1e-6);
  EXPECT_THROW(ProbVector({0.0, 0.0}), ValidationError);
  EXPECT_THROW(ProbVector({0.7, 0.7}), ValidationError);
}

TEST(EntropyDim, NaturalWeightsGiveDimensionAndBoundsHold) {
  std::mt19937_64 rng(42);
  for (int t = 0; t < 100; ++t) {
    const auto r = random_ratios(rng, 2 + t % 3);
    const double s = similarity_dimension(r);
    std::vector<double> natural;
    for (double v : r) natural.push_back(std::pow(v, s));
    EXPECT_NEAR(entropy_dim(natural, r), s, 1e-9);
    const int samples = t < 10 ? 10000 : 300;
    for (int i = 0; i < samples; ++i) {
      const double l = entropy_dim(random_simplex(rng, r.size()), r);
      EXPECT_GE(l, 0.0);
      EXPECT_LE(l, s + 1e-9);
    }
  }
}

TEST(FOfLambda, Examples) {
  EXPECT_NEAR(f_of_lambda(0.0, kHalves, 1.0).value, 0.0, 1e-12);
  EXPECT_NEAR(f_of_lambda(1.0, kHalves, 1.0).value, 1.0, 1e-12);
  // p1 <= 0.25; the one-dimensional grid oracle peaks at the cap.
  double grid_best = 0;
  for (int i = 0; i <= 250; ++i) {
    const double p = i / 1000.0;
    grid_best = std::max(grid_best, entropy_dim(std::vector{p, 1 - p}, kHalves));
  }
  const auto f = f_of_lambda(0.5, kHalves, 1.0);
  EXPECT_NEAR(f.value, 0.8112781, 1e-4);
  EXPECT_NEAR(f.value, grid_best, 1e-12);
  EXPECT_NEAR(f.argmax[0], 0.25, 1e-12);
  EXPECT_THROW(f_of_lambda(1.5, kHalves, 1.0), ValidationError);
  EXPECT_THROW(f_of_lambda(-0.1, kHalves, 1.0), ValidationError);
}

TEST(FOfLambda, EndpointsNondecreasingAndContinuous) {
  std::mt19937_64 rng(43);
  for (int t = 0; t < 12; ++t) {
    const auto r = random_ratios(rng, 2 + t % 3);
    const double s = similarity_dimension(r);
    EXPECT_NEAR(f_of_lambda(0.0, r, s).value, 0.0, 1e-12);
    EXPECT_NEAR(f_of_lambda(1.0, r, s).value, s, 1e-9);
    double prev = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double v = f_of_lambda(i / 1000.0, r, s).value;
      EXPECT_GE(v, prev - 1e-12);
      if (i > 0) {
        EXPECT_LT(v - prev, 0.1);
      }
      prev = v;
    }
  }
}

TEST(FOfLambda, ArgmaxIsFeasible) {
  std::mt19937_64 rng(44);
  for (int t = 0; t < 50; ++t) {
    const auto r = random_ratios(rng, 2 + t % 3);
    const double s = similarity_dimension(r);
    const double lambda = (t % 10) / 10.0 + 0.05;
    const auto f = f_of_lambda(lambda, r, s);
    double sum = 0;
    for (std::size_t j = 0; j < r.size(); ++j) {
      EXPECT_GE(f.argmax[j], 0.0);
      if (j + 1 < r.size()) {
        EXPECT_LE(f.argmax[j], lambda * std::pow(r[j], s) + 1e-12);
      }
      sum += f.argmax[j];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_NEAR(entropy_dim(f.argmax, r), f.value, 1e-12);
  }
}

TEST(FOfLambda, DinkelbachVersusGrid) {
  std::mt19937_64 rng(45);
  for (int t = 0; t < 10; ++t) {
    const auto r = random_ratios(rng, 2 + t % 2);
    const double s = similarity_dimension(r);
    for (double lambda : {0.15, 0.4, 0.65, 0.9}) {
      const double dink = f_of_lambda(lambda, r, s).value;
      const double grid = f_of_lambda_grid(lambda, r, s);
      EXPECT_GE(dink, grid - 1e-6);
      EXPECT_LE(dink, grid + 0.05);  // pitch 1e-3 times a generous slope bound
    }
  }
}

TEST(GOfAlpha, InvertsF) {
  EXPECT_NEAR(g_of_alpha(0.8112781, kHalves, 1.0), 0.5, 1e-3);
  EXPECT_LT(g_of_alpha(1e-6, kHalves, 1.0), 1e-3);
  EXPECT_GT(g_of_alpha(1.0 - 1e-9, kHalves, 1.0), 0.99);
  EXPECT_THROW(g_of_alpha(0.0, kHalves, 1.0), ValidationError);
  EXPECT_THROW(g_of_alpha(1.0, kHalves, 1.0), ValidationError);

  std::mt19937_64 rng(46);
  for (int t = 0; t < 6; ++t) {
    const auto r = random_ratios(rng, 2 + t % 3);
    const double s = similarity_dimension(r);
    double prev = -1;
    for (int i = 1; i < 40; ++i) {
      const double alpha = s * i / 40.0;
      const double g = g_of_alpha(alpha, r, s);
      EXPECT_NEAR(f_of_lambda(g, r, s).value, alpha, 1e-4);
      EXPECT_GT(g, prev);
      prev = g;
    }
  }
}

TEST(CodePoint, BinaryAndCantor) {
  const auto b = binary();
  for (std::size_t n : {1u, 5u, 12u}) {
    const auto cp = code_point(b, Code(n, 0));
    EXPECT_NEAR(cp.point[0], std::ldexp(1.0, -static_cast<int>(n) - 1), 1e-15);
    EXPECT_NEAR(cp.diameter_bound, std::ldexp(1.0, -static_cast<int>(n)), 1e-15);
    Code tail(n, 0);
    tail[0] = 1;
    const double x = code_point(b, tail).point[0];
    EXPECT_GE(x, 0.5);
    EXPECT_LE(x, 0.5 + std::ldexp(1.0, -static_cast<int>(n)));
  }
  const double c = code_point(cantor(), Code{1, 1}).point[0];
  EXPECT_GE(c, 8.0 / 9);
  EXPECT_LE(c, 1.0);
  EXPECT_THROW(code_point(b, Code{}), ValidationError);
  EXPECT_THROW(code_point(b, Code{2}), ValidationError);
}

TEST(DigitFrequency, Examples) {
  EXPECT_EQ(digit_frequency(Code{0, 0, 0, 0}, 2).values(), (std::vector{1.0, 0.0}));
  EXPECT_EQ(digit_frequency(Code{0, 1, 0, 1}, 2).values(), (std::vector{0.5, 0.5}));
  EXPECT_EQ(digit_frequency(Code{0, 1, 1, 1}, 2).values(), (std::vector{0.25, 0.75}));
  const auto p = digit_frequency(Code{0, 1, 2, 2, 1, 0, 2}, 3);
  EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-12);
}

TEST(SampleCodes, ForcedCounts) {
  for (const auto& code : sample_frequency_codes(ProbVector({0.5, 0.5}), 8, 5, 1)) {
    EXPECT_EQ(std::count(code.begin(), code.end(), 0u), 4);
  }
  for (const auto& code : sample_frequency_codes(ProbVector({0.25, 0.75}), 8, 5, 2)) {
    EXPECT_EQ(std::count(code.begin(), code.end(), 0u), 2);
    EXPECT_EQ(std::count(code.begin(), code.end(), 1u), 6);
  }
  EXPECT_THROW(sample_frequency_codes(ProbVector({0.2, 0.3, 0.5}), 2, 1, 0), ValidationError);
}

TEST(SampleCodes, FrequenciesWithinAlphabetOverLength) {
  std::mt19937_64 rng(47);
  for (int t = 0; t < 100; ++t) {
    const std::size_t m = 2 + t % 3;
    const auto p = random_simplex(rng, m);
    const std::size_t n = m + rng() % 200;
    const auto codes = sample_frequency_codes(ProbVector(p), n, 3, rng());
    for (const auto& code : codes) {
      ASSERT_EQ(code.size(), n);
      const auto f = digit_frequency(code, m);
      for (std::size_t j = 0; j < m; ++j)
        EXPECT_LE(std::abs(f[j] - p[j]), static_cast<double>(m) / static_cast<double>(n));
    }
    // The seed only rotates the schedule.
    auto a = codes[0], b = codes[1];
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
  }
}

TEST(CylinderMass, ProductsAndTotals) {
  const ProbVector half({0.5, 0.5});
  EXPECT_EQ(bernoulli_cylinder_mass(half, Code(7, 1)), std::ldexp(1.0, -7));
  const ProbVector q({0.25, 0.75});
  EXPECT_EQ(bernoulli_cylinder_mass(q, Code{0, 0}), 1.0 / 16);
  EXPECT_EQ(bernoulli_cylinder_mass(q, Code{1, 1, 1}), 27.0 / 64);
  EXPECT_EQ(bernoulli_cylinder_mass(q, Code{0, 1, 1}),
            bernoulli_cylinder_mass(q, Code{0}) * bernoulli_cylinder_mass(q, Code{1, 1}));
  // Dyadic weights make every partial sum exact.
  const ProbVector p3({0.25, 0.5, 0.25});
  for (std::size_t n = 1; n <= 6; ++n) {
    double total = 0;
    std::size_t count = 1;
    for (std::size_t i = 0; i < n; ++i) count *= 3;
    for (std::size_t idx = 0; idx < count; ++idx) {
      Code code(n);
      std::size_t rest = idx;
      for (auto& digit : code) {
        digit = rest % 3;
        rest /= 3;
      }
      total += bernoulli_cylinder_mass(p3, code);
    }
    EXPECT_EQ(total, 1.0);
  }
}

TEST(IfsRaster, BinaryGivesFullInterval) {
  EXPECT_EQ(ifs_digital_set(binary(), 6), DigitalSet::full(1, 6));
}

// Dyadic cells of level j met by the middle-third Cantor set, from the level-11
// triadic cylinders [a, a + 3^-11] whose endpoints both lie in the set.
std::size_t cantor_cells(int j) {
  const std::int64_t den = 177147;  // 3^11
  std::vector<std::int64_t> left{0};
  for (std::int64_t len = den; len > 1; len /= 3) {
    std::vector<std::int64_t> next;
    for (auto a : left) {
      next.push_back(a);
      next.push_back(a + 2 * len / 3);
    }
    left.swap(next);
  }
  std::set<std::int64_t> cells;
  const std::int64_t top = (std::int64_t{1} << j) - 1;
  for (auto a : left) {
    cells.insert((a << j) / den);
    cells.insert(std::min(top, ((a + 1) << j) / den));
  }
  return cells.size();
}

TEST(IfsRaster, CantorCounts) {
  const auto e = ifs_digital_set(cantor(), 8);
  for (const auto& c : box_counts(e, 8)) EXPECT_EQ(c.count, cantor_cells(c.level)) << c.level;
  EXPECT_EQ(box_counts(e, 8).back().count, 70u);
  // Dyadic counts of a triadic set settle slowly; at depth 16 the slope is near log 2 / log 3.
  const auto deep = ifs_digital_set(cantor(), 16);
  for (int j : {12, 16}) EXPECT_EQ(box_counts(deep, 16)[j].count, cantor_cells(j));
  EXPECT_NEAR(upper_box_dim_estimate(deep, 4, 16).slope, std::log(2.0) / std::log(3.0), 0.05);
  // Outer approximation: the coded points of the attractor land inside.
  for (std::size_t idx = 0; idx < 64; ++idx) {
    Code code(12);
    for (std::size_t i = 0; i < 12; ++i) code[i] = (idx >> (i % 6)) & 1;
    const auto p = code_point(cantor(), code).point;
    EXPECT_FALSE(rasterize_points(std::vector<Point>{p}, 8).cubes().empty());
    EXPECT_TRUE(e.contains(rasterize_points(std::vector<Point>{p}, 8).cubes()[0]));
  }
}

TEST(IfsRaster, PlanarSierpinskiCarpetCount) {
  std::vector<Similarity> maps;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) maps.push_back(Similarity{0.5, {}, {0.5 * i, 0.5 * j}});
  EXPECT_EQ(ifs_digital_set(IFSystem(maps, true), 4), DigitalSet::full(2, 4));
}

TEST(IfsSystem, Validation) {
  EXPECT_THROW(IFSystem::line({0.5}, {0.0}), ValidationError);
  EXPECT_THROW(IFSystem::line({0.6, 0.6}, {0.0, 0.4}), ValidationError);  // images overlap
  EXPECT_NO_THROW(IFSystem::line({0.6, 0.6}, {0.0, 0.4}, false));
  EXPECT_THROW(IFSystem::line({0.5, 0.5}, {0.0, 0.6}), ValidationError);  // leaves [0,1]
  EXPECT_THROW(ifs_digital_set(cantor(), 20, 1000), NumericError);
}
