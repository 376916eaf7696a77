#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mfkit/mfkit.hpp"
#include "support.hpp"

using namespace mfkit;
using namespace testing_support;
namespace fx = mfkit::acceptance::fixtures;

TEST(SlabRestrict, Examples) {
  const auto e = DigitalSet::full(1, 3);
  const auto root = cube1(0, 0);
  EXPECT_EQ(slab_restrict(e, Slab::from_real(root, 0.5, 3)).cubes(), set1(3, {0, 1, 2, 3}).cubes());
  EXPECT_TRUE(slab_restrict(e, Slab::from_real(root, 0.0, 3)).empty());
  EXPECT_EQ(slab_restrict(e, Slab::from_real(root, 1.0, 3)).cubes(), e.cubes());
}

TEST(SlabRestrict, InsideSubcubeAndPlanar) {
  const auto e = DigitalSet::full(2, 3);
  const auto s = slab_restrict(e, Slab::from_real(cube2(1, 1, 0), 0.25, 3));
  ASSERT_EQ(s.size(), 8u);  // two columns of four
  for (const auto& c : s.cubes()) {
    EXPECT_TRUE(c.coords[0] == 4 || c.coords[0] == 5);
    EXPECT_LT(c.coords[1], 4);
  }
}

TEST(SlabRestrict, Errors) {
  EXPECT_THROW(Slab::from_real(cube1(0, 0), 0.3, 3), ValidationError);
  EXPECT_THROW(Slab::make(cube1(2, 0), 5, 3), ValidationError);
  // A cut finer than the set's cubes straddles one of them.
  EXPECT_THROW(slab_restrict(DigitalSet::full(1, 2), Slab::make(cube1(0, 0), 3, 3)), ValidationError);
}

TEST(AdmissibleU, UnitExponentOnFullInterval) {
  const auto adm = largest_admissible_u(DigitalSet::full(1, 8), cube1(0, 0), 1.0, 0.5, 8);
  EXPECT_EQ(adm.slab.u(), 0.5);
  EXPECT_LE(adm.value, 0.5);
  EXPECT_FALSE(adm.trimmed_to_face);
}

// With covers of side <= 2^{-8}, [0, u) costs (256 u) · 2^{-4}, so the bound
// 0.5 admits u = 1/32. The same bound with unrestricted covers admits 1/4,
// where the single cube [0, 1/4) costs exactly 0.5.
TEST(AdmissibleU, HalfExponentDependsOnCoverDepth) {
  const auto e = DigitalSet::full(1, 8);
  const auto fine = largest_admissible_u(e, cube1(0, 0), 0.5, 0.5, 8);
  EXPECT_EQ(fine.slab.u(), 1.0 / 32);
  const auto oracle_value = [&](double u) {
    return net_measure(slab_restrict(e, Slab::from_real(cube1(0, 0), u, 8)), 0.5, 8);
  };
  EXPECT_LE(oracle_value(1.0 / 32), 0.5);
  EXPECT_GT(oracle_value(1.0 / 32 + 1.0 / 256), 0.5);
  const auto coarse = largest_admissible_u(e, cube1(0, 0), 0.5, 0.5, 0);
  EXPECT_EQ(coarse.slab.u(), 0.25);
}

TEST(AdmissibleU, NoTrimmingNeededAndFace) {
  const auto e = DigitalSet::full(1, 6);
  EXPECT_THROW(largest_admissible_u(e, cube1(0, 0), 1.0, 1.0, 0), ValidationError);
  EXPECT_THROW(largest_admissible_u(e, cube1(0, 0), 1.0, 1.0, 0, ScanMode::stream), ValidationError);
  const auto face = largest_admissible_u(e, cube1(0, 0), 0.5, 1e-3, 6);
  EXPECT_TRUE(face.trimmed_to_face);
  EXPECT_EQ(face.slab.steps, 0);
}

TEST(AdmissibleU, ScanModesAgree) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int checked = 0;
  for (int t = 0; t < 400; ++t) {
    const int dim = t % 4 == 3 ? 2 : 1;
    const int depth = dim == 1 ? 2 + t % 7 : 4;  // face grids of at most 2^8 points
    const auto e = fx::clustered_set(rng, dim, depth);
    const int cd = static_cast<int>(rng() % 3);
    const DyadicCube cube = dim == 1 ? cube1(cd, static_cast<std::int64_t>(rng() % (1u << cd)))
                                     : cube2(cd, rng() % (1u << cd), rng() % (1u << cd));
    const double alpha = dim * (0.05 + 0.95 * unit(rng));
    const int cover_depth = static_cast<int>(rng() % (depth + 1));
    const double value = net_measure(e.within(cube), alpha, cover_depth);
    if (value == 0.0) continue;
    const double threshold = value * unit(rng);
    const auto bis = largest_admissible_u(e, cube, alpha, threshold, cover_depth, ScanMode::bisection);
    const auto exh = largest_admissible_u(e, cube, alpha, threshold, cover_depth, ScanMode::exhaustive);
    EXPECT_EQ(bis.slab.steps, exh.slab.steps);
    EXPECT_EQ(bis.value, exh.value);
    EXPECT_LE(bis.value, threshold + kCoverTieTolerance);
    if (dim == 1) {
      // The stream scan cuts at the first cube that breaks the bound, which
      // may sit beyond empty grid steps; both cuts select the same cubes.
      const auto str = largest_admissible_u(e, cube, alpha, threshold, cover_depth, ScanMode::stream);
      EXPECT_EQ(slab_restrict(e, str.slab), slab_restrict(e, bis.slab));
      EXPECT_EQ(str.value, bis.value);
    }
    ++checked;
  }
  EXPECT_GT(checked, 200);
}

TEST(AdmissibleU, ValueIsMonotoneInOffset) {
  std::mt19937_64 rng(32);
  for (int t = 0; t < 30; ++t) {
    const auto e = fx::random_set(rng, 2, 4, 0.5);
    double prev = 0.0;
    for (std::int64_t steps = 0; steps <= 16; ++steps) {
      const double v = net_measure(slab_restrict(e, Slab::make(cube2(0, 0, 0), steps, 4)), 1.2, 2);
      EXPECT_GE(v, prev - 1e-12);
      prev = v;
    }
  }
}

namespace {

double limit_box_dim(const PrescribedFamily& fam, std::size_t a) {
  return upper_box_dim_estimate(fam.limit(a), 0, fam.k_max()).slope;
}

}  // namespace

TEST(Family, UnitIntervalThreeExponents) {
  const auto k = DigitalSet::full(1, 10);
  const auto fam = build_prescribed_family(k, {0.3, 0.6, 0.9}, 6);
  EXPECT_TRUE(verify_family(fam, k).all_pass());
  for (std::size_t a = 0; a < 3; ++a) EXPECT_NEAR(limit_box_dim(fam, a), fam.alphas[a], 0.1);
}

TEST(Family, FullExponentKeepsEverything) {
  for (int d : {1, 2}) {
    const auto k = DigitalSet::full(d, d == 1 ? 8 : 5);
    const auto fam = build_prescribed_family(k, {static_cast<double>(d)}, 4);
    for (const auto& stage : fam.stages[0]) EXPECT_EQ(stage, k);
    for (const auto& t : fam.tallies[0]) EXPECT_EQ(t.trim + t.face + t.clamp, 0u);
  }
}

TEST(Family, SingleCubeGivesSlabChain) {
  const auto k = set1(8, {77});
  const auto fam = build_prescribed_family(k, {0.2, 0.7}, 5);
  const auto rep = verify_family(fam, k);
  EXPECT_TRUE(rep.all_pass());
  for (const auto& chain : fam.stages)
    for (const auto& stage : chain) EXPECT_TRUE(stage.empty() || stage == k);
}

TEST(Family, PlanarSetPassesVerification) {
  std::mt19937_64 rng(33);
  const auto k = fx::clustered_set(rng, 2, 5);
  const auto fam = build_prescribed_family(k, {0.4, 0.9, 1.5}, 3);
  EXPECT_TRUE(verify_family(fam, k).all_pass());
}

TEST(Family, RandomOneDimensionalSetsPassVerification) {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const auto k = fx::clustered_set(rng, 1, 9);
    std::vector<double> alphas{0.1 + 0.3 * unit(rng)};
    alphas.push_back(alphas[0] + 0.1 + 0.4 * unit(rng));
    const auto fam = build_prescribed_family(k, alphas, 6);
    EXPECT_TRUE(verify_family(fam, k).all_pass());
  }
}

TEST(Family, KeepDecisionsLeaveStageValueUnchanged) {
  const auto k = fx::cantor_set(10);
  const auto fam = build_prescribed_family(k, {0.3, 0.45}, 7, FamilyOptions{true});
  std::size_t keeps = 0;
  for (std::size_t a = 0; a < 2; ++a) {
    for (const auto& d : fam.decisions[a]) {
      if (d.action != StageAction::keep) {
        EXPECT_LE(d.value_after, cube_power(d.stage - 1, fam.alphas[a]) + kCoverTieTolerance);
        continue;
      }
      ++keeps;
      const auto before = fam.stages[a][d.stage - 1].within(d.cube);
      const auto after = fam.stages[a][d.stage].within(d.cube);
      EXPECT_EQ(before, after);
      EXPECT_EQ(net_measure(after, fam.alphas[a], d.stage), net_measure(before, fam.alphas[a], d.stage));
    }
  }
  EXPECT_GT(keeps, 0u);
}

TEST(Family, Errors) {
  const auto k = DigitalSet::full(1, 6);
  EXPECT_THROW(build_prescribed_family(k, {0.5}, 6), ValidationError);
  EXPECT_THROW(build_prescribed_family(k, {0.6, 0.5}, 3), ValidationError);
  EXPECT_THROW(build_prescribed_family(k, {}, 3), ValidationError);
  EXPECT_THROW(build_prescribed_family(k, {1.5}, 3), ValidationError);
}

// Stage 4 keeps the largest admissible prefix in each depth-3 cube, so
// restoring the first cube it dropped pushes that piece over the bound.
TEST(VerifyFamily, EnlargedCubeIsReported) {
  const auto k = DigitalSet::full(1, 8);
  auto fam = build_prescribed_family(k, {0.4}, 5);
  const auto dropped = set_difference(fam.stages[0][3], fam.stages[0][4]);
  ASSERT_FALSE(dropped.empty());
  const auto extra = dropped.cubes().front();
  fam.stages[0][4] = set_union(fam.stages[0][4], DigitalSet(1, 8, {extra}));
  const auto rep = verify_family(fam, k);
  EXPECT_FALSE(rep.all_pass());
  EXPECT_FALSE(rep.d[4].pass);
  EXPECT_EQ(rep.d[4].first_bad, extra.ancestor(3));
}

TEST(VerifyFamily, CubeOutsidePreviousStageBreaksC) {
  const auto k = DigitalSet::full(1, 8);
  auto fam = build_prescribed_family(k, {0.5}, 4);
  const auto missing = set_difference(k, fam.stages[0][2]);
  ASSERT_FALSE(missing.empty());
  const auto extra = missing.cubes().front();
  fam.stages[0][3] = set_union(fam.stages[0][3], DigitalSet(1, 8, {extra}));
  const auto rep = verify_family(fam, k);
  EXPECT_FALSE(rep.c[3].pass);
  EXPECT_EQ(rep.c[3].first_bad, extra);
}

TEST(VerifyFamily, SwappedExponentsBreakA) {
  const auto k = DigitalSet::full(1, 8);
  auto fam = build_prescribed_family(k, {0.3, 0.8}, 5);
  std::swap(fam.stages[0], fam.stages[1]);
  const auto rep = verify_family(fam, k);
  EXPECT_FALSE(FamilyReport::all(rep.a));
}

TEST(GoldenMoran, NestedWithMatchingCounts) {
  const int depth = 14;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  DigitalSet prev = golden_moran_set(depth, 0.0);
  EXPECT_EQ(prev.size(), 1u);
  for (double alpha : {0.2, 0.4, 0.6, 0.8, 1.0}) {
    const auto e = golden_moran_set(depth, alpha);
    EXPECT_TRUE(prev.is_subset_of(e));
    int free = 0;
    for (int j = 1; j <= depth; ++j) free += std::fmod(j * phi, 1.0) < alpha ? 1 : 0;
    EXPECT_EQ(e.size(), std::size_t{1} << free);
    prev = e;
  }
  EXPECT_EQ(golden_moran_set(depth, 1.0), DigitalSet::full(1, depth));
  EXPECT_NEAR(upper_box_dim_estimate(golden_moran_set(20, 0.5), 1, 20).slope, 0.5, 0.05);
  EXPECT_THROW(golden_moran_set(depth, 1.5), ValidationError);
}
