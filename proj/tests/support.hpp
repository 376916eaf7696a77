#pragma once

// Generators and small oracles shared by the unit tests.

#include <cmath>
#include <random>
#include <vector>

#include "mfkit/mfkit.hpp"

namespace testing_support {

using mfkit::DigitalSet;
using mfkit::DyadicCube;

inline DyadicCube cube1(int depth, std::int64_t m) { return DyadicCube{depth, {m, 0, 0}}; }
inline DyadicCube cube2(int depth, std::int64_t a, std::int64_t b) { return DyadicCube{depth, {a, b, 0}}; }

inline DigitalSet set1(int depth, const std::vector<std::int64_t>& ms) {
  std::vector<DyadicCube> cubes;
  for (auto m : ms) cubes.push_back(cube1(depth, m));
  return DigitalSet(1, depth, cubes);
}

// Keeps a random subset of a set, each cube with probability `keep`.
inline DigitalSet thin(std::mt19937_64& rng, const DigitalSet& e, double keep) {
  std::bernoulli_distribution coin(keep);
  std::vector<DyadicCube> out;
  for (const auto& c : e.cubes())
    if (coin(rng)) out.push_back(c);
  return DigitalSet(e.dim(), e.depth(), out);
}

// Direct count of distinct depth-j ancestors, without sorting tricks.
inline std::size_t count_level(const DigitalSet& e, int j) {
  std::vector<DyadicCube> seen;
  for (const auto& c : e.cubes()) {
    const auto a = c.ancestor(j);
    bool dup = false;
    for (const auto& s : seen) dup = dup || s == a;
    if (!dup) seen.push_back(a);
  }
  return seen.size();
}

inline std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t m) {
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> p(m);
  double sum = 0;
  for (auto& v : p) sum += (v = ex(rng));
  for (auto& v : p) v /= sum;
  double total = 0;
  for (std::size_t i = 0; i + 1 < m; ++i) total += p[i];
  p.back() = 1.0 - total;
  if (p.back() < 0) p.back() = 0;
  return p;
}

}  // namespace testing_support
