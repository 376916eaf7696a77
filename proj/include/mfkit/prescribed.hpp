#pragma once

// Nested families E_α ⊆ K with controlled net measure, built stage by stage
// from "beginnings" of dyadic cubes.
//
// Stage k+1 is obtained from stage k cube by cube: for a depth-k cube I, if
// M^α_{2^{-(k+1)}}(E^k_α ∩ I) <= 2^{-αk} the piece is kept, otherwise it is
// cut down to the slab I_{|u} with the largest grid-aligned u meeting that
// bound. Exponents are processed from the largest down, and each slab is
// clamped to the one chosen for the next larger exponent so the family stays
// nested at every stage.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfkit/error.hpp"
#include "mfkit/geometry.hpp"
#include "mfkit/net_measure.hpp"

namespace mfkit {

/// The part of a cube lying at or below a_1 + u on the first axis, where a
/// is the cube's lower corner and u = steps · 2^{-resolution}.
struct Slab {
  DyadicCube cube;
  std::int64_t steps = 0;
  int resolution = 0;

  double u() const { return std::ldexp(static_cast<double>(steps), -resolution); }
  std::int64_t full_steps() const { return std::int64_t{1} << (resolution - cube.depth); }
  bool is_full() const { return steps == full_steps(); }

  static Slab make(const DyadicCube& cube, std::int64_t steps, int resolution) {
    detail::require(resolution >= cube.depth && resolution <= kMaxDepth, "slab resolution below cube depth");
    Slab s{cube, steps, resolution};
    detail::require(steps >= 0 && steps <= s.full_steps(), "slab offset outside the cube");
    return s;
  }

  /// Slab for a real offset u, which must sit on the 2^{-resolution} grid.
  static Slab from_real(const DyadicCube& cube, double u, int resolution) {
    const double scaled = std::ldexp(u, resolution);
    const double rounded = std::round(scaled);
    if (!(std::abs(scaled - rounded) <= 1e-9 * std::max(1.0, std::abs(scaled))))
      throw ValidationError("u not on face grid");
    return make(cube, static_cast<std::int64_t>(rounded), resolution);
  }
};

/// Cubes of E inside slab.cube whose first-axis extent ends at or below the cut.
inline DigitalSet slab_restrict(const DigitalSet& e, const Slab& slab) {
  const int depth = e.depth();
  const int common = std::max(depth, slab.resolution);
  const std::int64_t cut = ((slab.cube.coords[0] << (slab.resolution - slab.cube.depth)) + slab.steps)
                           << (common - slab.resolution);
  const int shift = common - depth;
  std::vector<DyadicCube> kept;
  const DigitalSet inside = e.within(slab.cube);
  for (const auto& c : inside.cubes()) {
    const std::int64_t lo = c.coords[0] << shift;
    const std::int64_t hi = (c.coords[0] + 1) << shift;
    if (hi <= cut)
      kept.push_back(c);
    else if (lo < cut)
      throw ValidationError("u not on face grid");
  }
  return DigitalSet(e.dim(), depth, std::move(kept));
}

enum class ScanMode {
  bisection,
  exhaustive,
  stream,  // one pass over growing prefixes; one-dimensional sets only
};

struct AdmissibleSlab {
  Slab slab;
  double value = 0.0;            // net measure of the restricted piece
  bool trimmed_to_face = false;  // no positive grid offset met the bound
};

/// Largest grid offset u (grid of E.depth) with
/// M^α_{2^{-cover_depth}}(E ∩ I_{|u}) <= threshold. The map u -> value is
/// nondecreasing, so bisection and a full scan agree.
namespace detail {

struct StreamScan {
  std::int64_t steps = 0;  // largest admissible offset, or the full width
  double value = 0.0;      // value of the piece cut at steps
  bool exceeded = false;   // false when the whole piece meets the bound
};

// In one dimension a slab of a piece is a prefix of its cubes, so the
// admissible offset is found where the prefix value first leaves the bound.
inline StreamScan stream_scan(std::span<const DyadicCube> piece, int depth, const DyadicCube& cube, double alpha,
                              double threshold, int cover_depth) {
  PrefixCover1D prefix(cube.depth, depth, alpha, cover_depth);
  const std::int64_t base = cube.coords[0] << (depth - cube.depth);
  StreamScan out;
  for (const auto& c : piece) {
    const double v = prefix.push(c.coords[0]);
    if (v > threshold + kCoverTieTolerance) {
      out.steps = c.coords[0] - base;
      out.exceeded = true;
      return out;
    }
    out.value = v;
  }
  out.steps = std::int64_t{1} << (depth - cube.depth);
  return out;
}

}  // namespace detail

inline AdmissibleSlab largest_admissible_u(const DigitalSet& e, const DyadicCube& cube, double alpha,
                                           double threshold, int cover_depth,
                                           ScanMode mode = ScanMode::bisection) {
  const DigitalSet piece = e.within(cube);
  if (mode == ScanMode::stream) {
    if (!(cover_depth >= 0 && cover_depth <= e.depth() && alpha > 0.0 && alpha <= e.dim()))
      throw ValidationError("invalid exponent/depth");
    detail::require(e.dim() == 1, "streaming scan needs a one-dimensional set");
    const auto scan = detail::stream_scan(piece.cubes(), e.depth(), cube, alpha, threshold, cover_depth);
    if (!scan.exceeded) throw ValidationError("no trimming needed");
    return AdmissibleSlab{Slab::make(cube, scan.steps, e.depth()), scan.value, scan.steps == 0};
  }
  const double full_value = net_measure(piece, alpha, cover_depth);
  if (full_value <= threshold + kCoverTieTolerance) throw ValidationError("no trimming needed");

  const int resolution = e.depth();
  auto value_at = [&](std::int64_t steps) {
    return net_measure(slab_restrict(piece, Slab::make(cube, steps, resolution)), alpha, cover_depth);
  };
  const std::int64_t full = std::int64_t{1} << (resolution - cube.depth);

  std::int64_t best = 0;
  double best_value = 0.0;
  if (mode == ScanMode::bisection) {
    std::int64_t lo = 0, hi = full;  // value(lo) within bound, value(hi) above
    while (hi - lo > 1) {
      const std::int64_t mid = lo + (hi - lo) / 2;
      const double v = value_at(mid);
      if (v <= threshold + kCoverTieTolerance) {
        lo = mid;
        best_value = v;
      } else {
        hi = mid;
      }
    }
    best = lo;
  } else {
    for (std::int64_t i = 0; i <= full; ++i) {
      const double v = value_at(i);
      if (v <= threshold + kCoverTieTolerance) {
        best = i;
        best_value = v;
      }
    }
  }
  return AdmissibleSlab{Slab::make(cube, best, resolution), best_value, best == 0};
}

enum class StageAction { keep, trim, face, clamp };

struct StageDecision {
  int stage;  // the stage being produced
  DyadicCube cube;
  StageAction action;
  std::int64_t steps;   // applied slab offset on the grid of K.depth
  double value_before;  // M^α_{2^{-stage}} of the piece before the step
  double value_after;   // same exponent and δ, after the step
};

struct StageTally {
  std::size_t keep = 0, trim = 0, face = 0, clamp = 0;
};

struct PrescribedFamily {
  std::vector<double> alphas;
  std::vector<std::vector<DigitalSet>> stages;   // stages[a][k] = E_{alphas[a]}^k
  std::vector<std::vector<StageTally>> tallies;  // tallies[a][k] for producing stage k
  std::vector<std::vector<StageDecision>> decisions;  // filled when requested

  int k_max() const { return static_cast<int>(stages.front().size()) - 1; }
  const DigitalSet& limit(std::size_t a) const { return stages[a].back(); }
};

struct FamilyOptions {
  bool record_decisions = false;
};

inline PrescribedFamily build_prescribed_family(const DigitalSet& k_set, const std::vector<double>& alphas,
                                                int k_max, FamilyOptions opts = {}) {
  detail::require(!alphas.empty(), "no exponents given");
  detail::require(!k_set.empty(), "empty set");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    detail::require(alphas[i] > 0.0 && alphas[i] <= k_set.dim(), "exponent outside (0, d]");
    if (i > 0) detail::require(alphas[i] > alphas[i - 1], "exponents must be strictly increasing");
  }
  detail::require(k_max >= 0, "negative stage count");
  detail::require(k_max + 1 <= k_set.depth(), "insufficient resolution");

  const std::size_t na = alphas.size();
  const int resolution = k_set.depth();
  PrescribedFamily fam;
  fam.alphas = alphas;
  fam.stages.assign(na, std::vector<DigitalSet>{k_set});
  fam.tallies.assign(na, std::vector<StageTally>(1));
  fam.decisions.resize(na);

  for (int k = 0; k < k_max; ++k) {
    std::vector<DyadicCube> regions;
    for (const auto& c : fam.stages[na - 1][k].cubes()) regions.push_back(c.ancestor(k));
    std::sort(regions.begin(), regions.end());
    regions.erase(std::unique(regions.begin(), regions.end()), regions.end());

    std::vector<std::vector<DyadicCube>> next(na);
    std::vector<StageTally> tally(na);
    const std::int64_t full = std::int64_t{1} << (resolution - k);
    for (const auto& region : regions) {
      std::int64_t cap = full;
      for (std::size_t a = na; a-- > 0;) {
        const double alpha = alphas[a];
        const double threshold = cube_power(k, alpha);
        StageAction action = StageAction::keep;
        std::int64_t own = full;
        double before = std::numeric_limits<double>::quiet_NaN();
        std::span<const DyadicCube> range;
        DigitalSet piece;
        if (k_set.dim() == 1) {
          // One axis: the piece is a contiguous run and every slab a prefix of it.
          const auto& cubes = fam.stages[a][k].cubes();
          const std::int64_t base = region.coords[0] << (resolution - k);
          const auto first = std::lower_bound(cubes.begin(), cubes.end(), base,
                                              [](const DyadicCube& c, std::int64_t v) { return c.coords[0] < v; });
          const auto last = std::lower_bound(first, cubes.end(), base + full,
                                             [](const DyadicCube& c, std::int64_t v) { return c.coords[0] < v; });
          range = std::span<const DyadicCube>(first, last);
          if (range.empty()) {
            cap = 0;
            continue;
          }
          const auto scan = detail::stream_scan(range, resolution, region, alpha, threshold, k + 1);
          if (scan.exceeded) {
            own = scan.steps;
            action = own == 0 ? StageAction::face : StageAction::trim;
          }
          if (opts.record_decisions) {
            piece = DigitalSet(1, resolution, std::vector<DyadicCube>(range.begin(), range.end()));
            before = net_measure(piece, alpha, k + 1);
          }
        } else {
          piece = fam.stages[a][k].within(region);
          if (piece.empty()) {
            cap = 0;
            continue;
          }
          before = net_measure(piece, alpha, k + 1);
          if (before > threshold + kCoverTieTolerance) {
            const auto adm = largest_admissible_u(piece, region, alpha, threshold, k + 1);
            own = adm.slab.steps;
            action = adm.trimmed_to_face ? StageAction::face : StageAction::trim;
          }
        }
        const std::int64_t applied = std::min(own, cap);
        if (applied < own) action = StageAction::clamp;
        cap = applied;

        std::vector<DyadicCube> kept;
        if (k_set.dim() == 1) {
          const std::int64_t cut = (region.coords[0] << (resolution - k)) + applied;
          for (const auto& c : range) {
            if (c.coords[0] >= cut) break;
            kept.push_back(c);
          }
        } else {
          const DigitalSet cut = applied == full ? piece : slab_restrict(piece, Slab::make(region, applied, resolution));
          kept = cut.cubes();
        }
        next[a].insert(next[a].end(), kept.begin(), kept.end());
        switch (action) {
          case StageAction::keep: ++tally[a].keep; break;
          case StageAction::trim: ++tally[a].trim; break;
          case StageAction::face: ++tally[a].face; break;
          case StageAction::clamp: ++tally[a].clamp; break;
        }
        if (opts.record_decisions) {
          const double after =
              action == StageAction::keep ? before : net_measure(DigitalSet(k_set.dim(), resolution, kept), alpha, k + 1);
          fam.decisions[a].push_back(StageDecision{k + 1, region, action, applied, before, after});
        }
      }
    }
    for (std::size_t a = 0; a < na; ++a) {
      fam.stages[a].emplace_back(k_set.dim(), resolution, std::move(next[a]));
      fam.tallies[a].push_back(tally[a]);
    }
  }
  return fam;
}

struct StageCheck {
  bool pass = true;
  std::size_t alpha_index = 0;
  std::optional<DyadicCube> first_bad;
};

/// Per-stage outcome of each structural condition on a family:
///   A  nesting across exponents,
///   B  each piece in a depth-(k-1) cube is K ∩ I_{|u} or empty,
///   C  stages decrease,
///   D  M^α_{2^{-k}}(E^k ∩ I) <= 2^{-α(k-1)} for depth-(k-1) cubes I.
struct FamilyReport {
  std::vector<StageCheck> a, b, c, d;  // indexed by stage

  static bool all(const std::vector<StageCheck>& v) {
    return std::all_of(v.begin(), v.end(), [](const StageCheck& s) { return s.pass; });
  }
  bool all_pass() const { return all(a) && all(b) && all(c) && all(d); }
};

inline FamilyReport verify_family(const PrescribedFamily& fam, const DigitalSet& k_set) {
  const std::size_t na = fam.alphas.size();
  const int stages = fam.k_max() + 1;
  const int depth = k_set.depth();
  FamilyReport rep;
  rep.a.resize(stages);
  rep.b.resize(stages);
  rep.c.resize(stages);
  rep.d.resize(stages);

  auto fail = [](StageCheck& chk, std::size_t a, const DyadicCube& cube) {
    if (!chk.pass) return;
    chk.pass = false;
    chk.alpha_index = a;
    chk.first_bad = cube;
  };

  for (int k = 0; k < stages; ++k) {
    for (std::size_t a = 0; a + 1 < na; ++a) {
      const auto extra = set_difference(fam.stages[a][k], fam.stages[a + 1][k]);
      if (!extra.empty()) fail(rep.a[k], a, extra.cubes().front());
    }
    for (std::size_t a = 0; a < na; ++a) {
      const DigitalSet& cur = fam.stages[a][k];
      if (k + 1 < stages) {
        const auto extra = set_difference(fam.stages[a][k + 1], cur);
        if (!extra.empty()) fail(rep.c[k + 1], a, extra.cubes().front());
      }
      if (k == 0) {
        if (!(cur == k_set)) {
          const auto diff = set_difference(cur, k_set);
          fail(rep.b[0], a, diff.empty() ? DyadicCube{} : diff.cubes().front());
        }
        continue;
      }
      std::vector<DyadicCube> regions;
      for (const auto& c : cur.cubes()) regions.push_back(c.ancestor(k - 1));
      std::sort(regions.begin(), regions.end());
      regions.erase(std::unique(regions.begin(), regions.end()), regions.end());
      const double bound = cube_power(k - 1, fam.alphas[a]);
      for (const auto& region : regions) {
        const DigitalSet piece = cur.within(region);
        std::int64_t end = 0;
        for (const auto& c : piece.cubes()) end = std::max(end, c.coords[0] + 1);
        const std::int64_t steps = end - (region.coords[0] << (depth - region.depth));
        const auto expected = slab_restrict(k_set, Slab::make(region, steps, depth));
        if (!(expected == piece)) {
          const auto diff = set_difference(expected, piece);
          fail(rep.b[k], a, diff.empty() ? set_difference(piece, expected).cubes().front() : diff.cubes().front());
        }
        if (net_measure(piece, fam.alphas[a], k) > bound + kCoverTieTolerance) fail(rep.d[k], a, region);
      }
    }
  }
  return rep;
}

/// Nested Moran subsets of [0,1): binary digit j (1-based) is free when
/// frac(j·φ) < α, with φ the golden ratio conjugate, and equal to 1 otherwise.
/// The sets increase with α and about αj of the first j digits are free, so
/// the box counts grow like 2^{αj} at every scale up to the depth.
inline DigitalSet golden_moran_set(int depth, double alpha) {
  detail::check_dim_depth(1, depth);
  detail::require(alpha >= 0.0 && alpha <= 1.0, "exponent outside [0, 1]");
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  std::vector<std::int64_t> codes{0};
  for (int j = 1; j <= depth; ++j) {
    const bool free = std::fmod(j * phi, 1.0) < alpha;
    std::vector<std::int64_t> next;
    next.reserve(codes.size() * (free ? 2 : 1));
    for (auto c : codes) {
      if (free) next.push_back(2 * c);
      next.push_back(2 * c + 1);
    }
    codes = std::move(next);
  }
  std::vector<DyadicCube> cubes;
  cubes.reserve(codes.size());
  for (auto c : codes) cubes.push_back(DyadicCube{depth, {c, 0, 0}});
  return DigitalSet(1, depth, std::move(cubes));
}

}  // namespace mfkit
