#pragma once

#include <span>
#include <vector>

#include "matchkit/core.hpp"

namespace matchkit {

/// Match counts K_M over a matched-into sample.
///
/// `n0` is the size of the sample being matched into, `n1` the number of
/// query points doing the matching. When `counts` describes the matched-into
/// sample itself, the counts sum to n1 * m exactly.
struct MatchCounts {
  std::vector<Index> counts;
  Index n0 = 0;
  Index n1 = 0;
  Index m = 0;

  Index total() const;
};

/// Counts for the sample points and for extra evaluation points, from one pass.
struct ExtendedMatchCounts {
  MatchCounts sample;
  MatchCounts new_points;
};

/// K_M(X_i) for every X_i: each Z_j contributes one count to each of its M
/// nearest X's (ties by smaller id).
MatchCounts match_counts_sample(const PointSet& x, const PointSet& z, Index m);

/// K_M at the sample points and at `new_points`, using a single index over the
/// union. Each Z_j streams neighbors until M sample points are found; new
/// points passed on the way, or tied with the M-th sample point, are counted.
/// At equal distance sample points rank before new points.
ExtendedMatchCounts match_counts_extended(const PointSet& x, const PointSet& z, Index m, const PointSet& new_points);

/// O(N0 * N1) reference implementation of match_counts_sample. Refuses
/// inputs with more than 10^4 points on either side.
MatchCounts brute_force_match_counts(const PointSet& x, const PointSet& z, Index m);

/// O(N0 * N1 + n * N1) reference for K_M at arbitrary points: counts Z_j
/// with ||p - Z_j|| <= ||X_(M)(Z_j) - Z_j||.
MatchCounts brute_force_point_counts(const PointSet& x, const PointSet& z, Index m, const PointSet& points);

/// Two-way matching within a causal dataset.
struct GroupMatches {
  Index m = 0;
  /// K^0 over controls, in the order of `CausalDataset::control_ids()`.
  MatchCounts k0;
  /// K^1 over treated units, in the order of `CausalDataset::treated_ids()`.
  MatchCounts k1;
  /// K^{D_i}_M(i) indexed by global row.
  std::vector<Index> unit_counts;
  /// Row i holds the global ids of the M nearest opposite-group units of unit i.
  std::vector<Index> matched;

  std::span<const Index> matches_of(Index i) const {
    return {matched.data() + i * m, static_cast<std::size_t>(m)};
  }
};

GroupMatches match_counts_by_group(const CausalDataset& ds, Index m);

}  // namespace matchkit
