#include "matchkit/matching.hpp"

#include <algorithm>
#include <numeric>

#include "matchkit/kdtree.hpp"
#include "matchkit/parallel.hpp"

namespace matchkit {
namespace {

constexpr Index kBruteForceLimit = 10'000;

// Sums per-chunk count vectors in chunk order.
std::vector<Index> merge(std::vector<std::vector<Index>>& partial, Index size) {
  std::vector<Index> total(static_cast<std::size_t>(size), 0);
  for (const auto& p : partial) {
    for (std::size_t i = 0; i < p.size(); ++i) total[i] += p[i];
  }
  return total;
}

// M-NN set of `query` among `x` by full sort; the oracle path shares nothing
// with the tree except the distance function.
std::vector<std::pair<double, Index>> brute_force_sorted(const PointSet& x, std::span<const double> query) {
  std::vector<std::pair<double, Index>> all(static_cast<std::size_t>(x.size()));
  for (Index i = 0; i < x.size(); ++i) all[static_cast<std::size_t>(i)] = {squared_distance(x.row(i), query), i};
  std::sort(all.begin(), all.end());
  return all;
}

void guard_brute_force(const PointSet& x, const PointSet& z) {
  if (x.size() > kBruteForceLimit || z.size() > kBruteForceLimit) {
    throw Error(Errc::InputTooLarge, "brute-force matching is limited to 10^4 points per sample");
  }
}

// Query order that keeps consecutive queries close in space (tree order of z).
std::vector<Index> spatial_order(const PointSet& z) {
  const NnIndex tree(z);
  std::vector<Index> order(static_cast<std::size_t>(z.size()));
  for (Index pos = 0; pos < z.size(); ++pos) order[static_cast<std::size_t>(pos)] = tree.id_at(pos);
  return order;
}

}  // namespace

Index MatchCounts::total() const { return std::accumulate(counts.begin(), counts.end(), Index{0}); }

MatchCounts match_counts_sample(const PointSet& x, const PointSet& z, Index m) {
  validate_two_sample(x, z, m);
  const NnIndex index(x);
  const auto order = spatial_order(z);
  const std::size_t chunks = thread_count();
  std::vector<std::vector<Index>> partial(chunks);

  parallel_chunks(order.size(), chunks, [&](std::size_t b, std::size_t e, std::size_t c) {
    auto& local = partial[c];
    local.assign(static_cast<std::size_t>(x.size()), 0);
    NeighborList<double> nbrs;
    for (std::size_t j = b; j < e; ++j) {
      index.knn_into(z.row(order[j]), m, nbrs);
      for (const auto& nb : nbrs) ++local[static_cast<std::size_t>(nb.id)];
    }
  });
  return MatchCounts{merge(partial, x.size()), x.size(), z.size(), m};
}

ExtendedMatchCounts match_counts_extended(const PointSet& x, const PointSet& z, Index m, const PointSet& new_points) {
  validate_two_sample(x, z, m);
  if (new_points.dim() != x.dim()) {
    throw Error(Errc::DimensionMismatch, "new points must have the dimension of the samples");
  }
  const Index n0 = x.size();
  const Index n_new = new_points.size();
  const PointSet pooled = concatenate(x, new_points);
  const NnIndex index(pooled);
  const std::size_t chunks = thread_count();
  std::vector<std::vector<Index>> partial(chunks);

  parallel_chunks(static_cast<std::size_t>(z.size()), chunks, [&](std::size_t b, std::size_t e, std::size_t c) {
    auto& local = partial[c];
    local.assign(static_cast<std::size_t>(n0 + n_new), 0);
    for (std::size_t j = b; j < e; ++j) {
      auto stream = index.stream(z.row(static_cast<Index>(j)));
      Index found = 0;
      double radius = 0.0;
      while (found < m) {
        const auto nb = stream.next();  // cannot run dry: the pool holds n0 >= m sample points
        ++local[static_cast<std::size_t>(nb->id)];
        if (nb->id < n0) {
          ++found;
          radius = nb->squared_distance;
        }
      }
      // New points tied with the M-th sample point still satisfy the <= in K_M.
      while (true) {
        const auto d2 = stream.peek_squared_distance();
        if (!d2 || *d2 > radius) break;
        const auto nb = stream.next();
        if (nb->id >= n0) ++local[static_cast<std::size_t>(nb->id)];
      }
    }
  });

  auto all = merge(partial, n0 + n_new);
  ExtendedMatchCounts out;
  out.sample = MatchCounts{std::vector<Index>(all.begin(), all.begin() + n0), n0, z.size(), m};
  out.new_points = MatchCounts{std::vector<Index>(all.begin() + n0, all.end()), n0, z.size(), m};
  return out;
}

MatchCounts brute_force_match_counts(const PointSet& x, const PointSet& z, Index m) {
  validate_two_sample(x, z, m);
  guard_brute_force(x, z);
  std::vector<Index> counts(static_cast<std::size_t>(x.size()), 0);
  for (Index j = 0; j < z.size(); ++j) {
    const auto sorted = brute_force_sorted(x, z.row(j));
    for (Index r = 0; r < m; ++r) ++counts[static_cast<std::size_t>(sorted[static_cast<std::size_t>(r)].second)];
  }
  return MatchCounts{std::move(counts), x.size(), z.size(), m};
}

MatchCounts brute_force_point_counts(const PointSet& x, const PointSet& z, Index m, const PointSet& points) {
  validate_two_sample(x, z, m);
  guard_brute_force(x, z);
  if (points.dim() != x.dim()) throw Error(Errc::DimensionMismatch, "evaluation points have the wrong dimension");
  std::vector<Index> counts(static_cast<std::size_t>(points.size()), 0);
  for (Index j = 0; j < z.size(); ++j) {
    const double radius = brute_force_sorted(x, z.row(j))[static_cast<std::size_t>(m - 1)].first;
    for (Index p = 0; p < points.size(); ++p) {
      if (squared_distance(points.row(p), z.row(j)) <= radius) ++counts[static_cast<std::size_t>(p)];
    }
  }
  return MatchCounts{std::move(counts), x.size(), z.size(), m};
}

GroupMatches match_counts_by_group(const CausalDataset& ds, Index m) {
  validate_causal(ds, m);
  GroupMatches out;
  out.m = m;
  out.unit_counts.assign(static_cast<std::size_t>(ds.size()), 0);
  out.matched.assign(static_cast<std::size_t>(ds.size() * m), -1);

  // omega is the group being matched into; queries come from group 1 - omega.
  for (int omega : {0, 1}) {
    const auto& targets = ds.group_ids(omega);
    const auto& queries = ds.group_ids(1 - omega);
    const NnIndex index(select_rows(ds.covariates(), std::span<const Index>(targets)));
    const std::size_t chunks = thread_count();
    std::vector<std::vector<Index>> partial(chunks);

    parallel_chunks(queries.size(), chunks, [&](std::size_t b, std::size_t e, std::size_t c) {
      auto& local = partial[c];
      local.assign(targets.size(), 0);
      for (std::size_t q = b; q < e; ++q) {
        const Index unit = queries[q];
        Index* row = out.matched.data() + unit * m;
        for (const auto& nb : index.knn(ds.covariates().row(unit), m)) {
          ++local[static_cast<std::size_t>(nb.id)];
          *row++ = targets[static_cast<std::size_t>(nb.id)];
        }
      }
    });

    MatchCounts counts{merge(partial, static_cast<Index>(targets.size())), static_cast<Index>(targets.size()),
                       static_cast<Index>(queries.size()), m};
    for (std::size_t t = 0; t < targets.size(); ++t) out.unit_counts[static_cast<std::size_t>(targets[t])] = counts.counts[t];
    (omega == 0 ? out.k0 : out.k1) = std::move(counts);
  }
  return out;
}

}  // namespace matchkit
