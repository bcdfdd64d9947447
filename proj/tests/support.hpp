#pragma once

// Independent oracles and random instance generators shared by the unit and
// acceptance tests. Nothing here calls the library's own matching code.

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "matchkit/core.hpp"
#include "matchkit/random.hpp"

namespace matchkit::testing {

inline PointSet points_1d(std::initializer_list<double> values) { return PointSet::from_values(values); }

// Uniform points; with `grid` set, coordinates are snapped to a coarse lattice
// so that distance ties are common.
inline PointSet random_points(Rng& rng, Index n, Index d, bool grid) {
  RowMatrix<double> m(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < d; ++k) m(i, k) = grid ? static_cast<double>(rng.below(6)) : rng.uniform();
  }
  return PointSet(std::move(m));
}

struct TwoSampleInstance {
  PointSet x;
  PointSet z;
  PointSet new_points;
  Index m;
};

inline TwoSampleInstance random_two_sample(Rng& rng, Index max_n = 200, Index max_d = 5, Index max_m = 20) {
  const Index d = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(max_d)));
  const Index n0 = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(max_n)));
  const Index n1 = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(max_n)));
  const Index m = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(std::min(max_m, n0))));
  const bool grid = rng.bernoulli(0.3);
  const Index n_new = 1 + static_cast<Index>(rng.below(20));
  return {random_points(rng, n0, d, grid), random_points(rng, n1, d, grid), random_points(rng, n_new, d, grid), m};
}

inline CausalDataset random_causal(Rng& rng, Index max_n = 120, Index max_d = 3) {
  const Index d = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(max_d)));
  const Index n = 8 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(max_n)));
  RowMatrix<double> x(n, d);
  std::vector<int> t(static_cast<std::size_t>(n));
  Eigen::VectorXd y(n);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < d; ++k) x(i, k) = rng.uniform();
    t[static_cast<std::size_t>(i)] = i < 4 ? static_cast<int>(i % 2) : static_cast<int>(rng.below(2));
    y(i) = x(i, 0) + t[static_cast<std::size_t>(i)] * 2.0 + rng.normal();
  }
  return CausalDataset(PointSet(std::move(x)), t, std::move(y));
}

inline double sq_dist(const PointSet& a, Index i, const PointSet& b, Index j) {
  double s = 0;
  for (Index k = 0; k < a.dim(); ++k) {
    const double diff = a.matrix()(i, k) - b.matrix()(j, k);
    s += diff * diff;
  }
  return s;
}

// All (squared distance, id) pairs from row q of `from` to every row of `to`, sorted.
inline std::vector<std::pair<double, Index>> ranked(const PointSet& from, Index q, const PointSet& to) {
  std::vector<std::pair<double, Index>> all;
  for (Index j = 0; j < to.size(); ++j) all.emplace_back(sq_dist(from, q, to, j), j);
  std::sort(all.begin(), all.end());
  return all;
}

// K_M(X_i): how many z points have X_i among their m nearest x points.
inline std::vector<Index> oracle_counts(const PointSet& x, const PointSet& z, Index m) {
  std::vector<Index> k(static_cast<std::size_t>(x.size()), 0);
  for (Index j = 0; j < z.size(); ++j) {
    const auto r = ranked(z, j, x);
    for (Index s = 0; s < m; ++s) ++k[static_cast<std::size_t>(r[static_cast<std::size_t>(s)].second)];
  }
  return k;
}

// K_M(p) at new points: z points whose m-th NN radius in x reaches p.
inline std::vector<Index> oracle_point_counts(const PointSet& x, const PointSet& z, Index m, const PointSet& p) {
  std::vector<Index> k(static_cast<std::size_t>(p.size()), 0);
  for (Index j = 0; j < z.size(); ++j) {
    const double radius = ranked(z, j, x)[static_cast<std::size_t>(m - 1)].first;
    for (Index i = 0; i < p.size(); ++i) {
      if (sq_dist(p, i, z, j) <= radius) ++k[static_cast<std::size_t>(i)];
    }
  }
  return k;
}

// Matching ATE computed from explicit per-unit matched sets.
struct OracleAte {
  double tau_weighting;
  double tau_bc_weighting;
  double tau_bc_imputation;
  std::vector<double> k;  // K_M of each unit within its opposite group's matching
};

template <typename F0, typename F1>
OracleAte oracle_ate(const CausalDataset& ds, Index m, F0 mu0, F1 mu1) {
  const Index n = ds.size();
  const auto& x = ds.covariates();
  const auto& y = ds.outcomes();
  std::vector<double> k(static_cast<std::size_t>(n), 0.0);
  std::vector<std::vector<Index>> matched(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    std::vector<std::pair<double, Index>> opp;
    for (Index j = 0; j < n; ++j) {
      if (ds.treated(j) != ds.treated(i)) opp.emplace_back(sq_dist(x, i, x, j), j);
    }
    std::sort(opp.begin(), opp.end());
    for (Index s = 0; s < m; ++s) {
      const Index j = opp[static_cast<std::size_t>(s)].second;
      matched[static_cast<std::size_t>(i)].push_back(j);
      k[static_cast<std::size_t>(j)] += 1.0;
    }
  }
  double tw = 0, bcw = 0, imp = 0;
  const double md = static_cast<double>(m);
  for (Index i = 0; i < n; ++i) {
    const auto row = x.row(i);
    const double sign = ds.treated(i) ? 1.0 : -1.0;
    const double w = 1.0 + k[static_cast<std::size_t>(i)] / md;
    const double resid = y(i) - (ds.treated(i) ? mu1(row) : mu0(row));
    tw += sign * w * y(i);
    bcw += mu1(row) - mu0(row) + sign * w * resid;
    // imputation: missing potential outcome = mean over matches of (Y_j + mu(X_i) - mu(X_j))
    double imputed = 0;
    for (Index j : matched[static_cast<std::size_t>(i)]) {
      const auto rj = x.row(j);
      imputed += ds.treated(i) ? y(j) + mu0(row) - mu0(rj) : y(j) + mu1(row) - mu1(rj);
    }
    imputed /= md;
    imp += ds.treated(i) ? y(i) - imputed : imputed - y(i);
  }
  const double nd = static_cast<double>(n);
  return {tw / nd, bcw / nd, imp / nd, k};
}

}  // namespace matchkit::testing
