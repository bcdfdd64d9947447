#pragma once

#include "matchkit/core.hpp"
#include "matchkit/matching.hpp"

namespace matchkit {

enum class EvalKind { SamplePoints, NewPoints };

/// Estimates of r = f1 / f0 at a set of evaluation points.
struct RatioEstimate {
  Eigen::VectorXd values;
  Index m = 0;
  Index n0 = 0;
  Index n1 = 0;
  EvalKind eval_kind = EvalKind::SamplePoints;

  /// Compensated mean of `values`.
  double mean() const;
};

/// (N0 / N1) * K_M / M for each count.
RatioEstimate ratio_from_counts(const MatchCounts& counts, EvalKind kind);

RatioEstimate density_ratio_at_sample(const PointSet& x, const PointSet& z, Index m);

struct PointRatioEstimates {
  RatioEstimate at_points;
  RatioEstimate at_sample;
};

/// Matching ratio at `points` and at the sample, sharing one index over both.
PointRatioEstimates density_ratio_at_points(const PointSet& x, const PointSet& z, Index m, const PointSet& points);

/// round(alpha * max(n0^{2/(2+d)}, n0 * n1^{-d/(2+d)})), clamped to [1, n0].
Index select_m_ratio(Index n0, Index n1, Index d, double alpha);

/// Volume of the unit Euclidean ball in R^d.
double unit_ball_volume(Index d);

/// Baseline: ratio of two separate M-NN density estimates,
/// f(p) = m / (N * V_d * R_m(p)^d). 0/0 is reported as 0.
RatioEstimate two_step_ratio(const PointSet& x, const PointSet& z, Index m, const PointSet& points);

/// Baseline: (N0 / N1) * M_p / (N_p + 1) where N_p and M_p count sample-x and
/// sample-z points among the pooled M nearest neighbors of p.
RatioEstimate noshad_ratio(const PointSet& x, const PointSet& z, Index m, const PointSet& points);

}  // namespace matchkit
