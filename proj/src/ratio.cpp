#include "matchkit/ratio.hpp"

#include <cmath>
#include <numbers>

#include "matchkit/kdtree.hpp"
#include "matchkit/parallel.hpp"

namespace matchkit {
namespace {

void check_points(const PointSet& x, const PointSet& points) {
  if (points.dim() != x.dim()) throw Error(Errc::DimensionMismatch, "evaluation points have the wrong dimension");
}

}  // namespace

double RatioEstimate::mean() const {
  if (values.size() == 0) return 0.0;
  double sum = 0.0, comp = 0.0;
  for (Index i = 0; i < values.size(); ++i) {
    const double y = values(i) - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum / static_cast<double>(values.size());
}

RatioEstimate ratio_from_counts(const MatchCounts& counts, EvalKind kind) {
  RatioEstimate out;
  out.m = counts.m;
  out.n0 = counts.n0;
  out.n1 = counts.n1;
  out.eval_kind = kind;
  out.values.resize(static_cast<Index>(counts.counts.size()));
  const double denom = static_cast<double>(counts.n1) * static_cast<double>(counts.m);
  for (std::size_t i = 0; i < counts.counts.size(); ++i) {
    out.values(static_cast<Index>(i)) = static_cast<double>(counts.n0) * static_cast<double>(counts.counts[i]) / denom;
  }
  return out;
}

RatioEstimate density_ratio_at_sample(const PointSet& x, const PointSet& z, Index m) {
  return ratio_from_counts(match_counts_sample(x, z, m), EvalKind::SamplePoints);
}

PointRatioEstimates density_ratio_at_points(const PointSet& x, const PointSet& z, Index m, const PointSet& points) {
  const auto counts = match_counts_extended(x, z, m, points);
  return {ratio_from_counts(counts.new_points, EvalKind::NewPoints),
          ratio_from_counts(counts.sample, EvalKind::SamplePoints)};
}

Index select_m_ratio(Index n0, Index n1, Index d, double alpha) {
  if (n0 < 1 || n1 < 1 || d < 1) throw Error(Errc::InvalidArgument, "sample sizes and dimension must be positive");
  if (!(alpha > 0.0)) throw Error(Errc::InvalidArgument, "alpha must be positive");
  const double dd = static_cast<double>(d);
  const double balanced = std::pow(static_cast<double>(n0), 2.0 / (2.0 + dd));
  const double imbalanced = static_cast<double>(n0) * std::pow(static_cast<double>(n1), -dd / (2.0 + dd));
  return round_clamp(alpha * std::max(balanced, imbalanced), 1, n0);
}

double unit_ball_volume(Index d) {
  const double half = static_cast<double>(d) / 2.0;
  return std::pow(std::numbers::pi, half) / std::tgamma(half + 1.0);
}

RatioEstimate two_step_ratio(const PointSet& x, const PointSet& z, Index m, const PointSet& points) {
  validate_two_sample(x, z, m);
  check_points(x, points);
  if (m > z.size()) throw Error(Errc::InvalidM, "two-step estimator needs m <= min(N0, N1)");
  const NnIndex index0(x);
  const NnIndex index1(z);
  const double d = static_cast<double>(x.dim());
  const double volume = unit_ball_volume(x.dim());
  auto density = [&](double radius2, Index n) {
    return static_cast<double>(m) / (static_cast<double>(n) * volume * std::pow(radius2, d / 2.0));
  };

  RatioEstimate out{Eigen::VectorXd(points.size()), m, x.size(), z.size(), EvalKind::NewPoints};
  parallel_for(static_cast<std::size_t>(points.size()), [&](std::size_t pi) {
    const auto p = points.row(static_cast<Index>(pi));
    const double r0 = index0.knn(p, m).back().squared_distance;
    const double r1 = index1.knn(p, m).back().squared_distance;
    double value;
    if (r0 == 0.0 && r1 == 0.0) {
      value = 0.0;
    } else {
      value = density(r1, z.size()) / density(r0, x.size());
    }
    out.values(static_cast<Index>(pi)) = value;
  });
  return out;
}

RatioEstimate noshad_ratio(const PointSet& x, const PointSet& z, Index m, const PointSet& points) {
  if (x.dim() != z.dim()) throw Error(Errc::DimensionMismatch, "x and z differ in dimension");
  if (x.empty() || z.empty()) throw Error(Errc::EmptySample, "both samples must be nonempty");
  check_points(x, points);
  if (m < 1 || m > x.size() + z.size()) throw Error(Errc::InvalidM, "noshad estimator needs 1 <= m <= N0 + N1");
  const Index n0 = x.size();
  const NnIndex pooled(concatenate(x, z));
  const double scale = static_cast<double>(n0) / static_cast<double>(z.size());

  RatioEstimate out{Eigen::VectorXd(points.size()), m, n0, z.size(), EvalKind::NewPoints};
  parallel_for(static_cast<std::size_t>(points.size()), [&](std::size_t pi) {
    Index from_x = 0, from_z = 0;
    for (const auto& nb : pooled.knn(points.row(static_cast<Index>(pi)), m)) (nb.id < n0 ? from_x : from_z)++;
    out.values(static_cast<Index>(pi)) = scale * static_cast<double>(from_z) / static_cast<double>(from_x + 1);
  });
  return out;
}

}  // namespace matchkit
