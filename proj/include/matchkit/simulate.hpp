#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "matchkit/ate.hpp"
#include "matchkit/core.hpp"

namespace matchkit {

enum class TwoSampleFamily {
  /// nu0 = nu1 = U[0,1]^d.
  UniformCube,
  /// nu0 = U[0,1]^d, nu1 = U[0,width]^d.
  UniformSubinterval,
  /// nu0 = U[0,1]^d, nu1 = product of N(mean, sd^2) truncated to [0,1].
  TruncatedGaussian,
};

std::string_view to_string(TwoSampleFamily family);

/// Two-sample design with closed-form density ratio and KL divergence.
struct TwoSampleSpec {
  TwoSampleFamily family = TwoSampleFamily::UniformCube;
  Index d = 1;
  double width = 0.5;
  double mean = 0.5;
  double sd = 0.25;

  static TwoSampleSpec uniform_cube(Index d);
  static TwoSampleSpec uniform_subinterval(Index d, double width);
  static TwoSampleSpec truncated_gaussian(Index d, double mean, double sd);

  void validate() const;
};

/// (x ~ nu0 with n0 rows, z ~ nu1 with n1 rows); deterministic in `seed`.
std::pair<PointSet, PointSet> generate_two_sample(const TwoSampleSpec& spec, Index n0, Index n1, std::uint64_t seed);

/// f1(p) / f0(p) for p in the support of nu0 (the unit cube).
double true_ratio(const TwoSampleSpec& spec, std::span<const double> p);

/// KL(nu1 || nu0) in nats.
double true_kl(const TwoSampleSpec& spec);

/// Causal design on X ~ U[0,1]^d with e(x) = intercept + slope * x_1 and
/// polynomial outcome means plus Gaussian noise.
struct CausalSpec {
  Index d = 2;
  double propensity_intercept = 0.3;
  double propensity_slope = 0.4;
  OutcomeModel mu0 = OutcomeModel::zero(2);
  OutcomeModel mu1 = OutcomeModel::zero(2);
  double noise_sd = 1.0;

  /// mu0 = x1 + x2, mu1 = 1 + 2 x1 + x2, e = 0.3 + 0.4 x1, sigma = 1; tau = 1.5.
  static CausalSpec linear_default();

  double propensity(std::span<const double> x) const;
  /// E[mu1(X) - mu0(X)], exact for polynomials under the uniform law.
  double true_tau() const;
  void validate() const;
};

/// Mean of a polynomial over U[0,1]^d.
double cube_mean(const OutcomeModel& poly);

CausalDataset generate_causal(const CausalSpec& spec, Index n, std::uint64_t seed);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::optional<double> standard_error;
};

/// OLS fit of log(y) on log(x). Needs at least two distinct x.
std::optional<SlopeFit> fit_loglog_slope(std::span<const double> x, std::span<const double> y);

struct RiskCell {
  Index n = 0;
  Index m = 0;
  Index reps = 0;
  double mse = 0.0;
  double l1 = 0.0;
  double mean_estimate = 0.0;
};

struct RiskReport {
  std::string metric;  // "pointwise-mse" or "l1"
  std::vector<RiskCell> cells;
  std::optional<SlopeFit> fit;
};

/// Pointwise MSE of the matching ratio at `eval_point` with N0 = N1 = n and M
/// from select_m_ratio; slope fitted on log MSE.
RiskReport mc_pointwise_risk(const TwoSampleSpec& spec, std::span<const double> eval_point,
                             std::span<const Index> n_grid, Index reps, double alpha, std::uint64_t seed);

/// L1 risk averaged over the x sample points (f0-weighted); slope on log L1.
RiskReport mc_l1_risk(const TwoSampleSpec& spec, std::span<const Index> n_grid, Index reps, double alpha,
                      std::uint64_t seed);

struct KlCell {
  Index n = 0;
  Index m = 0;
  Index reps = 0;
  double mean = 0.0;
  double sd = 0.0;
  double mean_abs = 0.0;
  double truth = 0.0;
};

struct KlReport {
  std::vector<KlCell> cells;
};

/// Monte Carlo distribution of the KL plug-in with M from select_m_kl.
KlReport mc_kl(const TwoSampleSpec& spec, std::span<const Index> n_grid, Index reps, double alpha,
               std::uint64_t seed);

struct CoverageOptions {
  double alpha = 1.0;
  int degree = 1;
  int folds = 2;
  double level = 0.95;
};

struct CoverageReport {
  AteMethod method = AteMethod::BiasCorrected;
  Index n = 0;
  Index reps = 0;
  Index m = 0;
  double true_tau = 0.0;
  std::optional<double> coverage;
  double mean_bias = 0.0;
  double empirical_sd = 0.0;
  std::optional<double> mean_estimated_sd;
  std::optional<double> sd_ratio;
};

CoverageReport mc_ate_coverage(const CausalSpec& spec, Index n, Index reps, AteMethod method, std::uint64_t seed,
                               const CoverageOptions& options = {});

struct TimingRow {
  Index n = 0;
  Index m = 0;
  double seconds = 0.0;
  std::optional<double> ratio_to_previous;
};

/// Fixed M, or M from select_m_ratio with `alpha`.
struct MRule {
  std::optional<Index> fixed;
  double alpha = 1.0;
};

/// Wall time of the sample-point match counting (index build plus queries)
/// with N0 = N1 = n on the uniform cube; best of `repeats` runs.
std::vector<TimingRow> bench_scaling(std::span<const Index> n_grid, Index d, const MRule& rule, std::uint64_t seed,
                                     int repeats = 3);

}  // namespace matchkit
