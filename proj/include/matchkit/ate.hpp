#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "matchkit/core.hpp"
#include "matchkit/matching.hpp"

namespace matchkit {

/// Degree value that selects the identically-zero outcome model.
inline constexpr int kZeroModelDegree = -1;

/// Total degree floor(d/2) + 1, capped at 3.
int default_outcome_degree(Index d);

/// Exponent vectors of all monomials in `d` variables of total degree <=
/// `degree`, ordered by total degree, then lexicographically descending.
std::vector<std::vector<int>> monomial_exponents(Index d, int degree);

/// Polynomial regression function mu: R^d -> R.
class OutcomeModel {
 public:
  static OutcomeModel zero(Index dim);

  OutcomeModel(Index dim, int degree, std::vector<std::vector<int>> exponents, Eigen::VectorXd coefficients,
               bool rank_deficient = false);

  double operator()(std::span<const double> x) const;
  Eigen::VectorXd evaluate(const PointSet& points) const;

  Index dim() const noexcept { return dim_; }
  int degree() const noexcept { return degree_; }
  bool is_zero() const noexcept { return degree_ == kZeroModelDegree; }
  /// True when the least-squares system was singular and the minimum-norm
  /// solution was used.
  bool rank_deficient() const noexcept { return rank_deficient_; }
  const Eigen::VectorXd& coefficients() const noexcept { return coefficients_; }
  const std::vector<std::vector<int>>& exponents() const noexcept { return exponents_; }

 private:
  Index dim_;
  int degree_;
  std::vector<std::vector<int>> exponents_;
  Eigen::VectorXd coefficients_;
  bool rank_deficient_;
};

/// Least-squares polynomial of total degree `degree` (kZeroModelDegree for
/// the zero model). Needs more observations than monomials.
OutcomeModel fit_polynomial(const PointSet& x, const Eigen::VectorXd& y, int degree);

/// Fits mu_omega on the units with D = omega.
OutcomeModel fit_outcome_model(const CausalDataset& ds, int omega, int degree);

enum class AteMethod { Matching, BiasCorrected, CrossFit, DoublyRobust };

std::string_view to_string(AteMethod method);

/// Max and mean of the implied inverse-propensity weights within one group.
struct GroupWeightSummary {
  double max_weight = 0.0;
  double mean_weight = 0.0;
};

struct AteEstimate {
  AteMethod method = AteMethod::Matching;
  double tau_hat = 0.0;
  std::optional<double> sigma2_hat;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  double level = 0.95;
  Index n = 0;
  Index m = 0;
  std::optional<int> k_folds;
  /// Weights 1 + K/M for matching-based methods, 1/e or 1/(1-e) for doubly robust.
  GroupWeightSummary treated;
  GroupWeightSummary control;
  /// The same estimate computed through the imputation form, where one exists.
  std::optional<double> tau_imputation;
  std::vector<double> fold_estimates;
  bool rank_deficient = false;
};

/// Standard normal quantile function.
double normal_quantile(double p);

/// Matching estimator with M matches per unit, with replacement.
AteEstimate ate_matching(const CausalDataset& ds, Index m);

/// Bias-corrected matching estimator with its variance estimate and CI.
AteEstimate ate_bias_corrected(const CausalDataset& ds, Index m, const OutcomeModel& mu0, const OutcomeModel& mu1,
                               double level = 0.95);

/// Doubly robust estimator with a user-supplied propensity per unit.
AteEstimate ate_doubly_robust(const CausalDataset& ds, std::span<const double> e_hat, const OutcomeModel& mu0,
                              const OutcomeModel& mu1, double level = 0.95);

/// One fold of the cross-fitted estimator: match counts and outcome models
/// come from the units outside `in_fold`, the average runs over `in_fold`.
double cross_fit_fold_estimate(const CausalDataset& ds, std::span<const Index> in_fold, Index m, int degree);

/// Random K-fold partition of [0, n); the first n mod K folds get one extra unit.
std::vector<std::vector<Index>> fold_partition(Index n, int k, std::uint64_t seed);

/// K-fold cross-fitted bias-corrected estimator, the average of the fold
/// estimates. The variance uses full-sample counts and models.
AteEstimate ate_cross_fit(const CausalDataset& ds, Index m, int k, int degree, std::uint64_t seed,
                          double level = 0.95);

struct VarianceEstimate {
  double sigma2 = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Mean squared deviation of the per-unit influence terms from `tau`, and the
/// normal CI tau +- z * sqrt(sigma2 / n).
VarianceEstimate variance_estimate(const CausalDataset& ds, Index m, const OutcomeModel& mu0, const OutcomeModel& mu1,
                                   double tau, double level = 0.95);

/// round(alpha * n^{2/(2+d)}), at least 1.
Index select_m_ate(Index n, Index d, double alpha);

/// select_m_ate clamped to [1, min(n0, n1)].
Index select_m_ate(const CausalDataset& ds, double alpha);

}  // namespace matchkit
