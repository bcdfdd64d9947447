#include "matchkit/ate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "matchkit/random.hpp"

namespace matchkit {
namespace {

double compensated_sum(const Eigen::VectorXd& v) {
  double sum = 0.0, comp = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    const double y = v(i) - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

void check_model(const OutcomeModel& model, Index dim) {
  if (!model.is_zero() && model.dim() != dim) {
    throw Error(Errc::DimensionMismatch, "outcome model dimension does not match the covariates");
  }
}

// Weight-sum identities: sum over each group of (M + K) equals n * M.
void check_weight_sums(const CausalDataset& ds, const GroupMatches& gm) {
  for (int omega : {0, 1}) {
    Index total = 0;
    for (Index i : ds.group_ids(omega)) total += gm.m + gm.unit_counts[static_cast<std::size_t>(i)];
    if (total != ds.size() * gm.m) throw Error(Errc::InvalidArgument, "internal error: match counts do not sum to n * M");
  }
}

GroupWeightSummary summarize(const CausalDataset& ds, int omega, const Eigen::VectorXd& weights) {
  GroupWeightSummary s;
  const auto& ids = ds.group_ids(omega);
  if (ids.empty()) return s;
  double sum = 0.0;
  for (Index i : ids) {
    s.max_weight = std::max(s.max_weight, weights(i));
    sum += weights(i);
  }
  s.mean_weight = sum / static_cast<double>(ids.size());
  return s;
}

// Per-unit weights 1 + K^{D_i}_M(i) / M.
Eigen::VectorXd matching_weights(const GroupMatches& gm) {
  Eigen::VectorXd w(static_cast<Index>(gm.unit_counts.size()));
  const double m = static_cast<double>(gm.m);
  for (std::size_t i = 0; i < gm.unit_counts.size(); ++i) {
    w(static_cast<Index>(i)) = (m + static_cast<double>(gm.unit_counts[i])) / m;
  }
  return w;
}

// Influence terms mu1 - mu0 + D w R - (1 - D) w R for arbitrary per-unit weights.
Eigen::VectorXd influence_terms(const CausalDataset& ds, const Eigen::VectorXd& weights, const Eigen::VectorXd& mu0,
                                const Eigen::VectorXd& mu1) {
  Eigen::VectorXd psi(ds.size());
  for (Index i = 0; i < ds.size(); ++i) {
    const bool t = ds.treated(i);
    const double residual = ds.outcomes()(i) - (t ? mu1(i) : mu0(i));
    const double adj = weights(i) * residual;
    psi(i) = mu1(i) - mu0(i) + (t ? adj : -adj);
  }
  return psi;
}

void attach_variance(AteEstimate& est, const Eigen::VectorXd& psi, double level) {
  const double n = static_cast<double>(psi.size());
  const Eigen::VectorXd centered = (psi.array() - est.tau_hat).square().matrix();
  const double sigma2 = compensated_sum(centered) / n;
  const double half = normal_quantile(0.5 + level / 2.0) * std::sqrt(sigma2 / n);
  est.sigma2_hat = sigma2;
  est.ci_low = est.tau_hat - half;
  est.ci_high = est.tau_hat + half;
  est.level = level;
}

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(Errc::InvalidArgument, "confidence level must lie in (0, 1)");
}

// Monomial value prod_k x_k^{e_k}.
double monomial(std::span<const double> x, const std::vector<int>& exps) {
  double v = 1.0;
  for (std::size_t k = 0; k < exps.size(); ++k) {
    for (int p = 0; p < exps[k]; ++p) v *= x[k];
  }
  return v;
}

void add_exponents(Index d, int remaining, std::size_t pos, std::vector<int>& cur,
                   std::vector<std::vector<int>>& out) {
  if (pos + 1 == static_cast<std::size_t>(d)) {
    cur[pos] = remaining;
    out.push_back(cur);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    cur[pos] = e;
    add_exponents(d, remaining - e, pos + 1, cur, out);
  }
}

}  // namespace

int default_outcome_degree(Index d) { return static_cast<int>(std::min<Index>(d / 2 + 1, 3)); }

std::vector<std::vector<int>> monomial_exponents(Index d, int degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(d), 0);
  for (int total = 0; total <= degree; ++total) add_exponents(d, total, 0, cur, out);
  return out;
}

OutcomeModel OutcomeModel::zero(Index dim) { return OutcomeModel(dim, kZeroModelDegree, {}, Eigen::VectorXd()); }

OutcomeModel::OutcomeModel(Index dim, int degree, std::vector<std::vector<int>> exponents,
                           Eigen::VectorXd coefficients, bool rank_deficient)
    : dim_(dim),
      degree_(degree),
      exponents_(std::move(exponents)),
      coefficients_(std::move(coefficients)),
      rank_deficient_(rank_deficient) {
  if (static_cast<Index>(exponents_.size()) != coefficients_.size()) {
    throw Error(Errc::InvalidArgument, "one coefficient per monomial is required");
  }
}

double OutcomeModel::operator()(std::span<const double> x) const {
  double v = 0.0;
  for (std::size_t t = 0; t < exponents_.size(); ++t) v += coefficients_(static_cast<Index>(t)) * monomial(x, exponents_[t]);
  return v;
}

Eigen::VectorXd OutcomeModel::evaluate(const PointSet& points) const {
  Eigen::VectorXd out(points.size());
  for (Index i = 0; i < points.size(); ++i) out(i) = (*this)(points.row(i));
  return out;
}

OutcomeModel fit_polynomial(const PointSet& x, const Eigen::VectorXd& y, int degree) {
  if (degree == kZeroModelDegree) return OutcomeModel::zero(x.dim());
  if (degree < 0) throw Error(Errc::InvalidArgument, "degree must be nonnegative or the zero-model sentinel");
  if (x.size() != y.size()) throw Error(Errc::DimensionMismatch, "covariates and outcomes differ in length");
  auto exps = monomial_exponents(x.dim(), degree);
  const Index terms = static_cast<Index>(exps.size());
  if (x.size() <= terms) {
    throw Error(Errc::GroupTooSmall, "a degree-" + std::to_string(degree) + " fit needs more than " +
                                         std::to_string(terms) + " observations, have " + std::to_string(x.size()));
  }
  Eigen::MatrixXd design(x.size(), terms);
  for (Index i = 0; i < x.size(); ++i) {
    for (Index t = 0; t < terms; ++t) design(i, t) = monomial(x.row(i), exps[static_cast<std::size_t>(t)]);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() == terms) return OutcomeModel(x.dim(), degree, std::move(exps), qr.solve(y));
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
  return OutcomeModel(x.dim(), degree, std::move(exps), cod.solve(y), true);
}

OutcomeModel fit_outcome_model(const CausalDataset& ds, int omega, int degree) {
  if (omega != 0 && omega != 1) throw Error(Errc::InvalidArgument, "omega must be 0 or 1");
  const auto& ids = ds.group_ids(omega);
  Eigen::VectorXd y(static_cast<Index>(ids.size()));
  for (std::size_t r = 0; r < ids.size(); ++r) y(static_cast<Index>(r)) = ds.outcomes()(ids[r]);
  return fit_polynomial(select_rows(ds.covariates(), std::span<const Index>(ids)), y, degree);
}

std::string_view to_string(AteMethod method) {
  switch (method) {
    case AteMethod::Matching: return "matching";
    case AteMethod::BiasCorrected: return "bias-corrected";
    case AteMethod::CrossFit: return "cross-fit";
    case AteMethod::DoublyRobust: return "doubly-robust";
  }
  return "unknown";
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(Errc::InvalidArgument, "quantile level must lie in (0, 1)");
  // Acklam's rational approximation, then Newton steps on erfc.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double low = 0.02425;
  double x;
  if (p < low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int it = 0; it < 3; ++it) {
    const double cdf = 0.5 * std::erfc(-x / std::numbers::sqrt2);
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    x -= (cdf - p) / pdf;
  }
  return x;
}

AteEstimate ate_matching(const CausalDataset& ds, Index m) {
  const auto gm = match_counts_by_group(ds, m);
  check_weight_sums(ds, gm);
  const auto& y = ds.outcomes();
  const double n = static_cast<double>(ds.size());
  const double md = static_cast<double>(m);

  // Weighting form, scaled by M so the weights (M + K) are exact integers.
  Eigen::VectorXd weighted(ds.size());
  Eigen::VectorXd imputed(ds.size());
  for (Index i = 0; i < ds.size(); ++i) {
    const double w = static_cast<double>(m + gm.unit_counts[static_cast<std::size_t>(i)]);
    weighted(i) = ds.treated(i) ? w * y(i) : -w * y(i);
    double matched = 0.0;
    for (Index j : gm.matches_of(i)) matched += y(j);
    matched /= md;
    imputed(i) = ds.treated(i) ? y(i) - matched : matched - y(i);
  }

  AteEstimate est;
  est.method = AteMethod::Matching;
  est.n = ds.size();
  est.m = m;
  est.tau_hat = compensated_sum(weighted) / (n * md);
  est.tau_imputation = compensated_sum(imputed) / n;
  const auto w = matching_weights(gm);
  est.treated = summarize(ds, 1, w);
  est.control = summarize(ds, 0, w);
  return est;
}

AteEstimate ate_bias_corrected(const CausalDataset& ds, Index m, const OutcomeModel& mu0, const OutcomeModel& mu1,
                               double level) {
  check_level(level);
  check_model(mu0, ds.dim());
  check_model(mu1, ds.dim());
  const auto gm = match_counts_by_group(ds, m);
  check_weight_sums(ds, gm);
  const auto& y = ds.outcomes();
  const Eigen::VectorXd m0 = mu0.evaluate(ds.covariates());
  const Eigen::VectorXd m1 = mu1.evaluate(ds.covariates());
  const auto w = matching_weights(gm);
  const Eigen::VectorXd psi = influence_terms(ds, w, m0, m1);

  // Imputation form: missing potential outcomes filled by matched outcomes
  // shifted by the fitted regression difference.
  const double md = static_cast<double>(m);
  Eigen::VectorXd imputed(ds.size());
  for (Index i = 0; i < ds.size(); ++i) {
    const bool t = ds.treated(i);
    const Eigen::VectorXd& mu = t ? m0 : m1;
    double matched = 0.0;
    for (Index j : gm.matches_of(i)) matched += y(j) + mu(i) - mu(j);
    matched /= md;
    imputed(i) = t ? y(i) - matched : matched - y(i);
  }

  AteEstimate est;
  est.method = AteMethod::BiasCorrected;
  est.n = ds.size();
  est.m = m;
  est.tau_hat = compensated_sum(psi) / static_cast<double>(ds.size());
  est.tau_imputation = compensated_sum(imputed) / static_cast<double>(ds.size());
  est.treated = summarize(ds, 1, w);
  est.control = summarize(ds, 0, w);
  est.rank_deficient = mu0.rank_deficient() || mu1.rank_deficient();
  attach_variance(est, psi, level);
  return est;
}

AteEstimate ate_doubly_robust(const CausalDataset& ds, std::span<const double> e_hat, const OutcomeModel& mu0,
                              const OutcomeModel& mu1, double level) {
  check_level(level);
  check_model(mu0, ds.dim());
  check_model(mu1, ds.dim());
  if (static_cast<Index>(e_hat.size()) != ds.size()) {
    throw Error(Errc::DimensionMismatch, "one propensity value per unit is required");
  }
  if (ds.size() == 0) throw Error(Errc::EmptySample, "dataset is empty");
  if (!ds.outcomes().allFinite()) throw Error(Errc::NonFiniteOutcome, "outcomes must be finite");
  Eigen::VectorXd w(ds.size());
  for (Index i = 0; i < ds.size(); ++i) {
    const double e = e_hat[static_cast<std::size_t>(i)];
    if (!(e > 0.0 && e < 1.0)) {
      throw Error(Errc::PropensityOutOfRange, "propensity at unit " + std::to_string(i) + " is outside (0, 1)");
    }
    w(i) = ds.treated(i) ? 1.0 / e : 1.0 / (1.0 - e);
  }
  const Eigen::VectorXd m0 = mu0.evaluate(ds.covariates());
  const Eigen::VectorXd m1 = mu1.evaluate(ds.covariates());
  const Eigen::VectorXd psi = influence_terms(ds, w, m0, m1);

  AteEstimate est;
  est.method = AteMethod::DoublyRobust;
  est.n = ds.size();
  est.tau_hat = compensated_sum(psi) / static_cast<double>(ds.size());
  est.treated = summarize(ds, 1, w);
  est.control = summarize(ds, 0, w);
  est.rank_deficient = mu0.rank_deficient() || mu1.rank_deficient();
  attach_variance(est, psi, level);
  return est;
}

std::vector<std::vector<Index>> fold_partition(Index n, int k, std::uint64_t seed) {
  if (k < 2) throw Error(Errc::InvalidArgument, "cross-fitting needs at least 2 folds");
  if (n < k) throw Error(Errc::FoldTooSmall, "fewer units than folds");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(seed, 0xF01D);
  rng.shuffle(std::span<Index>(perm));

  std::vector<std::vector<Index>> folds(static_cast<std::size_t>(k));
  const Index base = n / k;
  const Index extra = n % k;
  auto it = perm.begin();
  for (Index f = 0; f < k; ++f) {
    const Index size = base + (f < extra ? 1 : 0);
    folds[static_cast<std::size_t>(f)].assign(it, it + size);
    std::sort(folds[static_cast<std::size_t>(f)].begin(), folds[static_cast<std::size_t>(f)].end());
    it += size;
  }
  return folds;
}

double cross_fit_fold_estimate(const CausalDataset& ds, std::span<const Index> in_fold, Index m, int degree) {
  if (in_fold.empty()) throw Error(Errc::FoldTooSmall, "fold is empty");
  std::vector<char> inside(static_cast<std::size_t>(ds.size()), 0);
  for (Index i : in_fold) inside[static_cast<std::size_t>(i)] = 1;
  std::vector<Index> out_ids;
  for (Index i = 0; i < ds.size(); ++i) {
    if (!inside[static_cast<std::size_t>(i)]) out_ids.push_back(i);
  }
  const CausalDataset out = ds.subset(out_ids);
  if (out.n0() < m || out.n1() < m) {
    throw Error(Errc::FoldTooSmall, "a fold complement has fewer than m = " + std::to_string(m) + " units in a group");
  }

  OutcomeModel mu[2] = {OutcomeModel::zero(ds.dim()), OutcomeModel::zero(ds.dim())};
  try {
    mu[0] = fit_outcome_model(out, 0, degree);
    mu[1] = fit_outcome_model(out, 1, degree);
  } catch (const Error& e) {
    if (e.code() != Errc::GroupTooSmall) throw;
    throw Error(Errc::FoldTooSmall, std::string("fold complement too small for the outcome model: ") + e.what());
  }

  const double md = static_cast<double>(m);
  double total = 0.0, comp = 0.0;
  auto accumulate = [&](double v) {
    const double y = v - comp;
    const double t = total + y;
    comp = (t - total) - y;
    total = t;
  };

  for (int omega : {0, 1}) {
    std::vector<Index> members;
    for (Index i : in_fold) {
      if (static_cast<int>(ds.treated(i)) == omega) members.push_back(i);
    }
    if (members.empty()) continue;
    const PointSet points = select_rows(ds.covariates(), std::span<const Index>(members));
    const auto& same = out.group_ids(omega);
    const auto& other = out.group_ids(1 - omega);
    const auto counts = match_counts_extended(select_rows(out.covariates(), std::span<const Index>(same)),
                                              select_rows(out.covariates(), std::span<const Index>(other)), m, points);
    for (std::size_t r = 0; r < members.size(); ++r) {
      const Index i = members[r];
      const auto x = ds.covariates().row(i);
      const double fitted = mu[omega](x);
      const double weight = (md + static_cast<double>(counts.new_points.counts[r])) / md;
      const double adj = weight * (ds.outcomes()(i) - fitted);
      accumulate(mu[1](x) - mu[0](x) + (omega == 1 ? adj : -adj));
    }
  }
  return total / static_cast<double>(in_fold.size());
}

AteEstimate ate_cross_fit(const CausalDataset& ds, Index m, int k, int degree, std::uint64_t seed, double level) {
  check_level(level);
  validate_causal(ds, m);
  const auto folds = fold_partition(ds.size(), k, seed);

  AteEstimate est;
  est.method = AteMethod::CrossFit;
  est.n = ds.size();
  est.m = m;
  est.k_folds = k;
  for (const auto& fold : folds) est.fold_estimates.push_back(cross_fit_fold_estimate(ds, fold, m, degree));
  est.tau_hat = std::accumulate(est.fold_estimates.begin(), est.fold_estimates.end(), 0.0) / static_cast<double>(k);

  const auto mu0 = fit_outcome_model(ds, 0, degree);
  const auto mu1 = fit_outcome_model(ds, 1, degree);
  const auto gm = match_counts_by_group(ds, m);
  const auto w = matching_weights(gm);
  const Eigen::VectorXd psi =
      influence_terms(ds, w, mu0.evaluate(ds.covariates()), mu1.evaluate(ds.covariates()));
  est.treated = summarize(ds, 1, w);
  est.control = summarize(ds, 0, w);
  est.rank_deficient = mu0.rank_deficient() || mu1.rank_deficient();
  attach_variance(est, psi, level);
  return est;
}

VarianceEstimate variance_estimate(const CausalDataset& ds, Index m, const OutcomeModel& mu0, const OutcomeModel& mu1,
                                   double tau, double level) {
  check_level(level);
  check_model(mu0, ds.dim());
  check_model(mu1, ds.dim());
  const auto gm = match_counts_by_group(ds, m);
  const Eigen::VectorXd psi = influence_terms(ds, matching_weights(gm), mu0.evaluate(ds.covariates()),
                                              mu1.evaluate(ds.covariates()));
  AteEstimate tmp;
  tmp.tau_hat = tau;
  attach_variance(tmp, psi, level);
  return {*tmp.sigma2_hat, *tmp.ci_low, *tmp.ci_high};
}

Index select_m_ate(Index n, Index d, double alpha) {
  if (n < 2 || d < 1) throw Error(Errc::InvalidArgument, "select_m_ate needs n >= 2 and d >= 1");
  if (!(alpha > 0.0)) throw Error(Errc::InvalidArgument, "alpha must be positive");
  const double value = alpha * std::pow(static_cast<double>(n), 2.0 / (2.0 + static_cast<double>(d)));
  return round_clamp(value, 1, n);
}

Index select_m_ate(const CausalDataset& ds, double alpha) {
  const Index m = select_m_ate(ds.size(), ds.dim(), alpha);
  return std::clamp<Index>(m, 1, std::max<Index>(1, std::min(ds.n0(), ds.n1())));
}

}  // namespace matchkit
