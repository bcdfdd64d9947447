#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "matchkit/ate.hpp"
#include "matchkit/simulate.hpp"
#include "support.hpp"

using namespace matchkit;
using namespace matchkit::testing;

namespace {

CausalDataset four_unit() {
  const std::vector<int> t{1, 1, 0, 0};
  Eigen::VectorXd y(4);
  y << 5, 7, 1, 3;
  return CausalDataset(points_1d({0, 2.5, 1, 3.5}), t, y);
}

CausalDataset with_outcomes(const CausalDataset& ds, Eigen::VectorXd y) {
  std::vector<int> t(ds.treatments().begin(), ds.treatments().end());
  return CausalDataset(ds.covariates(), t, std::move(y));
}

}  // namespace

TEST_CASE("matching estimator on the four-unit example") {
  const auto est = ate_matching(four_unit(), 1);
  CHECK(est.tau_hat == doctest::Approx(4.0));
  REQUIRE(est.tau_imputation.has_value());
  CHECK(*est.tau_imputation == doctest::Approx(4.0));
  CHECK_FALSE(est.sigma2_hat.has_value());
  CHECK(est.method == AteMethod::Matching);
}

TEST_CASE("constant outcomes give zero effect") {
  const auto ds = with_outcomes(four_unit(), Eigen::VectorXd::Constant(4, 3.25));
  CHECK(ate_matching(ds, 1).tau_hat == doctest::Approx(0.0));
}

TEST_CASE("bias-corrected estimator with group-mean models") {
  const auto ds = four_unit();
  const auto mu0 = fit_outcome_model(ds, 0, 0);
  const auto mu1 = fit_outcome_model(ds, 1, 0);
  CHECK(mu0(std::vector<double>{0.0}) == doctest::Approx(2.0));
  CHECK(mu1(std::vector<double>{0.0}) == doctest::Approx(6.0));
  const auto est = ate_bias_corrected(ds, 1, mu0, mu1);
  CHECK(est.tau_hat == doctest::Approx(4.0));
  REQUIRE(est.sigma2_hat.has_value());
  CHECK(*est.sigma2_hat == doctest::Approx(4.0));
  const double half = normal_quantile(0.975) * std::sqrt(4.0 / 4.0);
  CHECK(*est.ci_low == doctest::Approx(4.0 - half));
  CHECK(*est.ci_high == doctest::Approx(4.0 + half));
  CHECK(*est.tau_imputation == doctest::Approx(4.0));

  const auto var = variance_estimate(ds, 1, mu0, mu1, 4.0);
  CHECK(var.sigma2 == doctest::Approx(4.0));
}

TEST_CASE("zero models reduce bias correction to plain matching") {
  const auto ds = four_unit();
  const auto z = OutcomeModel::zero(1);
  CHECK(ate_bias_corrected(ds, 1, z, z).tau_hat == ate_matching(ds, 1).tau_hat);
  CHECK(fit_outcome_model(ds, 0, kZeroModelDegree).is_zero());
  CHECK(z(std::vector<double>{17.0}) == 0.0);
}

TEST_CASE("doubly robust estimator") {
  const std::vector<int> t{1, 0};
  Eigen::VectorXd y(2);
  y << 1, 1;
  const CausalDataset ds(points_1d({0, 1}), t, y);
  const std::vector<double> e{0.5, 0.5};
  const auto z = OutcomeModel::zero(1);
  CHECK(ate_doubly_robust(ds, e, z, z).tau_hat == doctest::Approx(0.0));
  const std::vector<double> bad{0.5, 1.0};
  CHECK_THROWS_AS(ate_doubly_robust(ds, bad, z, z), Error);
}

TEST_CASE("doubly robust with exact models equals regression") {
  Rng rng(41);
  auto ds = random_causal(rng, 60, 2);
  Eigen::VectorXd y(ds.size());
  for (Index i = 0; i < ds.size(); ++i) {
    const auto r = ds.covariates().row(i);
    y(i) = ds.treated(i) ? 1.0 + 2.0 * r[0] : r[0];
  }
  ds = with_outcomes(ds, y);
  const auto mu0 = fit_outcome_model(ds, 0, 1);
  const auto mu1 = fit_outcome_model(ds, 1, 1);
  std::vector<double> e(static_cast<std::size_t>(ds.size()), 0.4);
  double reg = 0;
  for (Index i = 0; i < ds.size(); ++i) reg += mu1(ds.covariates().row(i)) - mu0(ds.covariates().row(i));
  reg /= static_cast<double>(ds.size());
  CHECK(ate_doubly_robust(ds, e, mu0, mu1).tau_hat == doctest::Approx(reg).epsilon(1e-10));
  CHECK(ate_bias_corrected(ds, 1, mu0, mu1).tau_hat == doctest::Approx(reg).epsilon(1e-10));
}

TEST_CASE("polynomial outcome models") {
  Rng rng(42);
  const auto x = random_points(rng, 30, 2, false);
  Eigen::VectorXd y(30);
  for (Index i = 0; i < 30; ++i) y(i) = 0.5 - 1.5 * x.matrix()(i, 0) + 3.0 * x.matrix()(i, 1);
  const auto lin = fit_polynomial(x, y, 1);
  CHECK_FALSE(lin.rank_deficient());
  for (Index i = 0; i < 30; ++i) CHECK(std::abs(lin(x.row(i)) - y(i)) <= 1e-8);

  const auto mean = fit_polynomial(x, y, 0);
  CHECK(mean(x.row(0)) == doctest::Approx(y.mean()));

  CHECK(monomial_exponents(2, 2).size() == 6);
  CHECK(monomial_exponents(3, 0).size() == 1);
  CHECK(default_outcome_degree(1) == 1);
  CHECK(default_outcome_degree(2) == 2);
  CHECK(default_outcome_degree(10) == 3);
  CHECK_THROWS_AS(fit_polynomial(points_1d({0, 1}), Eigen::VectorXd::Ones(2), 1), Error);
}

TEST_CASE("rank-deficient design falls back") {
  // every point shares x2, so the linear design is rank deficient
  const auto x = PointSet::from_rows({{0.0, 1.0}, {1.0, 1.0}, {2.0, 1.0}, {3.0, 1.0}});
  Eigen::VectorXd y(4);
  y << 1, 3, 5, 7;
  const auto fit = fit_polynomial(x, y, 1);
  CHECK(fit.rank_deficient());
  CHECK(fit(std::vector<double>{1.5, 1.0}) == doctest::Approx(4.0));
}

TEST_CASE("M selection for the ATE") {
  CHECK(select_m_ate(1000, 2, 1.0) == 32);
  CHECK(select_m_ate(4096, 2, 1.0) == 64);
  CHECK(select_m_ate(4096, 2, 1e-9) == 1);
}

TEST_CASE("normal quantile") {
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
  CHECK(normal_quantile(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-14));
  CHECK(normal_quantile(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-12));
}

TEST_CASE("fold partition") {
  const auto folds = fold_partition(11, 3, 5);
  REQUIRE(folds.size() == 3);
  CHECK(folds[0].size() == 4);
  CHECK(folds[1].size() == 4);
  CHECK(folds[2].size() == 3);
  std::vector<Index> all;
  for (const auto& f : folds) {
    CHECK(std::is_sorted(f.begin(), f.end()));
    all.insert(all.end(), f.begin(), f.end());
  }
  std::sort(all.begin(), all.end());
  std::vector<Index> expect(11);
  std::iota(expect.begin(), expect.end(), 0);
  CHECK(all == expect);
  CHECK(fold_partition(11, 3, 5) == folds);
}

TEST_CASE("cross-fit recovers tau without noise") {
  auto spec = CausalSpec::linear_default();
  spec.noise_sd = 0.0;
  spec.mu1 = OutcomeModel(2, 1, {{0, 0}, {1, 0}, {0, 1}}, Eigen::Vector3d(1.25, 1.0, 1.0));
  const auto ds = generate_causal(spec, 400, 3);
  const auto est = ate_cross_fit(ds, 5, 2, 1, 9);
  CHECK(std::abs(est.tau_hat - 1.25) <= 1e-8);
  CHECK(*est.sigma2_hat <= 1e-16);

  // heterogeneous effects: the estimate is the in-sample mean effect
  spec = CausalSpec::linear_default();
  spec.noise_sd = 0.0;
  const auto het = generate_causal(spec, 400, 3);
  double sample_tau = 0;
  for (Index i = 0; i < het.size(); ++i) sample_tau += 1.0 + het.covariates().row(i)[0];
  sample_tau /= static_cast<double>(het.size());
  CHECK(std::abs(ate_cross_fit(het, 5, 2, 1, 9).tau_hat - sample_tau) <= 1e-8);
  CHECK(est.fold_estimates.size() == 2);
  CHECK(est.k_folds == 2);
  CHECK(*est.sigma2_hat >= 0.0);
}

TEST_CASE("cross-fit with identical folds equals the single-fold value") {
  // two copies of the same units; the fold assignment is chosen so each fold holds one copy
  const auto base = four_unit();
  const auto folds = fold_partition(8, 2, 0);
  std::vector<int> t(8);
  Eigen::VectorXd y(8);
  RowMatrix<double> x(8, 1);
  for (int f = 0; f < 2; ++f) {
    for (std::size_t r = 0; r < 4; ++r) {
      const Index i = folds[static_cast<std::size_t>(f)][r];
      t[static_cast<std::size_t>(i)] = base.treated(static_cast<Index>(r)) ? 1 : 0;
      y(i) = base.outcomes()(static_cast<Index>(r));
      x(i, 0) = base.covariates().matrix()(static_cast<Index>(r), 0);
    }
  }
  const CausalDataset ds(PointSet(x), t, y);
  const auto est = ate_cross_fit(ds, 1, 2, 0, 0);
  REQUIRE(est.fold_estimates.size() == 2);
  CHECK(est.fold_estimates[0] == doctest::Approx(est.fold_estimates[1]));
  CHECK(est.tau_hat == doctest::Approx(est.fold_estimates[0]));
}

TEST_CASE("cross-fit folds that are too small") {
  CHECK_THROWS_AS(ate_cross_fit(four_unit(), 1, 2, 1, 0), Error);
}

TEST_CASE("property: weighting and imputation forms agree with the oracle") {
  Rng rng(43);
  for (int trial = 0; trial < 80; ++trial) {
    const auto ds = random_causal(rng);
    const Index m = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(std::min<Index>({ds.n0(), ds.n1(), 8}))));
    const int degree = ds.n0() > 4 && ds.n1() > 4 ? 1 : 0;
    const auto mu0 = fit_outcome_model(ds, 0, degree);
    const auto mu1 = fit_outcome_model(ds, 1, degree);
    const auto oracle = oracle_ate(ds, m, [&](auto r) { return mu0(r); }, [&](auto r) { return mu1(r); });
    const auto bc = ate_bias_corrected(ds, m, mu0, mu1);
    CHECK(std::abs(bc.tau_hat - oracle.tau_bc_weighting) <= 1e-10);
    CHECK(std::abs(*bc.tau_imputation - oracle.tau_bc_imputation) <= 1e-10);
    CHECK(std::abs(bc.tau_hat - *bc.tau_imputation) <= 1e-10);
    const auto plain = ate_matching(ds, m);
    CHECK(std::abs(plain.tau_hat - oracle.tau_weighting) <= 1e-10);
    const auto z = OutcomeModel::zero(ds.dim());
    CHECK(std::abs(ate_bias_corrected(ds, m, z, z).tau_hat - plain.tau_hat) <= 1e-12);
  }
}

TEST_CASE("property: shifting treated outcomes shifts tau by the same amount") {
  Rng rng(44);
  for (int trial = 0; trial < 40; ++trial) {
    const auto ds = random_causal(rng);
    const double c = rng.uniform(-3, 3);
    Eigen::VectorXd y = ds.outcomes();
    for (Index i : ds.treated_ids()) y(i) += c;
    const auto shifted = with_outcomes(ds, y);
    CHECK(ate_matching(shifted, 1).tau_hat == doctest::Approx(ate_matching(ds, 1).tau_hat + c).epsilon(1e-12));
  }
}

TEST_CASE("property: unit order does not matter") {
  Rng rng(45);
  for (int trial = 0; trial < 30; ++trial) {
    const auto ds = random_causal(rng);
    std::vector<Index> perm(static_cast<std::size_t>(ds.size()));
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<Index>(perm));
    const auto permuted = ds.subset(perm);
    const auto mu0 = fit_outcome_model(ds, 0, 0);
    const auto mu1 = fit_outcome_model(ds, 1, 0);
    const auto a = ate_bias_corrected(ds, 2, mu0, mu1);
    const auto b = ate_bias_corrected(permuted, 2, fit_outcome_model(permuted, 0, 0), fit_outcome_model(permuted, 1, 0));
    CHECK(a.tau_hat == doctest::Approx(b.tau_hat).epsilon(1e-12));
    CHECK(*a.sigma2_hat == doctest::Approx(*b.sigma2_hat).epsilon(1e-12));
  }
}
