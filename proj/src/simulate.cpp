#include "matchkit/simulate.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "matchkit/divergence.hpp"
#include "matchkit/matching.hpp"
#include "matchkit/parallel.hpp"
#include "matchkit/random.hpp"
#include "matchkit/ratio.hpp"

namespace matchkit {
namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// Probability mass of N(mean, sd^2) inside [0, 1].
double truncation_mass(const TwoSampleSpec& s) { return normal_cdf((1.0 - s.mean) / s.sd) - normal_cdf(-s.mean / s.sd); }

// Replication (grid cell g, replicate r) gets its own stream.
std::uint64_t rep_seed(std::uint64_t seed, std::size_t g, Index r) {
  return derive_seed(seed, (static_cast<std::uint64_t>(g) << 32) | static_cast<std::uint64_t>(r));
}

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

// Two-pass mean and sample SD in index order.
Moments moments(const std::vector<double>& v) {
  Moments out;
  if (v.empty()) return out;
  double sum = 0.0;
  for (double x : v) sum += x;
  out.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return out;
}

void check_reps(Index reps) {
  if (reps < 1) throw Error(Errc::EmptyRun, "at least one replication is required");
}

void check_grid(std::span<const Index> n_grid) {
  if (n_grid.empty()) throw Error(Errc::EmptyRun, "the sample-size grid is empty");
  for (Index n : n_grid) {
    if (n < 1) throw Error(Errc::InvalidArgument, "grid sizes must be positive");
  }
}

}  // namespace

std::string_view to_string(TwoSampleFamily family) {
  switch (family) {
    case TwoSampleFamily::UniformCube: return "uniform-cube";
    case TwoSampleFamily::UniformSubinterval: return "uniform-subinterval";
    case TwoSampleFamily::TruncatedGaussian: return "truncated-gaussian";
  }
  return "unknown";
}

TwoSampleSpec TwoSampleSpec::uniform_cube(Index d) {
  TwoSampleSpec s;
  s.family = TwoSampleFamily::UniformCube;
  s.d = d;
  return s;
}

TwoSampleSpec TwoSampleSpec::uniform_subinterval(Index d, double width) {
  TwoSampleSpec s;
  s.family = TwoSampleFamily::UniformSubinterval;
  s.d = d;
  s.width = width;
  return s;
}

TwoSampleSpec TwoSampleSpec::truncated_gaussian(Index d, double mean, double sd) {
  TwoSampleSpec s;
  s.family = TwoSampleFamily::TruncatedGaussian;
  s.d = d;
  s.mean = mean;
  s.sd = sd;
  return s;
}

void TwoSampleSpec::validate() const {
  if (d < 1) throw Error(Errc::InvalidArgument, "dimension must be positive");
  if (family == TwoSampleFamily::UniformSubinterval && !(width > 0.0 && width <= 1.0)) {
    throw Error(Errc::InvalidArgument, "subinterval width must lie in (0, 1]");
  }
  if (family == TwoSampleFamily::TruncatedGaussian) {
    if (!(sd > 0.0) || !(mean >= 0.0 && mean <= 1.0)) {
      throw Error(Errc::InvalidArgument, "truncated Gaussian needs sd > 0 and mean in [0, 1]");
    }
  }
}

std::pair<PointSet, PointSet> generate_two_sample(const TwoSampleSpec& spec, Index n0, Index n1, std::uint64_t seed) {
  spec.validate();
  if (n0 < 0 || n1 < 0) throw Error(Errc::InvalidArgument, "sample sizes must be nonnegative");
  Rng rng(seed);
  RowMatrix<double> x(n0, spec.d);
  for (Index i = 0; i < n0; ++i) {
    for (Index k = 0; k < spec.d; ++k) x(i, k) = rng.uniform();
  }
  RowMatrix<double> z(n1, spec.d);
  for (Index i = 0; i < n1; ++i) {
    for (Index k = 0; k < spec.d; ++k) {
      switch (spec.family) {
        case TwoSampleFamily::UniformCube: z(i, k) = rng.uniform(); break;
        case TwoSampleFamily::UniformSubinterval: z(i, k) = spec.width * rng.uniform(); break;
        case TwoSampleFamily::TruncatedGaussian: {
          double v;
          do {
            v = spec.mean + spec.sd * rng.normal();
          } while (v < 0.0 || v > 1.0);
          z(i, k) = v;
          break;
        }
      }
    }
  }
  return {PointSet(std::move(x)), PointSet(std::move(z))};
}

double true_ratio(const TwoSampleSpec& spec, std::span<const double> p) {
  spec.validate();
  if (static_cast<Index>(p.size()) != spec.d) throw Error(Errc::DimensionMismatch, "point has the wrong dimension");
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::OutsideSupport, "point lies outside the unit cube");
  }
  switch (spec.family) {
    case TwoSampleFamily::UniformCube: return 1.0;
    case TwoSampleFamily::UniformSubinterval: {
      for (double v : p) {
        if (v > spec.width) return 0.0;
      }
      return std::pow(spec.width, -static_cast<double>(spec.d));
    }
    case TwoSampleFamily::TruncatedGaussian: {
      const double mass = truncation_mass(spec);
      double r = 1.0;
      for (double v : p) r *= normal_pdf((v - spec.mean) / spec.sd) / (spec.sd * mass);
      return r;
    }
  }
  return 0.0;
}

double true_kl(const TwoSampleSpec& spec) {
  spec.validate();
  const double d = static_cast<double>(spec.d);
  switch (spec.family) {
    case TwoSampleFamily::UniformCube: return 0.0;
    case TwoSampleFamily::UniformSubinterval: return -d * std::log(spec.width);
    case TwoSampleFamily::TruncatedGaussian: {
      // Against the uniform base the divergence is minus the entropy of nu1.
      const double a = -spec.mean / spec.sd;
      const double b = (1.0 - spec.mean) / spec.sd;
      const double mass = truncation_mass(spec);
      const double entropy = std::log(std::sqrt(2.0 * std::numbers::pi * std::numbers::e) * spec.sd * mass) +
                             (a * normal_pdf(a) - b * normal_pdf(b)) / (2.0 * mass);
      return -d * entropy;
    }
  }
  return 0.0;
}

double cube_mean(const OutcomeModel& poly) {
  if (poly.is_zero()) return 0.0;
  double total = 0.0;
  for (std::size_t t = 0; t < poly.exponents().size(); ++t) {
    double term = poly.coefficients()(static_cast<Index>(t));
    for (int e : poly.exponents()[t]) term /= static_cast<double>(e + 1);
    total += term;
  }
  return total;
}

CausalSpec CausalSpec::linear_default() {
  CausalSpec s;
  s.d = 2;
  s.propensity_intercept = 0.3;
  s.propensity_slope = 0.4;
  const std::vector<std::vector<int>> linear = {{0, 0}, {1, 0}, {0, 1}};
  s.mu0 = OutcomeModel(2, 1, linear, Eigen::Vector3d(0.0, 1.0, 1.0));
  s.mu1 = OutcomeModel(2, 1, linear, Eigen::Vector3d(1.0, 2.0, 1.0));
  s.noise_sd = 1.0;
  return s;
}

double CausalSpec::propensity(std::span<const double> x) const { return propensity_intercept + propensity_slope * x[0]; }

double CausalSpec::true_tau() const { return cube_mean(mu1) - cube_mean(mu0); }

void CausalSpec::validate() const {
  if (d < 1) throw Error(Errc::InvalidArgument, "dimension must be positive");
  const double lo = std::min(propensity_intercept, propensity_intercept + propensity_slope);
  const double hi = std::max(propensity_intercept, propensity_intercept + propensity_slope);
  if (lo < 0.2 || hi > 0.8) throw Error(Errc::InvalidArgument, "propensity must stay within [0.2, 0.8]");
  for (const auto* mu : {&mu0, &mu1}) {
    if (!mu->is_zero() && mu->dim() != d) throw Error(Errc::DimensionMismatch, "outcome mean has the wrong dimension");
  }
  if (!(noise_sd >= 0.0)) throw Error(Errc::InvalidArgument, "noise sd must be nonnegative");
}

CausalDataset generate_causal(const CausalSpec& spec, Index n, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  RowMatrix<double> x(n, spec.d);
  std::vector<int> treatment(static_cast<std::size_t>(n));
  Eigen::VectorXd y(n);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < spec.d; ++k) x(i, k) = rng.uniform();
    const std::span<const double> row(x.data() + i * spec.d, static_cast<std::size_t>(spec.d));
    const bool treated = rng.bernoulli(spec.propensity(row));
    treatment[static_cast<std::size_t>(i)] = treated ? 1 : 0;
    const double noise = spec.noise_sd * rng.normal();
    y(i) = (treated ? spec.mu1(row) : spec.mu0(row)) + noise;
  }
  return CausalDataset(PointSet(std::move(x)), treatment, std::move(y));
}

std::optional<SlopeFit> fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::DimensionMismatch, "x and y differ in length");
  const std::size_t k = x.size();
  if (k < 2) return std::nullopt;
  std::vector<double> lx(k), ly(k);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) return std::nullopt;
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) return std::nullopt;
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (k > 2) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double r = ly[i] - fit.intercept - fit.slope * lx[i];
      ssr += r * r;
    }
    fit.standard_error = std::sqrt(ssr / static_cast<double>(k - 2) / sxx);
  }
  return fit;
}

RiskReport mc_pointwise_risk(const TwoSampleSpec& spec, std::span<const double> eval_point,
                             std::span<const Index> n_grid, Index reps, double alpha, std::uint64_t seed) {
  check_reps(reps);
  check_grid(n_grid);
  const double truth = true_ratio(spec, eval_point);
  RowMatrix<double> p(1, spec.d);
  for (Index k = 0; k < spec.d; ++k) p(0, k) = eval_point[static_cast<std::size_t>(k)];
  const PointSet point(std::move(p));

  RiskReport report;
  report.metric = "pointwise-mse";
  std::vector<double> ns, risks;
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    const Index n = n_grid[g];
    const Index m = select_m_ratio(n, n, spec.d, alpha);
    std::vector<double> estimates(static_cast<std::size_t>(reps));
    parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
      const auto [x, z] = generate_two_sample(spec, n, n, rep_seed(seed, g, static_cast<Index>(r)));
      estimates[r] = density_ratio_at_points(x, z, m, point).at_points.values(0);
    });
    RiskCell cell{n, m, reps};
    for (double e : estimates) {
      cell.mse += (e - truth) * (e - truth);
      cell.l1 += std::abs(e - truth);
      cell.mean_estimate += e;
    }
    cell.mse /= static_cast<double>(reps);
    cell.l1 /= static_cast<double>(reps);
    cell.mean_estimate /= static_cast<double>(reps);
    report.cells.push_back(cell);
    ns.push_back(static_cast<double>(n));
    risks.push_back(cell.mse);
  }
  report.fit = fit_loglog_slope(ns, risks);
  return report;
}

RiskReport mc_l1_risk(const TwoSampleSpec& spec, std::span<const Index> n_grid, Index reps, double alpha,
                      std::uint64_t seed) {
  check_reps(reps);
  check_grid(n_grid);
  RiskReport report;
  report.metric = "l1";
  std::vector<double> ns, risks;
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    const Index n = n_grid[g];
    const Index m = select_m_ratio(n, n, spec.d, alpha);
    std::vector<double> l1(static_cast<std::size_t>(reps)), l2(static_cast<std::size_t>(reps)),
        mean(static_cast<std::size_t>(reps));
    parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
      const auto [x, z] = generate_two_sample(spec, n, n, rep_seed(seed, g, static_cast<Index>(r)));
      const auto est = density_ratio_at_sample(x, z, m);
      double a = 0.0, s = 0.0;
      for (Index i = 0; i < x.size(); ++i) {
        const double err = est.values(i) - true_ratio(spec, x.row(i));
        a += std::abs(err);
        s += err * err;
      }
      l1[r] = a / static_cast<double>(n);
      l2[r] = s / static_cast<double>(n);
      mean[r] = est.mean();
    });
    RiskCell cell{n, m, reps};
    cell.l1 = moments(l1).mean;
    cell.mse = moments(l2).mean;
    cell.mean_estimate = moments(mean).mean;
    report.cells.push_back(cell);
    ns.push_back(static_cast<double>(n));
    risks.push_back(cell.l1);
  }
  report.fit = fit_loglog_slope(ns, risks);
  return report;
}

KlReport mc_kl(const TwoSampleSpec& spec, std::span<const Index> n_grid, Index reps, double alpha,
               std::uint64_t seed) {
  check_reps(reps);
  check_grid(n_grid);
  KlReport report;
  const double truth = true_kl(spec);
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    const Index n = n_grid[g];
    const Index m = select_m_kl(n, n, spec.d, alpha);
    std::vector<double> values(static_cast<std::size_t>(reps));
    parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
      const auto [x, z] = generate_two_sample(spec, n, n, rep_seed(seed, g, static_cast<Index>(r)));
      values[r] = kl_estimate(x, z, m).value;
    });
    const auto mom = moments(values);
    KlCell cell{n, m, reps, mom.mean, mom.sd, 0.0, truth};
    for (double v : values) cell.mean_abs += std::abs(v);
    cell.mean_abs /= static_cast<double>(reps);
    report.cells.push_back(cell);
  }
  return report;
}

CoverageReport mc_ate_coverage(const CausalSpec& spec, Index n, Index reps, AteMethod method, std::uint64_t seed,
                               const CoverageOptions& options) {
  check_reps(reps);
  spec.validate();
  if (method == AteMethod::DoublyRobust) {
    throw Error(Errc::InvalidArgument, "coverage runs support matching, bias-corrected and cross-fit methods");
  }
  const double tau = spec.true_tau();
  const Index m_rule = select_m_ate(n, spec.d, options.alpha);

  std::vector<AteEstimate> estimates(static_cast<std::size_t>(reps));
  std::vector<Index> ms(static_cast<std::size_t>(reps));
  parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
    const auto ds = generate_causal(spec, n, rep_seed(seed, 0, static_cast<Index>(r)));
    const Index m = std::clamp<Index>(m_rule, 1, std::max<Index>(1, std::min(ds.n0(), ds.n1())));
    ms[r] = m;
    switch (method) {
      case AteMethod::Matching: estimates[r] = ate_matching(ds, m); break;
      case AteMethod::BiasCorrected:
        estimates[r] = ate_bias_corrected(ds, m, fit_outcome_model(ds, 0, options.degree),
                                          fit_outcome_model(ds, 1, options.degree), options.level);
        break;
      case AteMethod::CrossFit:
        estimates[r] = ate_cross_fit(ds, m, options.folds, options.degree,
                                     derive_seed(seed, 0xC0FFEEULL + static_cast<std::uint64_t>(r)), options.level);
        break;
      case AteMethod::DoublyRobust: break;
    }
  });

  CoverageReport report;
  report.method = method;
  report.n = n;
  report.reps = reps;
  report.m = m_rule;
  report.true_tau = tau;
  std::vector<double> taus;
  taus.reserve(estimates.size());
  for (const auto& e : estimates) taus.push_back(e.tau_hat);
  const auto mom = moments(taus);
  report.mean_bias = mom.mean - tau;
  report.empirical_sd = mom.sd;

  if (method != AteMethod::Matching) {
    // Containment allows for rounding when the interval collapses to a point.
    const double slack = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(tau));
    Index covered = 0;
    double sd_sum = 0.0;
    for (const auto& e : estimates) {
      if (*e.ci_low - slack <= tau && tau <= *e.ci_high + slack) ++covered;
      sd_sum += std::sqrt(*e.sigma2_hat / static_cast<double>(n));
    }
    report.coverage = static_cast<double>(covered) / static_cast<double>(reps);
    report.mean_estimated_sd = sd_sum / static_cast<double>(reps);
    if (*report.mean_estimated_sd > 0.0) report.sd_ratio = report.empirical_sd / *report.mean_estimated_sd;
  }
  return report;
}

std::vector<TimingRow> bench_scaling(std::span<const Index> n_grid, Index d, const MRule& rule, std::uint64_t seed,
                                     int repeats) {
  check_grid(n_grid);
  if (repeats < 1) throw Error(Errc::EmptyRun, "at least one timing repeat is required");
  const auto spec = TwoSampleSpec::uniform_cube(d);
  std::vector<TimingRow> rows;
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    const Index n = n_grid[g];
    const Index m = rule.fixed ? std::min(*rule.fixed, n) : select_m_ratio(n, n, d, rule.alpha);
    const auto [x, z] = generate_two_sample(spec, n, n, rep_seed(seed, g, 0));
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < repeats; ++r) {
      const auto start = std::chrono::steady_clock::now();
      const auto counts = match_counts_sample(x, z, m);
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      if (counts.total() != n * m) throw Error(Errc::InvalidArgument, "internal error: count identity violated");
      best = std::min(best, elapsed.count());
    }
    TimingRow row{n, m, best, std::nullopt};
    if (!rows.empty()) row.ratio_to_previous = best / rows.back().seconds;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace matchkit
