#include "cli.hpp"

#include <chrono>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "matchkit/ate.hpp"
#include "matchkit/divergence.hpp"
#include "matchkit/io.hpp"
#include "matchkit/ratio.hpp"
#include "matchkit/simulate.hpp"

namespace matchkit::cli {
namespace {

using json = nlohmann::ordered_json;

constexpr Index kWarnDimension = 20;

struct Options {
  // ratio, ratio-at, kl
  std::string x_path, z_path, points_path;
  std::string baseline = "matching";
  // ate
  std::string data_path;
  std::string method = "bc";
  std::optional<int> degree;
  int folds = 2;
  double level = 0.95;
  // simulate, bench
  std::string task;
  std::string spec = "uniform-cube";
  Index d = 1;
  double width = 0.5;
  double mean = 0.5;
  double sd = 0.25;
  std::vector<Index> n_grid;
  Index n = 2000;
  Index reps = 100;
  std::vector<double> eval_point;
  int repeats = 3;
  // shared
  std::optional<Index> m;
  std::optional<double> alpha;
  std::uint64_t seed = 0;
};

void add_m_alpha(CLI::App* sub, Options& o) {
  sub->add_option("--m", o.m, "number of matches M")->check(CLI::PositiveNumber);
  sub->add_option("--alpha", o.alpha, "constant of the M selection rule (default 1)")->check(CLI::PositiveNumber);
}

// Resolves M: an explicit --m wins over --alpha, which otherwise feeds `rule`.
template <typename Rule>
Index resolve_m(const Options& o, json& warnings, Rule rule) {
  if (o.m) {
    if (o.alpha) warnings.push_back("both --m and --alpha given; using --m");
    return *o.m;
  }
  return rule(o.alpha.value_or(1.0));
}

void warn_dimension(Index d, json& warnings) {
  if (d > kWarnDimension) {
    warnings.push_back("dimension " + std::to_string(d) + " exceeds 20; k-d tree queries degrade toward brute force");
  }
}

json m_alpha_config(const Options& o) {
  return json{{"m", o.m ? json(*o.m) : json(nullptr)}, {"alpha", o.alpha ? json(*o.alpha) : json(nullptr)}};
}

AteMethod parse_method(const std::string& name) {
  if (name == "matching") return AteMethod::Matching;
  if (name == "bc") return AteMethod::BiasCorrected;
  return AteMethod::CrossFit;
}

TwoSampleSpec two_sample_spec(const Options& o) {
  if (o.spec == "uniform-subinterval") return TwoSampleSpec::uniform_subinterval(o.d, o.width);
  if (o.spec == "truncated-gaussian") return TwoSampleSpec::truncated_gaussian(o.d, o.mean, o.sd);
  if (o.spec == "uniform-cube") return TwoSampleSpec::uniform_cube(o.d);
  throw Error(Errc::InvalidArgument, "spec '" + o.spec + "' is not a two-sample design");
}

json run_ratio(const Options& o, RunManifest& manifest, json& warnings) {
  const auto xs = read_file(o.x_path);
  const auto zs = read_file(o.z_path);
  manifest.input_digests = {{"x", digest(xs)}, {"z", digest(zs)}};
  const auto x = parse_points_csv(xs);
  const auto z = parse_points_csv(zs);
  warn_dimension(x.dim(), warnings);
  const Index m = resolve_m(o, warnings, [&](double a) { return select_m_ratio(x.size(), z.size(), x.dim(), a); });
  manifest.config = json{{"x", o.x_path}, {"z", o.z_path}};
  manifest.config.update(m_alpha_config(o));
  return to_json(density_ratio_at_sample(x, z, m));
}

json run_ratio_at(const Options& o, RunManifest& manifest, json& warnings) {
  const auto xs = read_file(o.x_path);
  const auto zs = read_file(o.z_path);
  const auto ps = read_file(o.points_path);
  manifest.input_digests = {{"x", digest(xs)}, {"z", digest(zs)}, {"points", digest(ps)}};
  const auto x = parse_points_csv(xs);
  const auto z = parse_points_csv(zs);
  const auto points = parse_points_csv(ps);
  warn_dimension(x.dim(), warnings);
  const Index m = resolve_m(o, warnings, [&](double a) {
    const Index rule = select_m_ratio(x.size(), z.size(), x.dim(), a);
    return o.baseline == "two-step" ? std::min(rule, z.size()) : rule;
  });
  manifest.config = json{{"x", o.x_path}, {"z", o.z_path}, {"points", o.points_path}, {"baseline", o.baseline}};
  manifest.config.update(m_alpha_config(o));

  json result{{"baseline", o.baseline}};
  if (o.baseline == "matching") {
    const auto est = density_ratio_at_points(x, z, m, points);
    result["at_points"] = to_json(est.at_points);
    result["at_sample"] = to_json(est.at_sample);
  } else if (o.baseline == "two-step") {
    result["at_points"] = to_json(two_step_ratio(x, z, m, points));
  } else {
    result["at_points"] = to_json(noshad_ratio(x, z, m, points));
  }
  return result;
}

json run_kl(const Options& o, RunManifest& manifest, json& warnings) {
  const auto xs = read_file(o.x_path);
  const auto zs = read_file(o.z_path);
  manifest.input_digests = {{"x", digest(xs)}, {"z", digest(zs)}};
  const auto x = parse_points_csv(xs);
  const auto z = parse_points_csv(zs);
  warn_dimension(x.dim(), warnings);
  const Index m = resolve_m(o, warnings, [&](double a) { return select_m_kl(x.size(), z.size(), x.dim(), a); });
  manifest.config = json{{"x", o.x_path}, {"z", o.z_path}};
  manifest.config.update(m_alpha_config(o));
  return to_json(kl_estimate(x, z, m));
}

json run_ate(const Options& o, RunManifest& manifest, json& warnings) {
  const auto data = read_file(o.data_path);
  manifest.input_digests = {{"data", digest(data)}};
  const auto ds = parse_causal_csv(data);
  warn_dimension(ds.dim(), warnings);
  const Index m = resolve_m(o, warnings, [&](double a) { return select_m_ate(ds, a); });
  const int degree = o.degree.value_or(default_outcome_degree(ds.dim()));
  manifest.config = json{{"data", o.data_path}, {"method", o.method}, {"degree", degree},
                         {"folds", o.folds},    {"level", o.level}};
  manifest.config.update(m_alpha_config(o));

  switch (parse_method(o.method)) {
    case AteMethod::Matching: return to_json(ate_matching(ds, m));
    case AteMethod::BiasCorrected:
      return to_json(ate_bias_corrected(ds, m, fit_outcome_model(ds, 0, degree), fit_outcome_model(ds, 1, degree),
                                        o.level));
    default: return to_json(ate_cross_fit(ds, m, o.folds, degree, o.seed, o.level));
  }
}

json run_simulate(const Options& o, RunManifest& manifest, json&) {
  manifest.config = json{{"task", o.task}, {"spec", o.spec}, {"d", o.d},         {"width", o.width},
                         {"mean", o.mean}, {"sd", o.sd},     {"n_grid", o.n_grid}, {"n", o.n},
                         {"reps", o.reps}, {"eval", o.eval_point}};
  manifest.config.update(m_alpha_config(o));
  const double alpha = o.alpha.value_or(1.0);

  if (o.task == "coverage") {
    if (o.spec != "linear-causal") throw Error(Errc::InvalidArgument, "coverage runs use --spec linear-causal");
    CoverageOptions options;
    options.alpha = alpha;
    options.degree = o.degree.value_or(1);
    options.folds = o.folds;
    options.level = o.level;
    manifest.config["method"] = o.method;
    manifest.config["degree"] = options.degree;
    manifest.config["folds"] = o.folds;
    manifest.config["level"] = o.level;
    return to_json(mc_ate_coverage(CausalSpec::linear_default(), o.n, o.reps, parse_method(o.method), o.seed, options));
  }

  const auto spec = two_sample_spec(o);
  if (o.n_grid.empty()) throw Error(Errc::InvalidArgument, "--n-grid is required for this task");
  if (o.task == "pw-risk") {
    std::vector<double> point = o.eval_point;
    if (point.empty()) point.assign(static_cast<std::size_t>(o.d), 0.5);
    return to_json(mc_pointwise_risk(spec, point, o.n_grid, o.reps, alpha, o.seed));
  }
  if (o.task == "l1-risk") return to_json(mc_l1_risk(spec, o.n_grid, o.reps, alpha, o.seed));
  return to_json(mc_kl(spec, o.n_grid, o.reps, alpha, o.seed));
}

json run_bench(const Options& o, RunManifest& manifest, json&) {
  manifest.config = json{{"n_grid", o.n_grid}, {"d", o.d}, {"repeats", o.repeats}};
  manifest.config.update(m_alpha_config(o));
  if (o.n_grid.empty()) throw Error(Errc::InvalidArgument, "--n-grid is required");
  MRule rule;
  rule.fixed = o.m;
  rule.alpha = o.alpha.value_or(1.0);
  return to_json(bench_scaling(o.n_grid, o.d, rule, o.seed, o.repeats));
}

void write_error(std::ostream& err, std::string_view kind, std::string_view code, std::string_view message) {
  err << json{{"error", json{{"kind", kind}, {"code", code}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Nearest-neighbor matching estimators: density ratio, KL divergence, ATE"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  auto* ratio = app.add_subcommand("ratio", "density ratio at the x sample points");
  ratio->add_option("--x", o.x_path, "CSV of the x sample (nu0)")->required();
  ratio->add_option("--z", o.z_path, "CSV of the z sample (nu1)")->required();
  add_m_alpha(ratio, o);

  auto* ratio_at = app.add_subcommand("ratio-at", "density ratio at new points");
  ratio_at->add_option("--x", o.x_path)->required();
  ratio_at->add_option("--z", o.z_path)->required();
  ratio_at->add_option("--points", o.points_path, "CSV of evaluation points")->required();
  ratio_at->add_option("--baseline", o.baseline)->check(CLI::IsMember({"matching", "two-step", "noshad"}));
  add_m_alpha(ratio_at, o);

  auto* kl = app.add_subcommand("kl", "KL divergence KL(nu1 || nu0) in nats");
  kl->add_option("--x", o.x_path)->required();
  kl->add_option("--z", o.z_path)->required();
  add_m_alpha(kl, o);

  auto* ate = app.add_subcommand("ate", "average treatment effect");
  ate->add_option("--data", o.data_path, "CSV with header x1,...,xd,d,y")->required();
  ate->add_option("--method", o.method)->check(CLI::IsMember({"matching", "bc", "crossfit"}));
  ate->add_option("--degree", o.degree, "outcome polynomial degree; -1 selects the zero model")
      ->check(CLI::Range(-1, 16));
  ate->add_option("--folds", o.folds)->check(CLI::Range(2, 1 << 20));
  ate->add_option("--seed", o.seed);
  ate->add_option("--level", o.level)->check(CLI::Range(0.0, 1.0));
  add_m_alpha(ate, o);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo risk, KL and coverage studies");
  simulate->add_option("--task", o.task)->required()->check(CLI::IsMember({"pw-risk", "l1-risk", "kl-bias", "coverage"}));
  simulate->add_option("--spec", o.spec)
      ->check(CLI::IsMember({"uniform-cube", "uniform-subinterval", "truncated-gaussian", "linear-causal"}));
  simulate->add_option("--d", o.d)->check(CLI::PositiveNumber);
  simulate->add_option("--width", o.width);
  simulate->add_option("--mean", o.mean);
  simulate->add_option("--sd", o.sd);
  simulate->add_option("--n-grid", o.n_grid, "comma-separated sample sizes")->delimiter(',');
  simulate->add_option("--n", o.n, "sample size for coverage runs")->check(CLI::PositiveNumber);
  simulate->add_option("--reps", o.reps);
  simulate->add_option("--eval", o.eval_point, "evaluation point for pw-risk (default: cube center)")->delimiter(',');
  simulate->add_option("--method", o.method)->check(CLI::IsMember({"matching", "bc", "crossfit"}));
  simulate->add_option("--degree", o.degree)->check(CLI::Range(-1, 16));
  simulate->add_option("--folds", o.folds)->check(CLI::Range(2, 1 << 20));
  simulate->add_option("--level", o.level)->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--seed", o.seed);
  add_m_alpha(simulate, o);

  auto* bench = app.add_subcommand("bench", "time sample-point match counting over a size grid");
  bench->add_option("--n-grid", o.n_grid)->delimiter(',')->required();
  bench->add_option("--d", o.d)->check(CLI::PositiveNumber);
  bench->add_option("--repeats", o.repeats)->check(CLI::PositiveNumber);
  bench->add_option("--seed", o.seed);
  add_m_alpha(bench, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    write_error(err, "usage", e.get_name(), e.what());
    return kExitUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  RunManifest manifest;
  manifest.command = chosen->get_name();
  manifest.seed = o.seed;
  json warnings = json::array();
  const auto start = std::chrono::steady_clock::now();
  try {
    json result;
    if (chosen == ratio) result = run_ratio(o, manifest, warnings);
    else if (chosen == ratio_at) result = run_ratio_at(o, manifest, warnings);
    else if (chosen == kl) result = run_kl(o, manifest, warnings);
    else if (chosen == ate) result = run_ate(o, manifest, warnings);
    else if (chosen == simulate) result = run_simulate(o, manifest, warnings);
    else result = run_bench(o, manifest, warnings);
    if (!warnings.empty()) result["warnings"] = warnings;
    manifest.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out << envelope(manifest, std::move(result)).dump(2) << '\n';
    return kExitOk;
  } catch (const Error& e) {
    const bool usage = e.code() == Errc::InvalidArgument;
    write_error(err, usage ? "usage" : "data", to_string(e.code()), e.what());
    return usage ? kExitUsage : kExitData;
  }
}

}  // namespace matchkit::cli
