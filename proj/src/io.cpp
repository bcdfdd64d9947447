#include "matchkit/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace matchkit {
namespace {

using json = nlohmann::ordered_json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

// Header plus data rows; blank lines are skipped. Each row keeps its 1-based line number.
struct CsvTable {
  std::vector<std::string_view> header;
  std::vector<std::pair<std::size_t, std::vector<std::string_view>>> rows;
};

CsvTable tokenize(std::string_view text) {
  CsvTable table;
  std::size_t line_no = 0;
  bool have_header = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    if (!have_header) {
      table.header = split(line);
      have_header = true;
    } else {
      table.rows.emplace_back(line_no, split(line));
    }
  }
  if (!have_header) throw Error(Errc::Empty, "input has no header row");
  for (const auto& name : table.header) {
    if (name.empty()) throw Error(Errc::Malformed, "header contains an empty column name");
  }
  if (table.rows.empty()) throw Error(Errc::Empty, "input has no data rows");
  return table;
}

double parse_number(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value)) {
    throw Error(Errc::Malformed, "line " + std::to_string(line_no) + ": '" + std::string(field) +
                                     "' is not a finite number");
  }
  return value;
}

void check_arity(const std::vector<std::string_view>& fields, std::size_t expected, std::size_t line_no) {
  if (fields.size() != expected) {
    throw Error(Errc::Malformed, "line " + std::to_string(line_no) + ": expected " + std::to_string(expected) +
                                     " fields, found " + std::to_string(fields.size()));
  }
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json summary_json(const GroupWeightSummary& s) { return json{{"max_weight", s.max_weight}, {"mean_weight", s.mean_weight}}; }

json slope_json(const std::optional<SlopeFit>& fit) {
  if (!fit) return nullptr;
  return json{{"slope", fit->slope}, {"intercept", fit->intercept}, {"standard_error", optional_number(fit->standard_error)}};
}

}  // namespace

PointSet parse_points_csv(std::string_view text) {
  const auto table = tokenize(text);
  const std::size_t d = table.header.size();
  RowMatrix<double> m(static_cast<Index>(table.rows.size()), static_cast<Index>(d));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& [line_no, fields] = table.rows[r];
    check_arity(fields, d, line_no);
    for (std::size_t k = 0; k < d; ++k) m(static_cast<Index>(r), static_cast<Index>(k)) = parse_number(fields[k], line_no);
  }
  return PointSet(std::move(m));
}

CausalDataset parse_causal_csv(std::string_view text) {
  const auto table = tokenize(text);
  const std::size_t cols = table.header.size();
  if (cols < 3 || table.header[cols - 2] != "d" || table.header[cols - 1] != "y") {
    throw Error(Errc::Malformed, "causal header must be x1,...,xd,d,y");
  }
  const std::size_t d = cols - 2;
  RowMatrix<double> x(static_cast<Index>(table.rows.size()), static_cast<Index>(d));
  std::vector<int> treatment(table.rows.size());
  Eigen::VectorXd y(static_cast<Index>(table.rows.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& [line_no, fields] = table.rows[r];
    check_arity(fields, cols, line_no);
    for (std::size_t k = 0; k < d; ++k) x(static_cast<Index>(r), static_cast<Index>(k)) = parse_number(fields[k], line_no);
    const double t = parse_number(fields[d], line_no);
    if (t != 0.0 && t != 1.0) {
      throw Error(Errc::BadTreatmentValue, "line " + std::to_string(line_no) + ": treatment '" +
                                               std::string(fields[d]) + "' is not 0 or 1");
    }
    treatment[r] = static_cast<int>(t);
    y(static_cast<Index>(r)) = parse_number(fields[d + 1], line_no);
  }
  return CausalDataset(PointSet(std::move(x)), treatment, std::move(y));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

PointSet read_points_csv(const std::filesystem::path& path) { return parse_points_csv(read_file(path)); }

CausalDataset read_causal_csv(const std::filesystem::path& path) { return parse_causal_csv(read_file(path)); }

std::string digest(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json to_json(const RunManifest& manifest) {
  json digests = json::object();
  for (const auto& [name, value] : manifest.input_digests) digests[name] = value;
  return json{{"command", manifest.command},
              {"config", manifest.config},
              {"input_digests", digests},
              {"seed", manifest.seed},
              {"version", manifest.version},
              {"wall_time_seconds", manifest.wall_time_seconds}};
}

json to_json(const RatioEstimate& e) {
  return json{{"eval_kind", e.eval_kind == EvalKind::SamplePoints ? "sample-points" : "new-points"},
              {"m", e.m},
              {"n0", e.n0},
              {"n1", e.n1},
              {"values", std::vector<double>(e.values.data(), e.values.data() + e.values.size())}};
}

json to_json(const DivergenceEstimate& e) {
  return json{{"value", e.value}, {"m", e.m}, {"n0", e.n0}, {"n1", e.n1}};
}

json to_json(const AteEstimate& e) {
  json out{{"method", to_string(e.method)},
           {"tau_hat", e.tau_hat},
           {"sigma2_hat", optional_number(e.sigma2_hat)},
           {"ci_low", optional_number(e.ci_low)},
           {"ci_high", optional_number(e.ci_high)},
           {"level", e.level},
           {"n", e.n},
           {"m", e.m},
           {"k_folds", e.k_folds ? json(*e.k_folds) : json(nullptr)},
           {"tau_imputation", optional_number(e.tau_imputation)},
           {"fold_estimates", e.fold_estimates},
           {"diagnostics", json{{"treated", summary_json(e.treated)},
                                {"control", summary_json(e.control)},
                                {"rank_deficient", e.rank_deficient}}}};
  return out;
}

json to_json(const RiskReport& r) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    cells.push_back(json{{"n", c.n}, {"m", c.m}, {"reps", c.reps}, {"mse", c.mse}, {"l1", c.l1},
                         {"mean_estimate", c.mean_estimate}});
  }
  return json{{"metric", r.metric}, {"cells", cells}, {"fit", slope_json(r.fit)}};
}

json to_json(const KlReport& r) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    cells.push_back(json{{"n", c.n}, {"m", c.m}, {"reps", c.reps}, {"mean", c.mean}, {"sd", c.sd},
                         {"mean_abs", c.mean_abs}, {"truth", c.truth}, {"bias", c.mean - c.truth}});
  }
  return json{{"cells", cells}};
}

json to_json(const CoverageReport& r) {
  return json{{"method", to_string(r.method)},
              {"n", r.n},
              {"reps", r.reps},
              {"m", r.m},
              {"true_tau", r.true_tau},
              {"coverage", optional_number(r.coverage)},
              {"mean_bias", r.mean_bias},
              {"empirical_sd", r.empirical_sd},
              {"mean_estimated_sd", optional_number(r.mean_estimated_sd)},
              {"sd_ratio", optional_number(r.sd_ratio)}};
}

json to_json(const std::vector<TimingRow>& rows) {
  json out = json::array();
  for (const auto& row : rows) {
    out.push_back(json{{"n", row.n}, {"m", row.m}, {"seconds", row.seconds},
                       {"ratio_to_previous", optional_number(row.ratio_to_previous)}});
  }
  return json{{"rows", out}};
}

json envelope(const RunManifest& manifest, json result) {
  return json{{"manifest", to_json(manifest)}, {"result", std::move(result)}};
}

}  // namespace matchkit
