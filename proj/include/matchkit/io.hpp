#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "matchkit/ate.hpp"
#include "matchkit/core.hpp"
#include "matchkit/divergence.hpp"
#include "matchkit/ratio.hpp"
#include "matchkit/simulate.hpp"

namespace matchkit {

inline constexpr std::string_view kVersion = MATCHKIT_VERSION;

/// Points CSV: a header with one column per coordinate ("x1,...,xd"), then
/// one row per point. Comma separated, '.' decimal point, no quoting.
PointSet parse_points_csv(std::string_view text);
PointSet read_points_csv(const std::filesystem::path& path);

/// Causal CSV: header "x1,...,xd,d,y"; the d column holds 0 or 1.
CausalDataset parse_causal_csv(std::string_view text);
CausalDataset read_causal_csv(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

/// 64-bit FNV-1a, rendered as "fnv1a64:<16 hex digits>".
std::string digest(std::string_view bytes);

/// Provenance block embedded in every CLI result.
struct RunManifest {
  std::string command;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::map<std::string, std::string> input_digests;
  std::uint64_t seed = 0;
  std::string version{kVersion};
  double wall_time_seconds = 0.0;
};

nlohmann::ordered_json to_json(const RunManifest& manifest);
nlohmann::ordered_json to_json(const RatioEstimate& estimate);
nlohmann::ordered_json to_json(const DivergenceEstimate& estimate);
nlohmann::ordered_json to_json(const AteEstimate& estimate);
nlohmann::ordered_json to_json(const RiskReport& report);
nlohmann::ordered_json to_json(const KlReport& report);
nlohmann::ordered_json to_json(const CoverageReport& report);
nlohmann::ordered_json to_json(const std::vector<TimingRow>& rows);

/// {"manifest": ..., "result": ...}
nlohmann::ordered_json envelope(const RunManifest& manifest, nlohmann::ordered_json result);

}  // namespace matchkit
