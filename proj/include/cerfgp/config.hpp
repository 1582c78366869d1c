#pragma once

#include "cerfgp/benchmark.hpp"
#include "cerfgp/dataset.hpp"
#include "cerfgp/pipeline.hpp"
#include "cerfgp/simulation.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace cerfgp {

inline constexpr std::string_view kVersion = "0.1.0";

struct DataSource {
  std::filesystem::path path;
  CsvSchema schema;
};

/// Analysis grid: M points between two exposure percentiles, or between fixed
/// bounds when both are given.
struct GridSpec {
  Eigen::Index m = 100;
  double lower_percentile = 0.5;
  double upper_percentile = 99.5;
  std::optional<double> lo;
  std::optional<double> hi;

  void validate() const;
  Eigen::VectorXd build(const Eigen::VectorXd& w) const;
};

struct ChangePointSettings {
  double level = 0.95;
  Eigen::Index min_side = kDefaultMinSide;
  bool chain_rule = true;
};

struct RunConfig {
  std::optional<DataSource> data;
  std::optional<ScenarioConfig> scenario;
  AnalysisSettings analysis;
  /// True when the config lists kernel families explicitly.
  bool families_given = false;
  GridSpec grid;
  ChangePointSettings changepoints;
  std::optional<BenchmarkSpec> benchmark;
  std::filesystem::path output = "out";
  std::uint64_t seed = 1;
  /// GPS fit seed when it should differ from `seed`.
  std::optional<std::uint64_t> gps_seed;

  /// Structural checks that do not depend on the command.
  void validate() const;
};

/// Parses a JSON config. Unknown keys are rejected. Relative data paths are
/// resolved against `base_dir`. Any problem raises a Config error.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Replaces the seed everywhere it is used (scenario, GPS fit unless gps.seed is
/// set, benchmark).
void override_seed(RunConfig& config, std::uint64_t seed);

}  // namespace cerfgp
