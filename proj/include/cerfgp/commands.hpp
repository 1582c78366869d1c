#pragma once

#include "cerfgp/balance.hpp"
#include "cerfgp/changepoint.hpp"
#include "cerfgp/config.hpp"
#include "cerfgp/error.hpp"
#include "cerfgp/pipeline.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace cerfgp {

/// The dataset named by the config: a CSV file or a simulated scenario.
Dataset load_input(const RunConfig& config);

struct EstimateOutput {
  Eigen::Index size = 0;
  std::vector<std::string> covariates;
  DesignResult design;
  CerfResult result;
  BalanceReport balance;
};

EstimateOutput run_estimate(const RunConfig& config);

struct ChangePointOutput {
  DesignResult design;
  double sigma2 = 0.0;
  ChangePointReport report;
};

/// Change-point settings require a differentiable kernel: a fixed Matern-1/2
/// or a tuning lattice listing it is rejected; by default only the
/// differentiable families are searched.
ChangePointOutput run_changepoints(const RunConfig& config);

/// Each command writes its files into `out_dir` (created when missing):
///   simulate     data.csv
///   tune         tuning.csv, tuning.json
///   estimate     cerf.csv, balance.csv, meta.json
///   changepoints delta.csv, changepoints.json
///   benchmark    benchmark.csv
void cmd_simulate(const RunConfig& config, const std::filesystem::path& out_dir);
void cmd_tune(const RunConfig& config, const std::filesystem::path& out_dir);
void cmd_estimate(const RunConfig& config, const std::filesystem::path& out_dir);
void cmd_changepoints(const RunConfig& config, const std::filesystem::path& out_dir);
void cmd_benchmark(const RunConfig& config, const std::filesystem::path& out_dir);

const std::vector<std::string>& command_names();
void run_command(const std::string& name, const RunConfig& config,
                 const std::filesystem::path& out_dir);

/// Machine-readable error record written to standard error by the CLI.
std::string error_json(const Error& error);

}  // namespace cerfgp
