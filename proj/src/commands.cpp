#include "cerfgp/commands.hpp"

#include "cerfgp/benchmark.hpp"
#include "cerfgp/csv.hpp"
#include "cerfgp/simulation.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace cerfgp {

using nlohmann::ordered_json;

namespace {

constexpr int kDigits = 10;

std::string num(double v) { return csv::format_number(v, kDigits); }

// JSON numbers carry the same 10 significant digits as the CSV files.
ordered_json jnum(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::stod(num(v));
}

// Full round-trip precision so a run can be repeated without re-tuning.
ordered_json hp_json(const Hyperparams& hp) {
  return {{"family", std::string(to_string(hp.family))},
          {"alpha", hp.alpha},
          {"beta", hp.beta},
          {"gamma_over_sigma", hp.gamma_over_sigma}};
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

void write_json(const std::filesystem::path& path, const ordered_json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void prepare(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create output directory " + dir.string() + ": " + ec.message());
}

void require_source(const RunConfig& config) {
  if (!config.data && !config.scenario) {
    fail(ErrorCode::Config, "config needs a data source or a scenario");
  }
}

ordered_json source_json(const RunConfig& config) {
  if (config.data) {
    return {{"data", config.data->path.string()},
            {"outcome", config.data->schema.outcome},
            {"exposure", config.data->schema.exposure}};
  }
  return {{"scenario", config.scenario->scenario},
          {"outcome", std::string(to_string(config.scenario->outcome))},
          {"n", config.scenario->n}};
}

ordered_json tuning_json(const DesignResult& design) {
  ordered_json j;
  j["tuned"] = design.tuning.has_value();
  if (design.tuning) {
    j["rho"] = jnum(design.tuning->best_rho);
    int failed = 0;
    for (const auto& row : design.tuning->table) failed += row.ok ? 0 : 1;
    j["candidates"] = design.tuning->table.size();
    j["failed_candidates"] = failed;
    j["ties"] = design.tuning->ties.size();
  }
  return j;
}

AnalysisSettings changepoint_settings(const RunConfig& config) {
  AnalysisSettings settings = config.analysis;
  if (settings.fixed && !is_differentiable(settings.fixed->family)) {
    fail(ErrorCode::NonDifferentiableKernel,
         "change-point detection needs a differentiable kernel; matern12 was fixed in the config");
  }
  if (config.families_given) {
    for (auto f : settings.tune.families) {
      if (!is_differentiable(f)) {
        fail(ErrorCode::NonDifferentiableKernel,
             "change-point detection needs differentiable kernels; remove matern12 from tune.families");
      }
    }
  } else {
    settings.tune.families = differentiable_families();
  }
  return settings;
}

}  // namespace

Dataset load_input(const RunConfig& config) {
  require_source(config);
  if (config.data) return load_dataset(config.data->path, config.data->schema);
  return gen_dataset(*config.scenario);
}

EstimateOutput run_estimate(const RunConfig& config) {
  const Dataset data = load_input(config);
  DesignResult design = run_design(data, config.analysis);
  const Eigen::VectorXd grid = config.grid.build(data.w());
  CerfResult result = estimate_cerf(data, design.surface, design.hp, config.analysis.engine, grid,
                                    config.analysis.options, true);
  BalanceReport balance = covariate_balance(result.weights, data.design(), grid);
  return {data.size(), data.covariate_names(), std::move(design), std::move(result), std::move(balance)};
}

ChangePointOutput run_changepoints(const RunConfig& config) {
  const AnalysisSettings settings = changepoint_settings(config);
  const Dataset data = load_input(config);
  DesignResult design = run_design(data, settings);
  const double sigma2 = estimate_sigma2(data, design.surface, design.hp, settings.engine, settings.options);
  const FitContext ctx{data,           design.surface,   design.hp,
                       sigma2,         settings.engine,  settings.options,
                       config.changepoints.chain_rule, config.changepoints.min_side};
  ChangePointReport report = detect_change_points(ctx, config.grid.build(data.w()), config.changepoints.level);
  return {std::move(design), sigma2, std::move(report)};
}

void cmd_simulate(const RunConfig& config, const std::filesystem::path& out_dir) {
  if (!config.scenario) fail(ErrorCode::Config, "simulate needs a scenario section");
  prepare(out_dir);
  save_dataset(gen_dataset(*config.scenario), out_dir / "data.csv");
}

void cmd_tune(const RunConfig& config, const std::filesystem::path& out_dir) {
  if (config.analysis.fixed) fail(ErrorCode::Config, "tune cannot run with fixed hyperparams");
  const Dataset data = load_input(config);
  const DesignResult design = run_design(data, config.analysis);
  prepare(out_dir);
  {
    auto out = open_out(out_dir / "tuning.csv");
    csv::write_row(out, {"family", "alpha", "beta", "gamma_over_sigma", "rho", "ok", "error"});
    for (const auto& row : design.tuning->table) {
      csv::write_row(out, {std::string(to_string(row.hp.family)), num(row.hp.alpha), num(row.hp.beta),
                           num(row.hp.gamma_over_sigma), row.ok ? num(row.rho) : "",
                           row.ok ? "1" : "0", row.error});
    }
  }
  ordered_json j;
  j["version"] = std::string(kVersion);
  j["seed"] = config.seed;
  j["source"] = source_json(config);
  j["gps_model"] = std::string(to_string(design.gps_kind));
  j["engine"] = to_string(config.analysis.tune.engine);
  j["hyperparams"] = hp_json(design.hp);
  j["tuning"] = tuning_json(design);
  write_json(out_dir / "tuning.json", j);
}

void cmd_estimate(const RunConfig& config, const std::filesystem::path& out_dir) {
  const EstimateOutput est = run_estimate(config);
  prepare(out_dir);
  const auto& cerf = est.result.cerf;
  {
    auto out = open_out(out_dir / "cerf.csv");
    csv::write_row(out, {"w", "r_hat", "sd_r"});
    for (Eigen::Index m = 0; m < cerf.w_grid.size(); ++m) {
      csv::write_row(out, {num(cerf.w_grid[m]), num(cerf.r_hat[m]), num(cerf.sd_r[m])});
    }
  }
  {
    auto out = open_out(out_dir / "balance.csv");
    csv::write_row(out, {"w", "covariate", "rho"});
    const auto& names = est.covariates;
    for (Eigen::Index m = 0; m < est.balance.w_grid.size(); ++m) {
      for (Eigen::Index r = 0; r < est.balance.rho_rw.cols(); ++r) {
        csv::write_row(out, {num(est.balance.w_grid[m]), names[static_cast<std::size_t>(r)],
                             num(est.balance.rho_rw(m, r))});
      }
    }
  }
  ordered_json j;
  j["version"] = std::string(kVersion);
  j["seed"] = config.seed;
  j["source"] = source_json(config);
  j["n"] = est.size;
  j["gps_model"] = std::string(to_string(est.design.gps_kind));
  j["engine"] = to_string(config.analysis.engine);
  j["tune_engine"] = to_string(config.analysis.tune.engine);
  j["hyperparams"] = hp_json(est.design.hp);
  j["tuning"] = tuning_json(est.design);
  j["sigma2"] = jnum(est.result.sigma2);
  j["jitter"] = jnum(est.result.jitter);
  j["truncation_threshold"] = jnum(kDefaultTruncation);
  j["center_outcomes"] = config.analysis.options.center_outcomes;
  j["grid_points"] = cerf.w_grid.size();
  j["balance_rho"] = jnum(est.balance.rho_overall);
  write_json(out_dir / "meta.json", j);
}

void cmd_changepoints(const RunConfig& config, const std::filesystem::path& out_dir) {
  const ChangePointOutput cp = run_changepoints(config);
  prepare(out_dir);
  const auto& rep = cp.report;
  {
    auto out = open_out(out_dir / "delta.csv");
    csv::write_row(out, {"w", "delta_mean", "delta_sd", "flagged", "usable"});
    for (Eigen::Index m = 0; m < rep.grid.size(); ++m) {
      const auto k = static_cast<std::size_t>(m);
      csv::write_row(out, {num(rep.grid[m]), rep.usable[k] ? num(rep.delta_mean[m]) : "",
                           rep.usable[k] ? num(rep.delta_sd[m]) : "", rep.in_interval[k] ? "1" : "0",
                           rep.usable[k] ? "1" : "0"});
    }
  }
  ordered_json points = ordered_json::array();
  for (const auto& p : rep.points) {
    ordered_json jp;
    jp["w"] = jnum(p.w);
    jp["sign"] = p.sign;
    jp["delta_mean"] = jnum(p.delta_mean);
    for (const auto& [lo, hi] : rep.intervals) {
      if (p.grid_index >= lo && p.grid_index <= hi) {
        jp["interval"] = {jnum(rep.grid[lo]), jnum(rep.grid[hi])};
      }
    }
    points.push_back(jp);
  }
  ordered_json j;
  j["version"] = std::string(kVersion);
  j["seed"] = config.seed;
  j["source"] = source_json(config);
  j["engine"] = to_string(config.analysis.engine);
  j["hyperparams"] = hp_json(cp.design.hp);
  j["tuning"] = tuning_json(cp.design);
  j["sigma2"] = jnum(cp.sigma2);
  j["level"] = jnum(rep.level);
  j["chain_rule"] = config.changepoints.chain_rule;
  j["points"] = points;
  write_json(out_dir / "changepoints.json", j);
}

void cmd_benchmark(const RunConfig& config, const std::filesystem::path& out_dir) {
  if (!config.benchmark) fail(ErrorCode::Config, "benchmark needs a benchmark section");
  const BenchmarkResult res = run_benchmark(*config.benchmark);
  prepare(out_dir);
  auto out = open_out(out_dir / "benchmark.csv");
  csv::write_row(out, {"scenario", "outcome", "n", "estimator", "abs_bias", "mse", "rmse",
                       "replicates", "failures"});
  for (const auto& row : res.rows) {
    csv::write_row(out, {std::to_string(row.cell.scenario), std::string(to_string(row.cell.outcome)),
                         std::to_string(row.cell.n), std::string(to_string(row.estimator)),
                         num(row.metrics.abs_bias), num(row.metrics.mse), num(row.metrics.rmse),
                         std::to_string(row.used), std::to_string(row.failures)});
  }
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate", "tune", "estimate", "changepoints",
                                              "benchmark"};
  return names;
}

void run_command(const std::string& name, const RunConfig& config,
                 const std::filesystem::path& out_dir) {
  if (name == "simulate") return cmd_simulate(config, out_dir);
  if (name == "tune") return cmd_tune(config, out_dir);
  if (name == "estimate") return cmd_estimate(config, out_dir);
  if (name == "changepoints") return cmd_changepoints(config, out_dir);
  if (name == "benchmark") return cmd_benchmark(config, out_dir);
  fail(ErrorCode::Config, "unknown command '" + name + "'");
}

std::string error_json(const Error& error) {
  const char* category = "numerical";
  switch (error.category()) {
    case ErrorCategory::Config: category = "config"; break;
    case ErrorCategory::Data: category = "data"; break;
    case ErrorCategory::Numerical: category = "numerical"; break;
  }
  ordered_json j;
  j["error"] = {{"code", std::string(to_string(error.code()))},
                {"category", category},
                {"message", error.what()},
                {"exit_code", exit_code_for(error.code())}};
  return j.dump();
}

}  // namespace cerfgp
