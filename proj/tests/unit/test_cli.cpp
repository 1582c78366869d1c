#include "cerfgp/commands.hpp"
#include "cerfgp/config.hpp"
#include "cerfgp/csv.hpp"
#include "cerfgp/error.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace cerfgp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cerfgp_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Small and quick: ridge GPS, a 2x2x2 lattice, a short grid.
const char* kScenarioConfig = R"({
  "scenario": {"id": 1, "outcome": "cubic", "n": 120},
  "gps": {"regressor": "ridge-linear"},
  "tune": {"alphas": [0.32, 1], "betas": [0.32, 1], "ratios": [1, 3.2],
           "families": ["matern32"], "m": 8},
  "grid": {"m": 12},
  "seed": 5
})";

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::Input;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CERFGP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, ValidationErrors) {
  EXPECT_EQ(code_of([] { parse_config(R"({"scenario": {"id": 1}, "changepoints": {"level": 1.5}})"); }),
            ErrorCode::Config);
  EXPECT_EQ(code_of([] {
              parse_config(R"({"scenario": {"id": 1}, "data": {"path": "x.csv", "outcome": "y",
                              "exposure": "w", "covariates": ["c"]}})");
            }),
            ErrorCode::Config);
  EXPECT_EQ(code_of([] { parse_config(R"({"scenario": {"id": 1}, "grid": {"m": 2}})"); }), ErrorCode::Config);
  EXPECT_EQ(code_of([] { parse_config(R"({"scenario": {"id": 1}, "colour": 3})"); }), ErrorCode::Config);
  EXPECT_EQ(code_of([] { parse_config(R"({"scenario": {"id": 9}})"); }), ErrorCode::Config);
  EXPECT_EQ(code_of([] { parse_config("{not json"); }), ErrorCode::Config);
  EXPECT_EQ(code_of([] { parse_config(R"({"scenario": {"id": 1}, "tune": {"families": ["cosine"]}})"); }),
            ErrorCode::Config);
}

TEST(Config, ParsesKeys) {
  const auto c = parse_config(R"({
    "scenario": {"id": 2, "outcome": "piecewise", "n": 300},
    "gps": {"depth": 4, "rounds": 50, "seed": 77},
    "engine": "nngp", "nngp": {"ell": 40},
    "changepoints": {"level": 0.9, "min_side": 12, "chain_rule": false},
    "seed": 3
  })");
  ASSERT_TRUE(c.scenario.has_value());
  EXPECT_EQ(c.scenario->scenario, 2);
  EXPECT_EQ(c.scenario->outcome, OutcomeKind::Piecewise);
  EXPECT_EQ(c.scenario->seed, 3u);
  EXPECT_EQ(c.analysis.seed, 77u);
  EXPECT_EQ(c.analysis.gps.boosting.max_depth, 4);
  EXPECT_EQ(c.analysis.engine.kind, EngineKind::NnGp);
  EXPECT_EQ(c.analysis.engine.ell, 40);
  EXPECT_EQ(c.changepoints.level, 0.9);
  EXPECT_FALSE(c.changepoints.chain_rule);

  RunConfig o = c;
  override_seed(o, 11);
  EXPECT_EQ(o.scenario->seed, 11u);
  EXPECT_EQ(o.analysis.seed, 77u);
}

TEST(Estimate, WritesThreeFilesWithMRows) {
  const auto dir = scratch("estimate");
  const auto c = parse_config(kScenarioConfig);
  cmd_estimate(c, dir);
  ASSERT_TRUE(fs::exists(dir / "cerf.csv"));
  ASSERT_TRUE(fs::exists(dir / "balance.csv"));
  ASSERT_TRUE(fs::exists(dir / "meta.json"));
  const auto cerf = csv::read(dir / "cerf.csv");
  EXPECT_EQ(cerf.header, (std::vector<std::string>{"w", "r_hat", "sd_r"}));
  EXPECT_EQ(cerf.rows.size(), 12u);
  const auto bal = csv::read(dir / "balance.csv");
  EXPECT_EQ(bal.rows.size(), 12u * 6u);
  const auto meta = nlohmann::json::parse(slurp(dir / "meta.json"));
  EXPECT_TRUE(meta.contains("hyperparams"));
  EXPECT_TRUE(meta.contains("truncation_threshold"));
  EXPECT_TRUE(meta.contains("sigma2"));
  EXPECT_EQ(meta.at("seed"), 5);

  const auto again = scratch("estimate_again");
  cmd_estimate(c, again);
  for (const char* f : {"cerf.csv", "balance.csv", "meta.json"}) {
    EXPECT_EQ(slurp(dir / f), slurp(again / f)) << f;
  }
}

TEST(Estimate, CsvInputMatchesInProcess) {
  const auto dir = scratch("csv_input");
  const auto sim = parse_config(kScenarioConfig);
  cmd_simulate(sim, dir);
  ASSERT_TRUE(fs::exists(dir / "data.csv"));
  std::ofstream(dir / "config.json") << R"({
    "data": {"path": "data.csv", "outcome": "y", "exposure": "w",
             "covariates": ["c1", "c2", "c3", "c4", "c5", "c6"]},
    "gps": {"regressor": "ridge-linear"},
    "tune": {"alphas": [0.32, 1], "betas": [0.32, 1], "ratios": [1, 3.2],
             "families": ["matern32"], "m": 8},
    "grid": {"m": 12},
    "seed": 5
  })";
  const auto from_csv = run_estimate(load_config(dir / "config.json"));
  const auto in_process = run_estimate(sim);
  EXPECT_EQ(from_csv.design.hp.alpha, in_process.design.hp.alpha);
  EXPECT_EQ(from_csv.design.hp.beta, in_process.design.hp.beta);
  const auto& a = from_csv.result.cerf.r_hat;
  const auto& b = in_process.result.cerf.r_hat;
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10);

  // Same data loaded twice gives the same answer exactly.
  const auto twice = run_estimate(load_config(dir / "config.json"));
  EXPECT_TRUE(twice.result.cerf.r_hat == a);
}

TEST(Changepoints, Matern12IsAConfigError) {
  const auto c = parse_config(R"({
    "scenario": {"id": 1, "outcome": "piecewise", "n": 100},
    "hyperparams": {"family": "matern12", "alpha": 1, "beta": 1, "gamma_over_sigma": 1}
  })");
  EXPECT_EQ(code_of([&] { run_changepoints(c); }), ErrorCode::NonDifferentiableKernel);
  EXPECT_EQ(exit_code_for(ErrorCode::NonDifferentiableKernel), 2);
}

TEST(Changepoints, WritesDeltaCurveAndPoints) {
  const auto dir = scratch("changepoints");
  const auto c = parse_config(R"({
    "scenario": {"id": 1, "outcome": "piecewise", "n": 150},
    "gps": {"regressor": "ridge-linear"},
    "hyperparams": {"family": "matern32", "alpha": 1, "beta": 0.1, "gamma_over_sigma": 1},
    "grid": {"m": 15}
  })");
  cmd_changepoints(c, dir);
  const auto delta = csv::read(dir / "delta.csv");
  EXPECT_EQ(delta.rows.size(), 15u);
  EXPECT_EQ(delta.header[0], "w");
  const auto j = nlohmann::json::parse(slurp(dir / "changepoints.json"));
  ASSERT_TRUE(j.contains("points"));
  for (const auto& p : j.at("points")) {
    EXPECT_TRUE(p.at("sign") == 1 || p.at("sign") == -1);
    EXPECT_LE(p.at("interval")[0].get<double>(), p.at("w").get<double>());
    EXPECT_GE(p.at("interval")[1].get<double>(), p.at("w").get<double>());
  }
}

TEST(BenchmarkCommand, OracleRow) {
  const auto dir = scratch("benchmark");
  const auto c = parse_config(R"({
    "benchmark": {"cells": [{"scenario": 1, "outcome": "cubic", "n": 60, "replicates": 2}],
                  "estimators": ["oracle"], "grid": {"lo": 0, "hi": 20, "m": 3}},
    "gps": {"regressor": "ridge-linear"},
    "hyperparams": {"family": "matern32", "alpha": 1, "beta": 1, "gamma_over_sigma": 1}
  })");
  cmd_benchmark(c, dir);
  const auto t = csv::read(dir / "benchmark.csv");
  ASSERT_EQ(t.rows.size(), 1u);
  const auto col = [&](const std::string& name) {
    return std::find(t.header.begin(), t.header.end(), name) - t.header.begin();
  };
  EXPECT_EQ(std::stod(t.rows[0][static_cast<std::size_t>(col("abs_bias"))]), 0.0);
  EXPECT_EQ(std::stod(t.rows[0][static_cast<std::size_t>(col("mse"))]), 0.0);
  EXPECT_EQ(t.rows[0][static_cast<std::size_t>(col("estimator"))], "oracle");
}

TEST(ErrorJson, Shape) {
  const auto j = nlohmann::json::parse(error_json(Error(ErrorCode::Schema, "missing column \"y\"")));
  EXPECT_EQ(j.at("error").at("exit_code"), 3);
  EXPECT_EQ(j.at("error").at("message"), "missing column \"y\"");
  EXPECT_EQ(exit_code_for(ErrorCode::Config), 2);
  EXPECT_EQ(exit_code_for(ErrorCode::IllConditioned), 4);
}

TEST(Binary, ExitCodes) {
  const auto dir = scratch("binary");
  std::ofstream(dir / "bad_level.json") << R"({"scenario": {"id": 1}, "changepoints": {"level": 1.5}})";
  EXPECT_EQ(run_cli("estimate --config " + (dir / "bad_level.json").string()), 2);
  std::ofstream(dir / "missing.json") << R"({"data": {"path": "nope.csv", "outcome": "y",
    "exposure": "w", "covariates": ["c"]}})";
  EXPECT_EQ(run_cli("estimate --config " + (dir / "missing.json").string()), 3);
  EXPECT_EQ(run_cli("estimate"), 2);
  std::ofstream(dir / "ok.json") << kScenarioConfig;
  EXPECT_EQ(run_cli("estimate --config " + (dir / "ok.json").string() + " --out " + (dir / "o").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "o" / "cerf.csv"));
}
