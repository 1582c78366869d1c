#include "cerfgp/config.hpp"

#include "cerfgp/error.hpp"
#include "cerfgp/nngp.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace cerfgp {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& where, const std::string& what) {
  fail(ErrorCode::Config, where.empty() ? what : where + ": " + what);
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) config_error(where, "expected an object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) config_error(where, "unknown key '" + key + "'");
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(where + "." + key, e.what());
  }
}

std::vector<double> positive_list(const json& j, const char* key, const std::string& where,
                                  std::vector<double> fallback) {
  auto v = get<std::vector<double>>(j, key, where, std::move(fallback));
  if (v.empty()) config_error(where + "." + key, "must not be empty");
  for (double x : v) {
    if (!(x > 0.0) || !std::isfinite(x)) config_error(where + "." + key, "values must be positive");
  }
  return v;
}

// Library parse errors surface as config errors with the config location.
template <typename F>
auto translate(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    config_error(where, e.what());
  }
}

DataSource parse_data(const json& j, const std::filesystem::path& base) {
  const std::string where = "data";
  check_keys(j, where, {"path", "outcome", "exposure", "covariates", "categorical"});
  DataSource d;
  d.path = get<std::string>(j, "path", where, "");
  if (d.path.empty()) config_error(where, "path is required");
  if (d.path.is_relative() && !base.empty()) d.path = base / d.path;
  d.schema.outcome = get<std::string>(j, "outcome", where, "y");
  d.schema.exposure = get<std::string>(j, "exposure", where, "w");
  d.schema.covariates = get<std::vector<std::string>>(j, "covariates", where, {});
  d.schema.categorical = get<std::vector<std::string>>(j, "categorical", where, {});
  if (d.schema.covariates.empty()) config_error(where, "covariates must list at least one column");
  return d;
}

ScenarioConfig parse_scenario(const json& j) {
  const std::string where = "scenario";
  check_keys(j, where, {"id", "outcome", "n"});
  ScenarioConfig s;
  s.scenario = get<int>(j, "id", where, 1);
  s.outcome = translate(where, [&] {
    return parse_outcome_kind(get<std::string>(j, "outcome", where, "cubic"));
  });
  s.n = get<Eigen::Index>(j, "n", where, 200);
  translate(where, [&] { s.validate(); });
  return s;
}

void parse_gps(const json& j, GpsSettings& g) {
  const std::string where = "gps";
  check_keys(j, where, {"regressor", "rounds", "depth", "max_depth", "learning_rate", "min_leaf",
                        "subsample", "ridge_penalty", "seed"});
  if (j.contains("depth") && j.contains("max_depth")) {
    config_error(where, "give either depth or max_depth, not both");
  }
  g.regressor = translate(where, [&] {
    return parse_regressor_kind(get<std::string>(j, "regressor", where,
                                                 std::string(to_string(g.regressor))));
  });
  g.boosting.rounds = get<int>(j, "rounds", where, g.boosting.rounds);
  g.boosting.max_depth = get<int>(j, j.contains("depth") ? "depth" : "max_depth", where,
                                  g.boosting.max_depth);
  g.boosting.learning_rate = get<double>(j, "learning_rate", where, g.boosting.learning_rate);
  g.boosting.min_leaf = get<int>(j, "min_leaf", where, g.boosting.min_leaf);
  g.boosting.subsample = get<double>(j, "subsample", where, g.boosting.subsample);
  g.ridge_penalty = get<double>(j, "ridge_penalty", where, g.ridge_penalty);
  if (g.boosting.rounds < 1 || g.boosting.max_depth < 1 || g.boosting.min_leaf < 1) {
    config_error(where, "rounds, max_depth and min_leaf must be at least 1");
  }
  if (!(g.boosting.learning_rate > 0.0 && g.boosting.learning_rate <= 1.0)) {
    config_error(where, "learning_rate must lie in (0, 1]");
  }
  if (!(g.boosting.subsample > 0.0 && g.boosting.subsample <= 1.0)) {
    config_error(where, "subsample must lie in (0, 1]");
  }
  if (!(g.ridge_penalty >= 0.0)) config_error(where, "ridge_penalty must be non-negative");
}

Engine engine_from(const json& j, const char* key, const std::string& where, Engine fallback) {
  if (!j.contains(key)) return fallback;
  const auto text = get<std::string>(j, key, where, "");
  return translate(where + "." + key, [&] { return parse_engine(text); });
}

void parse_tune(const json& j, TuneSettings& t, bool& families_given) {
  const std::string where = "tune";
  check_keys(j, where, {"alphas", "betas", "ratios", "families", "m", "lower_percentile",
                        "upper_percentile", "engine"});
  t.alphas = positive_list(j, "alphas", where, t.alphas);
  t.betas = positive_list(j, "betas", where, t.betas);
  t.ratios = positive_list(j, "ratios", where, t.ratios);
  if (j.contains("families")) {
    families_given = true;
    t.families.clear();
    for (const auto& name : get<std::vector<std::string>>(j, "families", where, {})) {
      t.families.push_back(translate(where + ".families", [&] { return parse_family(name); }));
    }
    if (t.families.empty()) config_error(where + ".families", "must not be empty");
  }
  t.m = get<Eigen::Index>(j, "m", where, t.m);
  t.lower_percentile = get<double>(j, "lower_percentile", where, t.lower_percentile);
  t.upper_percentile = get<double>(j, "upper_percentile", where, t.upper_percentile);
  t.engine = engine_from(j, "engine", where, t.engine);
  if (t.m < 3) config_error(where + ".m", "must be at least 3");
  if (!(t.lower_percentile >= 0.0 && t.lower_percentile < t.upper_percentile &&
        t.upper_percentile <= 100.0)) {
    config_error(where, "percentiles must satisfy 0 <= lower < upper <= 100");
  }
}

Hyperparams parse_hyperparams(const json& j) {
  const std::string where = "hyperparams";
  check_keys(j, where, {"family", "alpha", "beta", "gamma_over_sigma"});
  Hyperparams hp;
  hp.family = translate(where, [&] {
    return parse_family(get<std::string>(j, "family", where, "gaussian"));
  });
  hp.alpha = get<double>(j, "alpha", where, hp.alpha);
  hp.beta = get<double>(j, "beta", where, hp.beta);
  hp.gamma_over_sigma = get<double>(j, "gamma_over_sigma", where, hp.gamma_over_sigma);
  translate(where, [&] { hp.validate(); });
  return hp;
}

GridSpec parse_grid(const json& j) {
  const std::string where = "grid";
  check_keys(j, where, {"m", "lower_percentile", "upper_percentile", "lo", "hi"});
  GridSpec g;
  g.m = get<Eigen::Index>(j, "m", where, g.m);
  g.lower_percentile = get<double>(j, "lower_percentile", where, g.lower_percentile);
  g.upper_percentile = get<double>(j, "upper_percentile", where, g.upper_percentile);
  if (j.contains("lo")) g.lo = get<double>(j, "lo", where, 0.0);
  if (j.contains("hi")) g.hi = get<double>(j, "hi", where, 0.0);
  g.validate();
  return g;
}

ChangePointSettings parse_changepoints(const json& j) {
  const std::string where = "changepoints";
  check_keys(j, where, {"level", "min_side", "chain_rule"});
  ChangePointSettings c;
  c.level = get<double>(j, "level", where, c.level);
  c.min_side = get<Eigen::Index>(j, "min_side", where, c.min_side);
  c.chain_rule = get<bool>(j, "chain_rule", where, c.chain_rule);
  return c;
}

BenchmarkSpec parse_benchmark(const json& j) {
  const std::string where = "benchmark";
  check_keys(j, where, {"cells", "estimators", "nngp_ell", "grid", "max_failure_fraction"});
  BenchmarkSpec b;
  if (!j.contains("cells") || !j.at("cells").is_array()) config_error(where, "cells must be a list");
  for (const auto& c : j.at("cells")) {
    const std::string cw = where + ".cells";
    check_keys(c, cw, {"scenario", "outcome", "n", "replicates"});
    BenchmarkCell cell;
    cell.scenario = get<int>(c, "scenario", cw, cell.scenario);
    cell.outcome = translate(cw, [&] {
      return parse_outcome_kind(get<std::string>(c, "outcome", cw, "cubic"));
    });
    cell.n = get<Eigen::Index>(c, "n", cw, cell.n);
    cell.replicates = get<int>(c, "replicates", cw, cell.replicates);
    b.cells.push_back(cell);
  }
  if (j.contains("estimators")) {
    b.estimators.clear();
    for (const auto& name : get<std::vector<std::string>>(j, "estimators", where, {})) {
      b.estimators.push_back(translate(where, [&] { return parse_estimator(name); }));
    }
  }
  b.nngp_ell = get<Eigen::Index>(j, "nngp_ell", where, b.nngp_ell);
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    check_keys(g, where + ".grid", {"lo", "hi", "m"});
    b.grid_lo = get<double>(g, "lo", where + ".grid", b.grid_lo);
    b.grid_hi = get<double>(g, "hi", where + ".grid", b.grid_hi);
    b.grid_m = get<Eigen::Index>(g, "m", where + ".grid", b.grid_m);
  }
  b.max_failure_fraction = get<double>(j, "max_failure_fraction", where, b.max_failure_fraction);
  translate(where, [&] { b.validate(); });
  return b;
}

}  // namespace

void GridSpec::validate() const {
  if (m < 3) config_error("grid.m", "must be at least 3");
  if (lo.has_value() != hi.has_value()) config_error("grid", "lo and hi must be given together");
  if (lo && !(std::isfinite(*lo) && std::isfinite(*hi) && *lo < *hi)) {
    config_error("grid", "lo must be finite and below hi");
  }
  if (!(lower_percentile >= 0.0 && lower_percentile < upper_percentile && upper_percentile <= 100.0)) {
    config_error("grid", "percentiles must satisfy 0 <= lower < upper <= 100");
  }
}

Eigen::VectorXd GridSpec::build(const Eigen::VectorXd& w) const {
  validate();
  if (lo) return Eigen::VectorXd::LinSpaced(m, *lo, *hi);
  return Eigen::VectorXd::LinSpaced(m, percentile(w, lower_percentile), percentile(w, upper_percentile));
}

void RunConfig::validate() const {
  if (data && scenario) config_error("", "give either data or scenario, not both");
  grid.validate();
  if (!(changepoints.level > 0.0 && changepoints.level < 1.0)) {
    config_error("changepoints.level", "must lie in (0, 1)");
  }
  if (changepoints.min_side < 2) config_error("changepoints.min_side", "must be at least 2");
  if (analysis.engine.kind == EngineKind::NnGp && analysis.engine.ell < 1) {
    config_error("engine", "nngp needs at least one neighbor");
  }
}

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    config_error("config", std::string("invalid JSON: ") + e.what());
  }
  check_keys(j, "config", {"data", "scenario", "gps", "tune", "hyperparams", "engine", "grid",
                           "changepoints", "benchmark", "center_outcomes", "output", "seed",
                           "nngp"});
  RunConfig c;
  c.seed = get<std::uint64_t>(j, "seed", "config", c.seed);
  if (j.contains("data")) c.data = parse_data(j.at("data"), base_dir);
  if (j.contains("scenario")) c.scenario = parse_scenario(j.at("scenario"));
  if (j.contains("gps")) {
    parse_gps(j.at("gps"), c.analysis.gps);
    if (j.at("gps").contains("seed")) c.gps_seed = get<std::uint64_t>(j.at("gps"), "seed", "gps", 0);
  }
  if (j.contains("tune")) parse_tune(j.at("tune"), c.analysis.tune, c.families_given);
  if (j.contains("hyperparams")) c.analysis.fixed = parse_hyperparams(j.at("hyperparams"));
  c.analysis.engine = engine_from(j, "engine", "config", c.analysis.engine);
  c.analysis.options.center_outcomes = get<bool>(j, "center_outcomes", "config", true);
  if (j.contains("grid")) c.grid = parse_grid(j.at("grid"));
  if (j.contains("changepoints")) c.changepoints = parse_changepoints(j.at("changepoints"));
  if (j.contains("benchmark")) c.benchmark = parse_benchmark(j.at("benchmark"));
  if (j.contains("nngp")) {
    check_keys(j.at("nngp"), "nngp", {"ell"});
    const auto ell = get<Eigen::Index>(j.at("nngp"), "ell", "nngp", kDefaultNeighbors);
    if (ell < 1) config_error("nngp.ell", "must be at least 1");
    if (c.analysis.engine.kind == EngineKind::NnGp) c.analysis.engine.ell = ell;
    if (c.analysis.tune.engine.kind == EngineKind::NnGp) c.analysis.tune.engine.ell = ell;
    if (c.benchmark) c.benchmark->nngp_ell = ell;
  }
  if (c.benchmark) c.benchmark->analysis = c.analysis;
  c.output = get<std::string>(j, "output", "config", c.output.string());
  override_seed(c, c.seed);
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Config, "cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

void override_seed(RunConfig& config, std::uint64_t seed) {
  config.seed = seed;
  config.analysis.seed = config.gps_seed.value_or(seed);
  if (config.scenario) config.scenario->seed = seed;
  if (config.benchmark) {
    config.benchmark->base_seed = seed;
    config.benchmark->analysis.seed = seed;
  }
}

}  // namespace cerfgp
