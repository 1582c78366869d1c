#include "cerfgp/benchmark.hpp"

#include "cerfgp/error.hpp"
#include "cerfgp/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace cerfgp {

std::string_view to_string(Estimator estimator) {
  switch (estimator) {
    case Estimator::Oracle: return "oracle";
    case Estimator::GpFull: return "gp-full";
    case Estimator::NnGp: return "nngp";
    case Estimator::Iptw: return "iptw";
    case Estimator::Adjustment: return "adjustment";
  }
  return "gp-full";
}

Estimator parse_estimator(std::string_view name) {
  for (auto e : {Estimator::Oracle, Estimator::GpFull, Estimator::NnGp, Estimator::Iptw,
                 Estimator::Adjustment}) {
    if (name == to_string(e)) return e;
  }
  fail(ErrorCode::Config, "unknown estimator '" + std::string(name) +
                              "' (expected oracle, gp-full, nngp, iptw or adjustment)");
}

void BenchmarkSpec::validate() const {
  if (cells.empty()) fail(ErrorCode::Config, "benchmark has no cells");
  if (estimators.empty()) fail(ErrorCode::Config, "benchmark has no estimators");
  for (const auto& c : cells) {
    ScenarioConfig{c.scenario, c.outcome, c.n, 0}.validate();
    if (c.replicates < 1) fail(ErrorCode::Config, "replicates must be at least 1");
  }
  if (grid_m < 1 || !(grid_hi >= grid_lo)) fail(ErrorCode::Config, "invalid evaluation grid");
  if (nngp_ell < 1) fail(ErrorCode::Config, "nngp neighbor count must be at least 1");
  if (!(max_failure_fraction >= 0.0 && max_failure_fraction <= 1.0)) {
    fail(ErrorCode::Config, "max_failure_fraction must lie in [0, 1]");
  }
}

namespace {

bool needs_design(const std::vector<Estimator>& estimators) {
  return std::any_of(estimators.begin(), estimators.end(), [](Estimator e) {
    return e == Estimator::GpFull || e == Estimator::NnGp;
  });
}

struct ReplicateCurves {
  ReplicateRecord record;
  std::vector<std::optional<Eigen::VectorXd>> curves;
};

ReplicateCurves run_replicate(const BenchmarkSpec& spec, const BenchmarkCell& cell, int index,
                              const Eigen::VectorXd& grid) {
  ReplicateCurves out;
  out.record.index = index;
  out.record.seed = spec.base_seed + static_cast<std::uint64_t>(index);
  out.curves.resize(spec.estimators.size());

  const Dataset data = gen_dataset({cell.scenario, cell.outcome, cell.n, out.record.seed});
  AnalysisSettings settings = spec.analysis;
  settings.seed = out.record.seed;

  std::optional<GpsSurface> surface;
  std::optional<Hyperparams> hp;
  try {
    const GpsModel model = fit_gps(data, settings.gps, settings.seed);
    surface.emplace(make_surface(model, data));
    if (needs_design(spec.estimators)) {
      if (settings.fixed) {
        hp = *settings.fixed;
      } else {
        const auto tuned = tune(data.design(), *surface, settings.tune.grid_for(data.w()));
        hp = tuned.best;
        out.record.tuned = true;
        out.record.rho = tuned.best_rho;
      }
      out.record.hp = *hp;
    }
  } catch (const Error& e) {
    out.record.error = e.what();
  }

  for (std::size_t k = 0; k < spec.estimators.size(); ++k) {
    const auto est = spec.estimators[k];
    if (est == Estimator::Oracle) {
      out.curves[k] = true_cerf(grid, cell.outcome);
      continue;
    }
    if (!surface) continue;
    try {
      switch (est) {
        case Estimator::GpFull:
          if (hp) out.curves[k] = cerf_mean(data, *surface, *hp, Engine::full(), grid, settings.options);
          break;
        case Estimator::NnGp:
          if (hp) {
            out.curves[k] = cerf_mean(data, *surface, *hp, Engine::nngp(spec.nngp_ell), grid,
                                      settings.options);
          }
          break;
        case Estimator::Iptw: out.curves[k] = baseline_iptw(data, *surface, grid).r_hat; break;
        case Estimator::Adjustment: out.curves[k] = baseline_adjustment(data, *surface, grid).r_hat; break;
        case Estimator::Oracle: break;
      }
      if (out.curves[k] && !out.curves[k]->allFinite()) out.curves[k].reset();
    } catch (const Error&) {
      out.curves[k].reset();
    }
  }
  return out;
}

}  // namespace

BenchmarkResult run_benchmark(const BenchmarkSpec& spec) {
  spec.validate();
  BenchmarkResult result;
  result.grid = Eigen::VectorXd::LinSpaced(spec.grid_m, spec.grid_lo, spec.grid_hi);

  for (const auto& cell : spec.cells) {
    std::vector<ReplicateCurves> reps(static_cast<std::size_t>(cell.replicates));
    parallel_for(reps.size(), [&](std::size_t s) {
      reps[s] = run_replicate(spec, cell, static_cast<int>(s), result.grid);
    });

    std::vector<ReplicateRecord> records;
    for (const auto& r : reps) records.push_back(r.record);
    result.replicates.push_back(std::move(records));

    const Eigen::VectorXd truth = true_cerf(result.grid, cell.outcome);
    for (std::size_t k = 0; k < spec.estimators.size(); ++k) {
      BenchmarkRow row;
      row.cell = cell;
      row.estimator = spec.estimators[k];
      std::vector<const Eigen::VectorXd*> ok;
      for (const auto& r : reps) {
        if (r.curves[k]) ok.push_back(&*r.curves[k]);
      }
      row.used = static_cast<int>(ok.size());
      row.failures = cell.replicates - row.used;
      if (row.failures > spec.max_failure_fraction * cell.replicates || ok.empty()) {
        std::ostringstream msg;
        msg << to_string(row.estimator) << " failed in " << row.failures << " of "
            << cell.replicates << " replicates (scenario " << cell.scenario << ", n = " << cell.n << ")";
        fail(ErrorCode::Benchmark, msg.str());
      }
      row.curves.resize(row.used, result.grid.size());
      for (int s = 0; s < row.used; ++s) row.curves.row(s) = ok[static_cast<std::size_t>(s)]->transpose();
      row.metrics = curve_metrics(row.curves, truth);
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

ChangePointStudy run_changepoint_study(const ChangePointStudySpec& spec) {
  ScenarioConfig{spec.cell.scenario, spec.cell.outcome, spec.cell.n, 0}.validate();
  if (spec.cell.replicates < 1) fail(ErrorCode::Config, "replicates must be at least 1");
  if (spec.true_points.size() != spec.true_jumps.size()) {
    fail(ErrorCode::Config, "true change points and jumps differ in length");
  }
  ChangePointStudy study;
  study.replicates.resize(static_cast<std::size_t>(spec.cell.replicates));
  parallel_for(study.replicates.size(), [&](std::size_t s) {
    auto& rep = study.replicates[s];
    rep.seed = spec.base_seed + s;
    try {
      const Dataset data = gen_dataset({spec.cell.scenario, spec.cell.outcome, spec.cell.n, rep.seed});
      AnalysisSettings settings = spec.analysis;
      settings.seed = rep.seed;
      const DesignResult design = run_design(data, settings);
      rep.hp = design.hp;
      if (design.tuning) rep.rho = design.tuning->best_rho;
      FitContext ctx{data, design.surface, design.hp, 1.0, settings.engine, settings.options, true,
                     spec.min_side};
      ctx.sigma2 = estimate_sigma2(data, design.surface, design.hp, settings.engine, settings.options);
      const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(
          spec.grid_m, percentile(data.w(), spec.lower_percentile),
          percentile(data.w(), spec.upper_percentile));
      rep.points = detect_change_points(ctx, grid, spec.level).points;
    } catch (const Error& e) {
      rep.error = e.what();
    }
  });

  int used = 0, detected = 0, zero = 0, agree = 0;
  double dist = 0.0;
  for (const auto& rep : study.replicates) {
    if (!rep.error.empty()) {
      ++study.failures;
      continue;
    }
    ++used;
    if (rep.points.empty()) ++zero;
    for (const auto& p : rep.points) {
      ++detected;
      std::size_t nearest = 0;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < spec.true_points.size(); ++k) {
        const double d = std::abs(p.w - spec.true_points[k]);
        if (d < best) {
          best = d;
          nearest = k;
        }
      }
      if (!spec.true_points.empty()) {
        dist += best;
        if ((spec.true_jumps[nearest] > 0.0) == (p.sign > 0)) ++agree;
      }
    }
  }
  if (used == 0) fail(ErrorCode::Benchmark, "every change-point replicate failed");
  study.mean_count = static_cast<double>(detected) / used;
  study.mean_distance = detected > 0 ? dist / detected : 0.0;
  study.sign_agreement = detected > 0 ? static_cast<double>(agree) / detected : 1.0;
  study.zero_fraction = static_cast<double>(zero) / used;
  return study;
}

}  // namespace cerfgp
