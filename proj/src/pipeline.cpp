#include "cerfgp/pipeline.hpp"

#include "cerfgp/error.hpp"
#include "cerfgp/nngp.hpp"
#include "cerfgp/parallel.hpp"

namespace cerfgp {

TuneGrid TuneSettings::grid_for(const Eigen::VectorXd& w) const {
  if (m < 3) fail(ErrorCode::Config, "tuning grid needs at least 3 points");
  if (!(lower_percentile >= 0.0 && lower_percentile < upper_percentile && upper_percentile <= 100.0)) {
    fail(ErrorCode::Config, "grid percentiles must satisfy 0 <= lower < upper <= 100");
  }
  TuneGrid grid{alphas, betas, ratios, families, {}, engine};
  grid.w_grid = Eigen::VectorXd::LinSpaced(m, percentile(w, lower_percentile),
                                           percentile(w, upper_percentile));
  return grid;
}

DesignResult run_design(const Dataset& data, const AnalysisSettings& settings) {
  const GpsModel model = fit_gps(data, settings.gps, settings.seed);
  DesignResult out{make_surface(model, data), model.kind(), std::nullopt, {}};
  if (settings.fixed) {
    settings.fixed->validate();
    out.hp = *settings.fixed;
  } else {
    out.tuning = tune(data.design(), out.surface, settings.tune.grid_for(data.w()));
    out.hp = out.tuning->best;
  }
  return out;
}

double estimate_sigma2(const Dataset& data, const GpsSurface& surface, const Hyperparams& hp,
                       const Engine& engine, const GpOptions& options) {
  if (engine.kind == EngineKind::NnGp) return nngp_loo_sigma2(data, surface, hp, engine.ell, options);
  GpFit fit = fit_gp(data, surface, hp, options);
  return loo_sigma2(fit);
}

CerfResult estimate_cerf(const Dataset& data, const GpsSurface& surface, const Hyperparams& hp,
                         const Engine& engine, const Eigen::VectorXd& w_grid,
                         const GpOptions& options, bool with_weights) {
  CerfResult out;
  if (engine.kind == EngineKind::NnGp) {
    out.sigma2 = nngp_loo_sigma2(data, surface, hp, engine.ell, options);
    auto res = nngp_cerf(data, surface, hp, engine.ell, w_grid, out.sigma2, options, with_weights);
    out.cerf = std::move(res.cerf);
    out.weights = std::move(res.weights);
    out.jitter = res.max_jitter;
    return out;
  }
  GpFit fit = fit_gp(data, surface, hp, options);
  out.sigma2 = loo_sigma2(fit);
  out.cerf = cerf_estimate(fit, w_grid);
  out.jitter = fit.system().jitter();
  if (with_weights) out.weights = pointwise_weights(fit.system(), w_grid);
  return out;
}

Eigen::VectorXd cerf_mean(const Dataset& data, const GpsSurface& surface, const Hyperparams& hp,
                          const Engine& engine, const Eigen::VectorXd& w_grid,
                          const GpOptions& options) {
  if (engine.kind == EngineKind::NnGp) {
    return nngp_cerf(data, surface, hp, engine.ell, w_grid, 0.0, options, false).cerf.r_hat;
  }
  const GpFit fit = fit_gp(data, surface, hp, options);
  const auto& sys = fit.system();
  Eigen::VectorXd out(w_grid.size());
  parallel_for(static_cast<std::size_t>(w_grid.size()), [&](std::size_t mi) {
    const auto m = static_cast<Eigen::Index>(mi);
    const Eigen::VectorXd u = sys.cross_kernel(w_grid[m]).rowwise().sum();
    out[m] = fit.y_offset() + sys.ratio2() * u.dot(fit.coefficients()) / static_cast<double>(fit.size());
  });
  return out;
}

}  // namespace cerfgp
