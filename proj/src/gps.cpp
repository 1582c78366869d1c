#include "cerfgp/gps.hpp"

#include "cerfgp/error.hpp"
#include "cerfgp/log.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace cerfgp {

std::string_view to_string(RegressorKind kind) {
  return kind == RegressorKind::BoostedTrees ? "boosted-trees" : "ridge-linear";
}

RegressorKind parse_regressor_kind(std::string_view name) {
  if (name == "boosted-trees") return RegressorKind::BoostedTrees;
  if (name == "ridge-linear") return RegressorKind::RidgeLinear;
  fail(ErrorCode::Config, "unknown gps.regressor '" + std::string(name) + "'");
}

GpsModel::GpsModel(std::shared_ptr<const MeanRegressor> mean, double residual_variance,
                   RegressorKind kind)
    : mean_(std::move(mean)), variance_(residual_variance), kind_(kind) {
  if (!mean_) fail(ErrorCode::Input, "GPS model needs a mean regressor");
  if (!(residual_variance >= 1e-12) || !std::isfinite(residual_variance)) {
    fail(ErrorCode::DegenerateGps,
         "GPS residual variance is degenerate; the exposure is (almost) perfectly "
         "predicted by the covariates, so overlap fails");
  }
}

GpsModel fit_gps(const Dataset& data, const GpsSettings& settings, std::uint64_t seed) {
  auto kind = settings.regressor;
  if (kind == RegressorKind::BoostedTrees && data.size() < 10) {
    warn("fit_gps: N < 10, falling back to ridge-linear regressor");
    kind = RegressorKind::RidgeLinear;
  }
  std::shared_ptr<const MeanRegressor> mean;
  if (kind == RegressorKind::BoostedTrees) {
    mean = std::make_shared<BoostedTrees>(
        BoostedTrees::fit(data.c(), data.w(), settings.boosting, seed));
  } else {
    mean = std::make_shared<RidgeLinear>(
        RidgeLinear::fit(data.c(), data.w(), settings.ridge_penalty));
  }
  const Eigen::VectorXd fitted = mean->predict_all(data.c());
  const double variance =
      (data.w() - fitted).squaredNorm() / static_cast<double>(data.size() - 1);
  return GpsModel(std::move(mean), variance, kind);
}

double normal_density(double w, double mean, double variance) {
  const double d = w - mean;
  const double dens = std::exp(-0.5 * d * d / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
  // Far tails underflow; keep the density strictly positive.
  return std::max(dens, std::numeric_limits<double>::min());
}

double eval_gps(const GpsModel& model, double w, const Eigen::Ref<const Eigen::VectorXd>& c) {
  if (!std::isfinite(w) || !c.allFinite()) fail(ErrorCode::Input, "eval_gps: non-finite input");
  return normal_density(w, model.mean(c), model.residual_variance());
}

GpsSurface::GpsSurface(Eigen::VectorXd unit_means, double variance, const Eigen::VectorXd& w_obs)
    : means_(std::move(unit_means)), variance_(variance), s_obs_(means_.size()) {
  if (w_obs.size() != means_.size()) fail(ErrorCode::Input, "GPS surface size mismatch");
  if (!(variance_ > 0.0)) fail(ErrorCode::DegenerateGps, "GPS variance must be positive");
  for (Eigen::Index i = 0; i < means_.size(); ++i) {
    s_obs_[i] = normal_density(w_obs[i], means_[i], variance_);
  }
}

double GpsSurface::at(double w, Eigen::Index unit) const {
  if (unit < 0 || unit >= size()) fail(ErrorCode::Index, "GPS surface unit out of range");
  return normal_density(w, means_[unit], variance_);
}

double GpsSurface::slope(double w, Eigen::Index unit) const {
  return -((w - means_[unit]) / variance_) * at(w, unit);
}

GpsSurface make_surface(const GpsModel& model, const Dataset& data) {
  return GpsSurface(model.regressor().predict_all(data.c()), model.residual_variance(), data.w());
}

GpsGrid gps_surface(const GpsModel& model, const Dataset& data, const Eigen::VectorXd& w_grid) {
  if (!w_grid.allFinite()) fail(ErrorCode::Input, "gps_surface: non-finite grid");
  auto surface = make_surface(model, data);
  Eigen::MatrixXd density(w_grid.size(), data.size());
  for (Eigen::Index m = 0; m < w_grid.size(); ++m) {
    for (Eigen::Index i = 0; i < data.size(); ++i) density(m, i) = surface.at(w_grid[m], i);
  }
  return {std::move(surface), std::move(density)};
}

}  // namespace cerfgp
