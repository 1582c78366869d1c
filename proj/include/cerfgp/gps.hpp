#pragma once

#include "cerfgp/dataset.hpp"
#include "cerfgp/regressor.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string_view>

namespace cerfgp {

enum class RegressorKind { BoostedTrees, RidgeLinear };

std::string_view to_string(RegressorKind kind);
RegressorKind parse_regressor_kind(std::string_view name);

struct GpsSettings {
  RegressorKind regressor = RegressorKind::BoostedTrees;
  BoostingSettings boosting{};
  double ridge_penalty = 1e-6;
};

/// Normal conditional density of the exposure: W | C = c ~ N(m(c), v).
class GpsModel {
 public:
  GpsModel(std::shared_ptr<const MeanRegressor> mean, double residual_variance,
           RegressorKind kind);

  double mean(const Eigen::Ref<const Eigen::VectorXd>& c) const { return mean_->predict(c); }
  double residual_variance() const { return variance_; }
  RegressorKind kind() const { return kind_; }
  const MeanRegressor& regressor() const { return *mean_; }

 private:
  std::shared_ptr<const MeanRegressor> mean_;
  double variance_;
  RegressorKind kind_;
};

/// Fits m by the configured regressor and sets v to the residual variance
/// with divisor N-1. Falls back to ridge-linear for N < 10.
GpsModel fit_gps(const Dataset& data, const GpsSettings& settings, std::uint64_t seed);

/// Normal density (2 pi v)^(-1/2) exp(-(w - m(c))^2 / (2 v)).
double eval_gps(const GpsModel& model, double w, const Eigen::Ref<const Eigen::VectorXd>& c);

/// Density with a precomputed conditional mean.
double normal_density(double w, double mean, double variance);

/// GPS values of every observed unit, with the conditional means cached so
/// counterfactual densities s(w, c_i) are cheap to evaluate.
class GpsSurface {
 public:
  GpsSurface(Eigen::VectorXd unit_means, double variance, const Eigen::VectorXd& w_obs);

  Eigen::Index size() const { return means_.size(); }
  const Eigen::VectorXd& s_obs() const { return s_obs_; }
  const Eigen::VectorXd& unit_means() const { return means_; }
  double variance() const { return variance_; }

  /// s(w, c_i).
  double at(double w, Eigen::Index unit) const;
  /// d s(w, c_i) / d w.
  double slope(double w, Eigen::Index unit) const;

 private:
  Eigen::VectorXd means_;
  double variance_;
  Eigen::VectorXd s_obs_;
};

GpsSurface make_surface(const GpsModel& model, const Dataset& data);

struct GpsGrid {
  GpsSurface surface;
  Eigen::MatrixXd density;  ///< density(m, i) = s(w_m, c_i), M x N
};

GpsGrid gps_surface(const GpsModel& model, const Dataset& data, const Eigen::VectorXd& w_grid);

}  // namespace cerfgp
