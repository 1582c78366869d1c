#pragma once

#include "cerfgp/dataset.hpp"
#include "cerfgp/estimate.hpp"

#include <Eigen/Dense>

#include <vector>

namespace cerfgp {

struct BalanceReport {
  Eigen::VectorXd w_grid;
  /// rho_rw(m, r): weighted correlation between exposure and whitened covariate r.
  Eigen::MatrixXd rho_rw;
  /// Mean absolute correlation over covariates at each grid point.
  Eigen::VectorXd rho_w;
  double rho_overall = 0.0;
  /// Eigenvalues of the weighted covariate covariance raised to the floor,
  /// summed over grid points.
  int floored_eigenvalues = 0;
};

/// Eigenvalues below this fraction of trace / p are floored during whitening.
inline constexpr double kWhiteningFloor = 1e-8;

/// Weighted exposure-covariate correlations at one grid point. `weights` must
/// sum to one. Returns the p correlations; `floored` counts floored eigenvalues.
Eigen::VectorXd weighted_correlations(const Eigen::VectorXd& weights, const DesignView& design,
                                      double w_point, int& floored);

BalanceReport covariate_balance(const std::vector<AggWeights>& weights, const DesignView& design,
                                const Eigen::VectorXd& w_grid);

}  // namespace cerfgp
