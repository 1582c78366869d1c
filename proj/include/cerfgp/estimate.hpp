#pragma once

#include <Eigen/Dense>

namespace cerfgp {

/// Exposure-response curve on a grid: posterior means and standard deviations.
struct CerfEstimate {
  Eigen::VectorXd w_grid;
  Eigen::VectorXd r_hat;
  Eigen::VectorXd sd_r;
};

/// Aggregated GP weights at one query exposure: a_bar[j] is the weight of
/// observed unit j in the estimate of R(w).
struct AggWeights {
  double w = 0.0;
  Eigen::VectorXd a_bar;
  /// Mean over units of the untruncated per-unit weight sums.
  double raw_sum = 0.0;
};

}  // namespace cerfgp
