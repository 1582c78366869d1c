#pragma once

#include "cerfgp/dataset.hpp"
#include "cerfgp/estimate.hpp"
#include "cerfgp/gps.hpp"
#include "cerfgp/kernel.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace cerfgp {

inline constexpr double kDefaultTruncation = 1e-5;

/// The outcome-free part of a GP fit: standardized (w, s) coordinates and the
/// Cholesky factor of B = (gamma/sigma)^2 H + I, where H is the unit-scale
/// Gram matrix. Everything that tuning needs lives here.
class GramSystem {
 public:
  GramSystem(const Eigen::VectorXd& w_obs, GpsSurface surface, const Hyperparams& hp);

  Eigen::Index size() const { return coords_.w_std.size(); }
  const StandardizedCoords& coords() const { return coords_; }
  const GpsSurface& surface() const { return surface_; }
  const Hyperparams& hp() const { return hp_; }
  double ratio2() const { return hp_.ratio2(); }
  /// Diagonal jitter added to B (0 when none was needed).
  double jitter() const { return jitter_; }
  /// Lower-triangular L with L L^T = B (+ jitter I).
  const Eigen::MatrixXd& factor() const { return factor_; }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  /// Standardized query coordinates (w, s(w, c_i)) for every unit i.
  void query_points(double w, Eigen::VectorXd& q_w, Eigen::VectorXd& q_s) const;

  /// H~(w): column i holds h between every observed point and unit i's query.
  Eigen::MatrixXd cross_kernel(double w) const;

 private:
  StandardizedCoords coords_;
  GpsSurface surface_;
  Hyperparams hp_;
  Eigen::MatrixXd factor_;
  double jitter_ = 0.0;
};

struct GpOptions {
  /// Subtract the sample mean of y before fitting and add it back to
  /// predictions; with false the prior mean is exactly zero.
  bool center_outcomes = true;
};

class GpFit {
 public:
  GpFit(GramSystem system, const Eigen::VectorXd& y, const GpOptions& options);

  const GramSystem& system() const { return system_; }
  Eigen::Index size() const { return system_.size(); }
  double y_offset() const { return y_offset_; }
  const Eigen::VectorXd& y_centered() const { return y_centered_; }
  /// B^{-1} (y - offset).
  const Eigen::VectorXd& coefficients() const { return coef_; }

  std::optional<double> sigma2() const { return sigma2_; }
  void set_sigma2(double sigma2);

 private:
  GramSystem system_;
  Eigen::VectorXd y_centered_;
  double y_offset_ = 0.0;
  Eigen::VectorXd coef_;
  std::optional<double> sigma2_;
};

GpFit fit_gp(const Dataset& data, const GpsSurface& surface, const Hyperparams& hp,
             const GpOptions& options = {});

/// Posterior mean of Y_i(w).
double predict_counterfactual(const GpFit& fit, double w, Eigen::Index unit);

/// Posterior means and standard deviations of R(w) on the grid. Requires sigma2.
CerfEstimate cerf_estimate(const GpFit& fit, const Eigen::VectorXd& w_grid);

/// Per-unit weight vectors a_i(w) = (gamma/sigma)^2 B^{-1} h_i(w), one column
/// per unit, before truncation.
Eigen::MatrixXd unit_weights(const GramSystem& system, double w);

/// N^{-1} sum_i a_i(w) without truncation or renormalization.
Eigen::VectorXd raw_weights(const GramSystem& system, double w);

/// Sets a_ij below `threshold` to zero (negative entries included), renormalizes
/// each unit's weights to sum to one, and averages over units.
AggWeights pointwise_weights(const GramSystem& system, double w,
                             double threshold = kDefaultTruncation);

/// Same truncation rule applied to a precomputed weight matrix (columns = units).
AggWeights aggregate_unit_weights(const Eigen::MatrixXd& unit_weights, double w,
                                  double threshold = kDefaultTruncation);

std::vector<AggWeights> pointwise_weights(const GramSystem& system, const Eigen::VectorXd& w_grid,
                                          double threshold = kDefaultTruncation);

/// Leave-one-out residuals y_i - Yhat_{-i}(w_i) via the closed-form identity.
Eigen::VectorXd loo_residuals(const GpFit& fit);

/// sum e_i^2 / (N - 1); also stores the value in the fit.
double loo_sigma2(GpFit& fit);

}  // namespace cerfgp
