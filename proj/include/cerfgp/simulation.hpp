#pragma once

#include "cerfgp/dataset.hpp"
#include "cerfgp/estimate.hpp"
#include "cerfgp/gps.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>

namespace cerfgp {

enum class OutcomeKind { Cubic, Piecewise, Linear };

std::string_view to_string(OutcomeKind kind);
OutcomeKind parse_outcome_kind(std::string_view name);

struct ScenarioConfig {
  int scenario = 1;
  OutcomeKind outcome = OutcomeKind::Cubic;
  Eigen::Index n = 200;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Covariates C1..C6, exposure from the selected GPS model and outcome from the
/// selected mean model. Deterministic in the seed. Columns are named c1..c6;
/// the categorical c5 is stored as its numeric level in {-2, ..., 2}.
Dataset gen_dataset(const ScenarioConfig& config);

/// Covariate-averaged mean outcome at exposure w.
double true_cerf(double w, OutcomeKind kind);
Eigen::VectorXd true_cerf(const Eigen::VectorXd& w, OutcomeKind kind);

/// Exposure levels where the piecewise curve's slope jumps, and the jumps.
inline constexpr double kPiecewiseKnots[] = {2.5, 5.0, 10.0, 12.5, 17.5};
inline constexpr double kPiecewiseJumps[] = {10.0, -10.0, 10.0, -7.5, -2.5};

/// Normal-reference (Silverman) kernel density estimate of the exposure,
/// evaluated at every observed exposure.
Eigen::VectorXd marginal_density(const Eigen::VectorXd& w);

/// Stabilized inverse-GPS weights f(w_i) / s(w_i, c_i), winsorized at their
/// 99th percentile.
Eigen::VectorXd iptw_weights(const Eigen::VectorXd& marginal, const Eigen::VectorXd& gps);

/// Weighted least-squares cubic in w. Coefficients are for the raw powers
/// (1, w, w^2, w^3).
Eigen::Vector4d weighted_cubic_fit(const Eigen::VectorXd& w, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& weights);

CerfEstimate baseline_iptw(const Dataset& data, const GpsSurface& surface,
                           const Eigen::VectorXd& w_grid);

/// Outcome regression on (1, w, w^2, s, s^2, w s), averaged over units.
CerfEstimate baseline_adjustment(const Dataset& data, const GpsSurface& surface,
                                 const Eigen::VectorXd& w_grid);

/// Accuracy of S replicate curves (rows) against the truth on a shared grid.
struct CurveMetrics {
  double abs_bias = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
};

CurveMetrics curve_metrics(const Eigen::MatrixXd& estimates, const Eigen::VectorXd& truth);

}  // namespace cerfgp
