#pragma once

#include "cerfgp/dataset.hpp"
#include "cerfgp/estimate.hpp"
#include "cerfgp/gp.hpp"
#include "cerfgp/gps.hpp"
#include "cerfgp/kdtree.hpp"
#include "cerfgp/kernel.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace cerfgp {

inline constexpr int kDefaultNeighbors = 25;

struct NeighborSets {
  Eigen::Index ell = 0;
  /// One set per query, ordered by increasing kernel-induced distance.
  std::vector<std::vector<Eigen::Index>> sets;
};

/// ell nearest observed points of every query under
/// d^2 = (s - s')^2 / alpha + (w - w')^2 / beta, ties broken by lower index.
/// ell > N is clamped to N with a warning.
NeighborSets neighbor_sets(const Eigen::VectorXd& obs_w, const Eigen::VectorXd& obs_s,
                           const Eigen::VectorXd& query_w, const Eigen::VectorXd& query_s,
                           const Hyperparams& hp, Eigen::Index ell);

/// ell-point conditional normal for one query.
struct LocalPrediction {
  std::vector<Eigen::Index> neighbors;
  /// Kriging weights on the neighbors' outcomes: (gamma/sigma)^2 B_N^{-1} h.
  Eigen::VectorXd weights;
  /// Conditional variance in units of sigma^2 (includes the outcome noise).
  double variance_unit = 0.0;
  double jitter = 0.0;
};

/// Outcome-free nearest-neighbor GP: standardized coordinates, GPS surface and
/// a spatial index rebuilt for the current (alpha, beta).
class NnGpSystem {
 public:
  NnGpSystem(const Eigen::VectorXd& w_obs, GpsSurface surface, const Hyperparams& hp,
             Eigen::Index ell);

  Eigen::Index size() const { return coords_.w_std.size(); }
  Eigen::Index ell() const { return ell_; }
  const StandardizedCoords& coords() const { return coords_; }
  const GpsSurface& surface() const { return surface_; }
  const Hyperparams& hp() const { return hp_; }
  const KdTree2& index() const { return index_; }

  /// Conditional prediction at a standardized point; `exclude` drops one
  /// observed unit from the candidate set (leave-one-out).
  LocalPrediction predict_at(double q_w, double q_s, Eigen::Index exclude = -1) const;
  /// Prediction of Y_i(w).
  LocalPrediction predict_unit(double w, Eigen::Index unit) const;

  /// Truncated, renormalized, unit-averaged weights at one exposure; each
  /// unit contributes at most ell nonzeros.
  AggWeights weights(double w, double threshold = kDefaultTruncation) const;
  std::vector<AggWeights> weights(const Eigen::VectorXd& w_grid,
                                  double threshold = kDefaultTruncation) const;

  /// Grid weights for several values of gamma/sigma sharing this system's
  /// neighbor sets; result[k] matches a system built with ratios[k] up to
  /// rounding.
  /// A ratio whose weights fail leaves its slot empty and its message in
  /// `errors[k]`.
  std::vector<std::vector<AggWeights>> weights_across_ratios(
      const Eigen::VectorXd& w_grid, const std::vector<double>& ratios,
      std::vector<std::string>& errors, double threshold = kDefaultTruncation) const;

 private:
  StandardizedCoords coords_;
  GpsSurface surface_;
  Hyperparams hp_;
  Eigen::Index ell_;
  KdTree2 index_;
};

struct NnGpResult {
  CerfEstimate cerf;
  std::vector<AggWeights> weights;
  double max_jitter = 0.0;
};

/// nnGP counterfactual predictions averaged over units. Posterior standard
/// deviations combine per-unit conditional variances with the covariance
/// induced by shared neighbors' outcome noise; other cross-unit terms are
/// ignored. Weights are skipped when `with_weights` is false.
NnGpResult nngp_cerf(const Dataset& data, const GpsSurface& surface, const Hyperparams& hp,
                     Eigen::Index ell, const Eigen::VectorXd& w_grid, double sigma2,
                     const GpOptions& options = {}, bool with_weights = true);

/// sigma^2 estimate from nnGP leave-one-out residuals (each unit predicted from
/// its ell nearest other units).
double nngp_loo_sigma2(const Dataset& data, const GpsSurface& surface, const Hyperparams& hp,
                       Eigen::Index ell, const GpOptions& options = {});

}  // namespace cerfgp
