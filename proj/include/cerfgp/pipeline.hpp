#pragma once

#include "cerfgp/balance.hpp"
#include "cerfgp/dataset.hpp"
#include "cerfgp/estimate.hpp"
#include "cerfgp/gp.hpp"
#include "cerfgp/gps.hpp"
#include "cerfgp/kernel.hpp"
#include "cerfgp/tuning.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace cerfgp {

/// Lattice and grid used for balance-based selection.
struct TuneSettings {
  std::vector<double> alphas = default_alphas();
  std::vector<double> betas = default_betas();
  std::vector<double> ratios = default_ratios();
  std::vector<KernelFamily> families{kAllFamilies.begin(), kAllFamilies.end()};
  Eigen::Index m = 100;
  double lower_percentile = 0.5;
  double upper_percentile = 99.5;
  /// Engine used to compute weights while tuning.
  Engine engine = Engine::full();

  TuneGrid grid_for(const Eigen::VectorXd& w) const;
};

struct AnalysisSettings {
  GpsSettings gps{};
  TuneSettings tune{};
  /// Skips tuning when set.
  std::optional<Hyperparams> fixed;
  /// Engine for the final estimate.
  Engine engine = Engine::full();
  GpOptions options{};
  std::uint64_t seed = 1;
};

/// Outcome-blind design stage: GPS fit and hyperparameter selection.
struct DesignResult {
  GpsSurface surface;
  RegressorKind gps_kind = RegressorKind::BoostedTrees;
  std::optional<TuneResult> tuning;
  Hyperparams hp;
};

DesignResult run_design(const Dataset& data, const AnalysisSettings& settings);

struct CerfResult {
  CerfEstimate cerf;
  std::vector<AggWeights> weights;
  double sigma2 = 0.0;
  double jitter = 0.0;
};

/// Posterior CERF on the grid with sigma^2 from leave-one-out residuals, plus
/// the aggregated weights at every grid point.
CerfResult estimate_cerf(const Dataset& data, const GpsSurface& surface, const Hyperparams& hp,
                         const Engine& engine, const Eigen::VectorXd& w_grid,
                         const GpOptions& options = {}, bool with_weights = true);

/// Posterior mean only (no sigma^2, no weights): what simulation metrics need.
Eigen::VectorXd cerf_mean(const Dataset& data, const GpsSurface& surface, const Hyperparams& hp,
                          const Engine& engine, const Eigen::VectorXd& w_grid,
                          const GpOptions& options = {});

/// sigma^2 estimate for either engine.
double estimate_sigma2(const Dataset& data, const GpsSurface& surface, const Hyperparams& hp,
                       const Engine& engine, const GpOptions& options = {});

}  // namespace cerfgp
