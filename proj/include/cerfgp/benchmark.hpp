#pragma once

#include "cerfgp/changepoint.hpp"
#include "cerfgp/pipeline.hpp"
#include "cerfgp/simulation.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cerfgp {

enum class Estimator { Oracle, GpFull, NnGp, Iptw, Adjustment };

std::string_view to_string(Estimator estimator);
Estimator parse_estimator(std::string_view name);

struct BenchmarkCell {
  int scenario = 1;
  OutcomeKind outcome = OutcomeKind::Cubic;
  Eigen::Index n = 200;
  int replicates = 10;
};

struct BenchmarkSpec {
  std::vector<BenchmarkCell> cells;
  std::vector<Estimator> estimators{Estimator::GpFull};
  std::uint64_t base_seed = 1;
  /// GPS model and tuning lattice; one tuning per replicate is shared by the
  /// two GP estimators.
  AnalysisSettings analysis{};
  Eigen::Index nngp_ell = 25;
  /// Evaluation grid for the accuracy metrics.
  double grid_lo = 0.0;
  double grid_hi = 20.0;
  Eigen::Index grid_m = 200;
  double max_failure_fraction = 0.2;

  void validate() const;
};

struct ReplicateRecord {
  int index = 0;
  std::uint64_t seed = 0;
  bool tuned = false;
  Hyperparams hp;
  double rho = 0.0;
  /// Error message of the shared design stage, empty on success.
  std::string error;
};

struct BenchmarkRow {
  BenchmarkCell cell;
  Estimator estimator = Estimator::GpFull;
  CurveMetrics metrics;
  int used = 0;
  int failures = 0;
  /// Per successful replicate, rows of the curve matrix.
  Eigen::MatrixXd curves;
};

struct BenchmarkResult {
  Eigen::VectorXd grid;
  std::vector<BenchmarkRow> rows;
  /// Design-stage records per cell, in cell order.
  std::vector<std::vector<ReplicateRecord>> replicates;
};

/// Runs every (cell, estimator) pair. Replicate seeds are base_seed + index.
/// Throws Benchmark when more than max_failure_fraction of an estimator's
/// replicates fail.
BenchmarkResult run_benchmark(const BenchmarkSpec& spec);

struct ChangePointStudySpec {
  BenchmarkCell cell{1, OutcomeKind::Piecewise, 1000, 20};
  std::uint64_t base_seed = 1;
  AnalysisSettings analysis{};
  /// Detection grid: M points between the given exposure percentiles.
  Eigen::Index grid_m = 100;
  double lower_percentile = 0.5;
  double upper_percentile = 99.5;
  double level = 0.95;
  Eigen::Index min_side = kDefaultMinSide;
  std::vector<double> true_points{std::begin(kPiecewiseKnots), std::end(kPiecewiseKnots)};
  std::vector<double> true_jumps{std::begin(kPiecewiseJumps), std::end(kPiecewiseJumps)};
};

struct ChangePointReplicate {
  std::uint64_t seed = 0;
  Hyperparams hp;
  double rho = 0.0;
  std::vector<DetectedPoint> points;
  std::string error;
};

struct ChangePointStudy {
  std::vector<ChangePointReplicate> replicates;
  double mean_count = 0.0;
  /// Mean over detected points of the distance to the nearest true point.
  double mean_distance = 0.0;
  /// Fraction of detected points whose sign equals the nearest true jump's sign.
  double sign_agreement = 0.0;
  /// Fraction of replicates with no detection.
  double zero_fraction = 0.0;
  int failures = 0;
};

ChangePointStudy run_changepoint_study(const ChangePointStudySpec& spec);

}  // namespace cerfgp
