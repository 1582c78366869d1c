#pragma once

#include "cerfgp/dataset.hpp"
#include "cerfgp/gp.hpp"
#include "cerfgp/gps.hpp"
#include "cerfgp/kernel.hpp"
#include "cerfgp/tuning.hpp"

#include <Eigen/Dense>

#include <memory>
#include <vector>

namespace cerfgp {

enum class Side { Left, Right };

inline constexpr Eigen::Index kDefaultMinSide = 10;

/// Everything needed to condition derivative processes on one side of w0.
struct FitContext {
  const Dataset& data;
  const GpsSurface& surface;
  Hyperparams hp;
  double sigma2 = 1.0;
  Engine engine = Engine::full();
  GpOptions options{};
  /// Differentiate through s(w, c) as well as w (total derivative of the
  /// counterfactual mean). With false the GPS coordinate is held fixed.
  bool chain_rule = true;
  Eigen::Index min_side = kDefaultMinSide;
};

struct DerivativeEstimate {
  double w0 = 0.0;
  double left_mean = 0.0;
  double right_mean = 0.0;
  double left_var = 0.0;
  double right_var = 0.0;
  Eigen::Index n_left = 0;
  Eigen::Index n_right = 0;
};

/// Posterior of the unit-averaged exposure derivative at w0, conditioned only on
/// units with w <= w0 (left) or w > w0 (right). Variances exclude outcome noise.
class DerivativeModel {
 public:
  explicit DerivativeModel(const FitContext& context);
  ~DerivativeModel();
  DerivativeModel(const DerivativeModel&) = delete;
  DerivativeModel& operator=(const DerivativeModel&) = delete;

  /// (mean, variance) on the raw exposure scale.
  std::pair<double, double> side(double w0, Side side) const;
  /// Both sides; throws InsufficientSideData when either side is too small.
  DerivativeEstimate both(double w0) const;

  Eigen::Index side_size(double w0, Side side) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::pair<double, double> one_sided_derivative(const FitContext& context, double w0, Side side);

struct DetectedPoint {
  double w = 0.0;
  /// Direction of the slope change: +1 when the slope increases across w
  /// (right derivative above left), -1 otherwise.
  int sign = 0;
  /// Posterior mean of left minus right derivative at w.
  double delta_mean = 0.0;
  Eigen::Index grid_index = 0;
};

struct ChangePointReport {
  Eigen::VectorXd grid;
  Eigen::VectorXd delta_mean;
  Eigen::VectorXd delta_sd;
  /// False for grid points dropped because a side had too few units.
  std::vector<bool> usable;
  std::vector<bool> in_interval;
  /// Inclusive [first, last] grid indices of each maximal run.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> intervals;
  std::vector<DetectedPoint> points;
  double level = 0.95;
};

/// Standard normal quantile.
double normal_quantile(double p);

ChangePointReport detect_change_points(const FitContext& context, const Eigen::VectorXd& grid,
                                       double level = 0.95);

/// Interval and point extraction from a precomputed delta curve.
void find_intervals(ChangePointReport& report);

}  // namespace cerfgp
