#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <vector>

namespace cerfgp {

/// Conditional-mean model m(c) ~ E[W | C = c].
class MeanRegressor {
 public:
  virtual ~MeanRegressor() = default;
  virtual double predict(const Eigen::Ref<const Eigen::VectorXd>& c) const = 0;
  Eigen::VectorXd predict_all(const Eigen::MatrixXd& c) const;
};

struct BoostingSettings {
  int rounds = 200;
  int max_depth = 3;
  double learning_rate = 0.1;
  int min_leaf = 5;
  /// Row subsampling fraction per round; 1.0 disables sampling (and the seed
  /// then has no effect).
  double subsample = 1.0;
};

/// Squared-error gradient boosting over depth-limited regression trees with
/// exact greedy splits on presorted features.
class BoostedTrees final : public MeanRegressor {
 public:
  static BoostedTrees fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& target,
                          const BoostingSettings& settings, std::uint64_t seed);

  double predict(const Eigen::Ref<const Eigen::VectorXd>& c) const override;
  std::size_t num_trees() const { return trees_.size(); }

 private:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };
  using Tree = std::vector<Node>;

  double base_ = 0.0;
  std::vector<Tree> trees_;
};

/// Linear least squares with a small ridge penalty on the slopes.
class RidgeLinear final : public MeanRegressor {
 public:
  static RidgeLinear fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& target,
                         double penalty);
  RidgeLinear(double intercept, Eigen::VectorXd slopes)
      : intercept_(intercept), slopes_(std::move(slopes)) {}

  double predict(const Eigen::Ref<const Eigen::VectorXd>& c) const override;
  double intercept() const { return intercept_; }
  const Eigen::VectorXd& slopes() const { return slopes_; }

 private:
  double intercept_ = 0.0;
  Eigen::VectorXd slopes_;
};

}  // namespace cerfgp
