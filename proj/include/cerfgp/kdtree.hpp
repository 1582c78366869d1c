#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace cerfgp {

/// Balanced 2-d tree for k-nearest-neighbor queries under the anisotropic
/// distance d^2 = dx^2 / scale_x + dy^2 / scale_y.
///
/// Candidate distances are computed from the raw coordinates with exactly the
/// same expression a brute-force scan would use, so neighbor sets (including
/// tie-breaks by lower index) match an exhaustive search.
class KdTree2 {
 public:
  KdTree2(Eigen::VectorXd x, Eigen::VectorXd y, double scale_x, double scale_y,
          int leaf_size = 8);

  Eigen::Index size() const { return x_.size(); }

  /// Indices of the k nearest points, ordered by (distance, index).
  std::vector<Eigen::Index> nearest(double qx, double qy, Eigen::Index k) const;
  void nearest(double qx, double qy, Eigen::Index k, std::vector<Eigen::Index>& out) const;

  double distance2(Eigen::Index i, double qx, double qy) const {
    const double dx = x_[i] - qx;
    const double dy = y_[i] - qy;
    return dx * dx / scale_x_ + dy * dy / scale_y_;
  }

 private:
  struct Node {
    // Bounding box in raw coordinates.
    double lo_x, hi_x, lo_y, hi_y;
    std::int32_t begin, end;  // range into perm_ (leaves only)
    std::int32_t left = -1, right = -1;
  };

  std::int32_t build(std::int32_t begin, std::int32_t end);
  double box_distance2(const Node& node, double qx, double qy) const;

  Eigen::VectorXd x_, y_;
  double scale_x_, scale_y_;
  int leaf_size_;
  std::vector<Eigen::Index> perm_;
  std::vector<Node> nodes_;
};

}  // namespace cerfgp
