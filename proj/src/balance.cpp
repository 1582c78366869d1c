#include "cerfgp/balance.hpp"

#include "cerfgp/error.hpp"
#include "cerfgp/log.hpp"
#include "cerfgp/parallel.hpp"

#include <cmath>
#include <sstream>

namespace cerfgp {

Eigen::VectorXd weighted_correlations(const Eigen::VectorXd& a, const DesignView& design,
                                      double w_point, int& floored) {
  const auto n = design.size();
  const auto p = design.c.cols();
  floored = 0;
  if (a.size() != n) fail(ErrorCode::Input, "weight vector length does not match the design");
  if (p < 1) fail(ErrorCode::Input, "balance needs at least one covariate");
  if (std::abs(a.sum() - 1.0) > 1e-8) {
    std::ostringstream msg;
    msg << "weights at w = " << w_point << " sum to " << a.sum() << ", expected 1";
    fail(ErrorCode::Input, msg.str());
  }

  const double w_bar = a.dot(design.w);
  const Eigen::VectorXd w_dev = design.w.array() - w_bar;
  const double var_w = a.dot(w_dev.cwiseAbs2());
  if (!(var_w > 0.0)) {
    std::ostringstream msg;
    msg << "weighted exposure variance is " << var_w << " at w = " << w_point;
    fail(ErrorCode::DegenerateExposure, msg.str());
  }
  const Eigen::VectorXd w_star = w_dev / std::sqrt(var_w);

  const Eigen::RowVectorXd c_bar = a.transpose() * design.c;
  const Eigen::MatrixXd c_dev = design.c.rowwise() - c_bar;
  const Eigen::MatrixXd cov = c_dev.transpose() * a.asDiagonal() * c_dev;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  Eigen::VectorXd ev = eig.eigenvalues();
  const double floor = kWhiteningFloor * std::max(cov.trace(), 0.0) / static_cast<double>(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    if (ev[k] < floor || !(ev[k] > 0.0)) {
      ev[k] = floor;
      ++floored;
    }
  }
  if (!(floor > 0.0)) {
    std::ostringstream msg;
    msg << "weighted covariate covariance vanishes at w = " << w_point;
    fail(ErrorCode::DegenerateExposure, msg.str());
  }
  const Eigen::MatrixXd& v = eig.eigenvectors();
  const Eigen::MatrixXd inv_root = v * ev.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();

  // rho = sum_i a_i w*_i c*_i = Sigma^{-1/2} sum_i a_i w*_i (c_i - c_bar).
  const Eigen::VectorXd cross = c_dev.transpose() * a.cwiseProduct(w_star);
  return inv_root * cross;
}

BalanceReport covariate_balance(const std::vector<AggWeights>& weights, const DesignView& design,
                                const Eigen::VectorXd& w_grid) {
  const auto m_count = w_grid.size();
  if (static_cast<Eigen::Index>(weights.size()) != m_count) {
    fail(ErrorCode::Input, "one weight vector per grid point is required");
  }
  if (m_count < 1) fail(ErrorCode::Input, "balance grid is empty");
  const auto p = design.c.cols();
  BalanceReport out{w_grid, Eigen::MatrixXd(m_count, p), Eigen::VectorXd(m_count), 0.0, 0};
  std::vector<int> floored(static_cast<std::size_t>(m_count), 0);
  parallel_for(static_cast<std::size_t>(m_count), [&](std::size_t mi) {
    const auto m = static_cast<Eigen::Index>(mi);
    const Eigen::VectorXd rho = weighted_correlations(weights[mi].a_bar, design, w_grid[m], floored[mi]);
    out.rho_rw.row(m) = rho.transpose();
    out.rho_w[m] = rho.cwiseAbs().mean();
  });
  double total = 0.0;
  for (Eigen::Index m = 0; m < m_count; ++m) total += out.rho_w[m];
  out.rho_overall = total / static_cast<double>(m_count);
  for (int f : floored) out.floored_eigenvalues += f;
  if (out.floored_eigenvalues > 0) {
    warn("covariate covariance nearly singular; floored " +
         std::to_string(out.floored_eigenvalues) + " eigenvalue(s) during whitening");
  }
  return out;
}

}  // namespace cerfgp
