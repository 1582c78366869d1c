#pragma once

#include <Eigen/Dense>

namespace cerfgp {

/// Cholesky factor of a symmetric positive definite matrix. On failure the
/// diagonal is jittered by 1e-8 * mean diagonal, escalating by 10x up to
/// 1e-4 * mean diagonal; `jitter` receives the amount used (0 if none).
/// Throws IllConditioned when every attempt fails.
Eigen::MatrixXd robust_cholesky(Eigen::MatrixXd b, double& jitter);

/// Solves (L L^T) x = rhs in place.
template <typename Derived>
void cholesky_solve_in_place(const Eigen::MatrixXd& l, Eigen::MatrixBase<Derived>& rhs) {
  l.triangularView<Eigen::Lower>().solveInPlace(rhs);
  l.triangularView<Eigen::Lower>().transpose().solveInPlace(rhs);
}

}  // namespace cerfgp
