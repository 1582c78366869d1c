#include "cerfgp/linalg.hpp"

#include "cerfgp/error.hpp"

#include <sstream>

namespace cerfgp {

Eigen::MatrixXd robust_cholesky(Eigen::MatrixXd b, double& jitter) {
  jitter = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(b);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const double mean_diag = b.diagonal().mean();
  for (double scale = 1e-8; scale <= 1e-4 * (1 + 1e-9); scale *= 10.0) {
    jitter = scale * mean_diag;
    Eigen::MatrixXd bj = b;
    bj.diagonal().array() += jitter;
    llt.compute(bj);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  std::ostringstream msg;
  msg << "Gram matrix is ill-conditioned even with jitter " << jitter
      << "; eigenvalue range [" << ev.minCoeff() << ", " << ev.maxCoeff() << "]";
  fail(ErrorCode::IllConditioned, msg.str());
}

}  // namespace cerfgp
