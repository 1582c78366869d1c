#include "cerfgp/gp.hpp"

#include "cerfgp/error.hpp"
#include "cerfgp/linalg.hpp"
#include "cerfgp/parallel.hpp"

#include <cmath>
#include <sstream>

namespace cerfgp {

GramSystem::GramSystem(const Eigen::VectorXd& w_obs, GpsSurface surface, const Hyperparams& hp)
    : coords_(standardize_coords(w_obs, surface.s_obs())), surface_(std::move(surface)), hp_(hp) {
  hp_.validate();
  Eigen::MatrixXd b = kernel_matrix(hp_, coords_.w_std, coords_.s_std, coords_.w_std, coords_.s_std);
  b *= hp_.ratio2();
  b.diagonal().array() += 1.0;
  factor_ = robust_cholesky(std::move(b), jitter_);
}

Eigen::MatrixXd GramSystem::solve(const Eigen::MatrixXd& rhs) const {
  Eigen::MatrixXd x = rhs;
  factor_.triangularView<Eigen::Lower>().solveInPlace(x);
  factor_.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
  return x;
}

Eigen::VectorXd GramSystem::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd x = rhs;
  factor_.triangularView<Eigen::Lower>().solveInPlace(x);
  factor_.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
  return x;
}

void GramSystem::query_points(double w, Eigen::VectorXd& q_w, Eigen::VectorXd& q_s) const {
  const auto n = size();
  q_w.setConstant(n, coords_.map_w(w));
  q_s.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) q_s[i] = coords_.map_s(surface_.at(w, i));
}

Eigen::MatrixXd GramSystem::cross_kernel(double w) const {
  Eigen::VectorXd q_w, q_s;
  query_points(w, q_w, q_s);
  return kernel_matrix(hp_, coords_.w_std, coords_.s_std, q_w, q_s);
}

GpFit::GpFit(GramSystem system, const Eigen::VectorXd& y, const GpOptions& options)
    : system_(std::move(system)) {
  if (y.size() != system_.size()) fail(ErrorCode::Input, "outcome length does not match the fit");
  y_offset_ = options.center_outcomes ? y.mean() : 0.0;
  y_centered_ = y.array() - y_offset_;
  coef_ = system_.solve(y_centered_);
}

void GpFit::set_sigma2(double sigma2) {
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) {
    fail(ErrorCode::Input, "sigma2 must be finite and non-negative");
  }
  sigma2_ = sigma2;
}

GpFit fit_gp(const Dataset& data, const GpsSurface& surface, const Hyperparams& hp,
             const GpOptions& options) {
  if (surface.size() != data.size()) fail(ErrorCode::Input, "GPS surface does not match dataset");
  return GpFit(GramSystem(data.w(), surface, hp), data.y(), options);
}

double predict_counterfactual(const GpFit& fit, double w, Eigen::Index unit) {
  if (unit < 0 || unit >= fit.size()) {
    fail(ErrorCode::Index, "unit index " + std::to_string(unit) + " out of range");
  }
  if (!std::isfinite(w)) fail(ErrorCode::Input, "query exposure must be finite");
  const auto& sys = fit.system();
  const auto& c = sys.coords();
  const ExpoGps q{c.map_w(w), c.map_s(sys.surface().at(w, unit))};
  double acc = 0.0;
  for (Eigen::Index j = 0; j < fit.size(); ++j) {
    acc += radial_profile(sys.hp().family,
                          scaled_distance2(sys.hp(), {c.w_std[j], c.s_std[j]}, q)) *
           fit.coefficients()[j];
  }
  return fit.y_offset() + sys.ratio2() * acc;
}

CerfEstimate cerf_estimate(const GpFit& fit, const Eigen::VectorXd& w_grid) {
  if (!fit.sigma2()) fail(ErrorCode::State, "cerf_estimate needs sigma2; call loo_sigma2 first");
  if (!w_grid.allFinite()) fail(ErrorCode::Input, "grid must be finite");
  const auto& sys = fit.system();
  const double r = sys.ratio2();
  const double sigma2 = *fit.sigma2();
  const auto n = static_cast<double>(fit.size());

  CerfEstimate out{w_grid, Eigen::VectorXd(w_grid.size()), Eigen::VectorXd(w_grid.size())};
  parallel_for(static_cast<std::size_t>(w_grid.size()), [&](std::size_t mi) {
    const auto m = static_cast<Eigen::Index>(mi);
    Eigen::VectorXd q_w, q_s;
    sys.query_points(w_grid[m], q_w, q_s);
    const auto& c = sys.coords();
    // u = H~(w) 1: summed cross-covariances of the N query points.
    const Eigen::VectorXd u = kernel_matrix(sys.hp(), c.w_std, c.s_std, q_w, q_s).rowwise().sum();
    out.r_hat[m] = fit.y_offset() + r * u.dot(fit.coefficients()) / n;

    const double prior = kernel_matrix(sys.hp(), q_w, q_s, q_w, q_s).sum();
    const double explained = u.dot(sys.solve(u));
    const double var_unit = (r * prior + n - r * r * explained) / (n * n);
    out.sd_r[m] = std::sqrt(std::max(0.0, sigma2 * var_unit));
  });
  return out;
}

Eigen::MatrixXd unit_weights(const GramSystem& system, double w) {
  return system.ratio2() * system.solve(system.cross_kernel(w));
}

Eigen::VectorXd raw_weights(const GramSystem& system, double w) {
  const Eigen::VectorXd u = system.cross_kernel(w).rowwise().sum();
  return system.ratio2() * system.solve(u) / static_cast<double>(system.size());
}

AggWeights aggregate_unit_weights(const Eigen::MatrixXd& a, double w, double threshold) {
  const auto n_obs = a.rows();
  const auto n_units = a.cols();
  AggWeights out{w, Eigen::VectorXd::Zero(n_obs), 0.0};
  for (Eigen::Index i = 0; i < n_units; ++i) {
    double raw = 0.0;
    double kept = 0.0;
    for (Eigen::Index j = 0; j < n_obs; ++j) {
      const double v = a(j, i);
      raw += v;
      if (v >= threshold) kept += v;
    }
    out.raw_sum += raw;
    if (!(kept > 1e-12)) {
      std::ostringstream msg;
      msg << "no support at w = " << w << ": every weight of unit " << i
          << " is negligible after truncation";
      fail(ErrorCode::NoSupport, msg.str());
    }
    for (Eigen::Index j = 0; j < n_obs; ++j) {
      const double v = a(j, i);
      if (v >= threshold) out.a_bar[j] += v / kept;
    }
  }
  out.a_bar /= static_cast<double>(n_units);
  out.raw_sum /= static_cast<double>(n_units);
  return out;
}

AggWeights pointwise_weights(const GramSystem& system, double w, double threshold) {
  if (!std::isfinite(w)) fail(ErrorCode::Input, "query exposure must be finite");
  return aggregate_unit_weights(unit_weights(system, w), w, threshold);
}

std::vector<AggWeights> pointwise_weights(const GramSystem& system, const Eigen::VectorXd& w_grid,
                                          double threshold) {
  std::vector<AggWeights> out(static_cast<std::size_t>(w_grid.size()));
  parallel_for(out.size(), [&](std::size_t m) {
    out[m] = pointwise_weights(system, w_grid[static_cast<Eigen::Index>(m)], threshold);
  });
  return out;
}

Eigen::VectorXd loo_residuals(const GpFit& fit) {
  const auto& l = fit.system().factor();
  // diag(B^{-1}) = column sums of squares of L^{-1}.
  Eigen::MatrixXd l_inv = Eigen::MatrixXd::Identity(l.rows(), l.cols());
  l.triangularView<Eigen::Lower>().solveInPlace(l_inv);
  const Eigen::VectorXd diag = l_inv.colwise().squaredNorm().transpose();
  return fit.coefficients().array() / diag.array();
}

double loo_sigma2(GpFit& fit) {
  if (fit.size() < 3) fail(ErrorCode::TooFewUnits, "leave-one-out variance needs N >= 3");
  const double s2 = loo_residuals(fit).squaredNorm() / static_cast<double>(fit.size() - 1);
  fit.set_sigma2(s2);
  return s2;
}

}  // namespace cerfgp
