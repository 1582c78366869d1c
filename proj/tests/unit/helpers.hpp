#pragma once

#include "cerfgp/dataset.hpp"
#include "cerfgp/gps.hpp"
#include "cerfgp/kernel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace cerfgp::fixtures {

// Confounded toy data: w depends on both covariates, y on w and c1.
inline Dataset toy_dataset(Eigen::Index n, unsigned seed, double noise = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::VectorXd y(n), w(n);
  Eigen::MatrixXd c(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    c(i, 0) = z(rng);
    c(i, 1) = z(rng);
    w[i] = 0.8 * c(i, 0) - 0.5 * c(i, 1) + z(rng);
    y[i] = 2.0 * w[i] + std::sin(w[i]) + c(i, 0) + noise * z(rng);
  }
  return Dataset(y, w, c, {"c1", "c2"});
}

inline GpsSurface linear_surface(const Dataset& data) {
  GpsSettings s;
  s.regressor = RegressorKind::RidgeLinear;
  return make_surface(fit_gps(data, s, 1), data);
}

// Dense reference GP written from the definitions: its own standardization
// and an LU solve instead of a Cholesky factor.
struct DenseGp {
  Hyperparams hp;
  Eigen::VectorXd ws, ss, yc;
  double w_mean, w_sd, s_mean, s_sd, offset;
  Eigen::MatrixXd b_inv;

  static double sample_sd(const Eigen::VectorXd& v) {
    const double m = v.mean();
    return std::sqrt((v.array() - m).square().sum() / static_cast<double>(v.size() - 1));
  }

  DenseGp(const Dataset& data, const GpsSurface& surface, const Hyperparams& h, bool center = true)
      : hp(h) {
    const auto& w = data.w();
    const auto& s = surface.s_obs();
    w_mean = w.mean();
    w_sd = sample_sd(w);
    s_mean = s.mean();
    s_sd = sample_sd(s);
    ws = (w.array() - w_mean) / w_sd;
    ss = (s.array() - s_mean) / s_sd;
    offset = center ? data.y().mean() : 0.0;
    yc = data.y().array() - offset;
    const auto n = w.size();
    Eigen::MatrixXd b(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) b(i, j) = hp.ratio2() * k(ws[i], ss[i], ws[j], ss[j]);
    }
    b.diagonal().array() += 1.0;
    b_inv = b.fullPivLu().inverse();
  }

  double k(double w1, double s1, double w2, double s2) const {
    return radial_profile(hp.family, (s1 - s2) * (s1 - s2) / hp.alpha + (w1 - w2) * (w1 - w2) / hp.beta);
  }

  // Weight vector on centered outcomes for a raw (w, s) query.
  Eigen::VectorXd weights(double w, double s) const {
    const double qw = (w - w_mean) / w_sd;
    const double qs = (s - s_mean) / s_sd;
    Eigen::VectorXd h(ws.size());
    for (Eigen::Index j = 0; j < ws.size(); ++j) h[j] = k(ws[j], ss[j], qw, qs);
    return hp.ratio2() * b_inv * h;
  }

  double predict(double w, double s) const { return offset + weights(w, s).dot(yc); }

  double cerf(double w, const GpsSurface& surface) const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < surface.size(); ++i) acc += predict(w, surface.at(w, i));
    return acc / static_cast<double>(surface.size());
  }
};

inline double max_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace cerfgp::fixtures
