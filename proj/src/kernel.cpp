#include "cerfgp/kernel.hpp"

#include "cerfgp/error.hpp"

#include <cmath>
#include <sstream>

namespace cerfgp {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt5 = 2.23606797749979;

bool finite_point(ExpoGps p) { return std::isfinite(p.w) && std::isfinite(p.s); }

// g(z) = h'(z) / z and its derivative g'(z), for the differentiable families.
struct RadialSlope {
  double g;
  double dg;
};

RadialSlope radial_slope(KernelFamily family, double z) {
  switch (family) {
    case KernelFamily::Gaussian: {
      const double e = std::exp(-z * z);
      return {-2.0 * e, 4.0 * z * e};
    }
    case KernelFamily::Matern32: {
      const double e = std::exp(-kSqrt3 * z);
      return {-3.0 * e, 3.0 * kSqrt3 * e};
    }
    case KernelFamily::Matern52: {
      const double e = std::exp(-kSqrt5 * z);
      return {-(5.0 / 3.0) * (1.0 + kSqrt5 * z) * e, (25.0 / 3.0) * z * e};
    }
    case KernelFamily::Matern12:
      break;
  }
  fail(ErrorCode::NonDifferentiableKernel,
       "matern12 kernel has no exposure derivatives");
}

}  // namespace

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::Gaussian: return "gaussian";
    case KernelFamily::Matern12: return "matern12";
    case KernelFamily::Matern32: return "matern32";
    case KernelFamily::Matern52: return "matern52";
  }
  return "unknown";
}

KernelFamily parse_family(std::string_view name) {
  for (auto f : kAllFamilies) {
    if (to_string(f) == name) return f;
  }
  fail(ErrorCode::Config, "unknown kernel family '" + std::string(name) + "'");
}

void Hyperparams::validate() const {
  auto ok = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!ok(alpha) || !ok(beta) || !ok(gamma_over_sigma)) {
    fail(ErrorCode::Input, "hyperparameters must be positive and finite: " + describe(*this));
  }
}

std::string describe(const Hyperparams& hp) {
  std::ostringstream out;
  out << to_string(hp.family) << "(alpha=" << hp.alpha << ", beta=" << hp.beta
      << ", gamma/sigma=" << hp.gamma_over_sigma << ")";
  return out.str();
}

double radial_profile(KernelFamily family, double z2) {
  switch (family) {
    case KernelFamily::Gaussian:
      return std::exp(-z2);
    case KernelFamily::Matern12:
      return std::exp(-std::sqrt(z2));
    case KernelFamily::Matern32: {
      const double a = kSqrt3 * std::sqrt(z2);
      return (1.0 + a) * std::exp(-a);
    }
    case KernelFamily::Matern52: {
      const double a = kSqrt5 * std::sqrt(z2);
      return (1.0 + a + (5.0 / 3.0) * z2) * std::exp(-a);
    }
  }
  return 0.0;
}

void apply_radial_profile(KernelFamily family, Eigen::ArrayXXd& z2) {
  switch (family) {
    case KernelFamily::Gaussian:
      z2 = (-z2).exp();
      return;
    case KernelFamily::Matern12:
      z2 = (-z2.sqrt()).exp();
      return;
    case KernelFamily::Matern32: {
      const Eigen::ArrayXXd a = kSqrt3 * z2.sqrt();
      z2 = (1.0 + a) * (-a).exp();
      return;
    }
    case KernelFamily::Matern52: {
      const Eigen::ArrayXXd a = kSqrt5 * z2.sqrt();
      z2 = (1.0 + a + (5.0 / 3.0) * z2) * (-a).exp();
      return;
    }
  }
}

Eigen::MatrixXd kernel_matrix(const Hyperparams& hp, const Eigen::VectorXd& a_w,
                              const Eigen::VectorXd& a_s, const Eigen::VectorXd& b_w,
                              const Eigen::VectorXd& b_s) {
  Eigen::ArrayXXd z2(a_w.size(), b_w.size());
  const double inv_alpha = 1.0 / hp.alpha;
  const double inv_beta = 1.0 / hp.beta;
  for (Eigen::Index j = 0; j < b_w.size(); ++j) {
    z2.col(j) = (a_s.array() - b_s[j]).square() * inv_alpha +
                (a_w.array() - b_w[j]).square() * inv_beta;
  }
  apply_radial_profile(hp.family, z2);
  return z2.matrix();
}

double kernel_eval(const Hyperparams& hp, double gamma2, ExpoGps p1, ExpoGps p2) {
  if (!finite_point(p1) || !finite_point(p2) || !std::isfinite(gamma2) || gamma2 < 0.0) {
    fail(ErrorCode::Input, "kernel_eval received a non-finite input");
  }
  return gamma2 * radial_profile(hp.family, scaled_distance2(hp, p1, p2));
}

KernelDerivatives kernel_derivatives(const Hyperparams& hp, double gamma2, ExpoGps p1,
                                     ExpoGps p2) {
  return kernel_derivatives_chain(hp, gamma2, p1, p2, 0.0, 0.0);
}

KernelDerivatives kernel_derivatives_chain(const Hyperparams& hp, double gamma2, ExpoGps p1,
                                           ExpoGps p2, double ds_dw1, double ds_dw2) {
  if (!is_differentiable(hp.family)) {
    fail(ErrorCode::NonDifferentiableKernel,
         "matern12 kernel has no exposure derivatives");
  }
  if (!finite_point(p1) || !finite_point(p2) || !std::isfinite(gamma2) ||
      !std::isfinite(ds_dw1) || !std::isfinite(ds_dw2)) {
    fail(ErrorCode::Input, "kernel_derivatives received a non-finite input");
  }
  const double dw = p1.w - p2.w;
  const double ds = p1.s - p2.s;
  const double z = std::sqrt(ds * ds / hp.alpha + dw * dw / hp.beta);
  const auto [g, dg] = radial_slope(hp.family, z);

  // Projections of the scaled offset onto each point's tangent direction.
  const double proj1 = dw / hp.beta + ds_dw1 * ds / hp.alpha;
  const double proj2 = dw / hp.beta + ds_dw2 * ds / hp.alpha;
  const double metric = 1.0 / hp.beta + ds_dw1 * ds_dw2 / hp.alpha;
  // proj1 * proj2 = O(z^2), so the ratio vanishes at z = 0.
  const double curvature = z > 0.0 ? dg * proj1 * proj2 / z : 0.0;

  return {-gamma2 * g * proj2, -gamma2 * (curvature + g * metric)};
}

}  // namespace cerfgp
