#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>
#include <string_view>

namespace cerfgp {

enum class KernelFamily { Gaussian, Matern12, Matern32, Matern52 };

inline constexpr std::array<KernelFamily, 4> kAllFamilies{
    KernelFamily::Gaussian, KernelFamily::Matern12, KernelFamily::Matern32,
    KernelFamily::Matern52};

std::string_view to_string(KernelFamily family);
KernelFamily parse_family(std::string_view name);

/// Matern-1/2 sample paths are not mean-square differentiable.
constexpr bool is_differentiable(KernelFamily family) {
  return family != KernelFamily::Matern12;
}

/// Kernel configuration. alpha scales the GPS coordinate, beta the exposure
/// coordinate (both act on squared differences); gamma_over_sigma is the
/// signal-to-noise ratio that, together with the scales, fully determines the
/// posterior mean.
struct Hyperparams {
  KernelFamily family = KernelFamily::Gaussian;
  double alpha = 1.0;
  double beta = 1.0;
  double gamma_over_sigma = 1.0;

  double ratio2() const { return gamma_over_sigma * gamma_over_sigma; }
  void validate() const;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

std::string describe(const Hyperparams& hp);

/// A point on the (exposure, GPS) plane.
struct ExpoGps {
  double w = 0.0;
  double s = 0.0;
};

/// Unit-amplitude radial profile h evaluated from the squared scaled distance.
double radial_profile(KernelFamily family, double z2);

/// Squared scaled distance (s - s')^2 / alpha + (w - w')^2 / beta.
inline double scaled_distance2(const Hyperparams& hp, ExpoGps a, ExpoGps b) {
  const double ds = a.s - b.s;
  const double dw = a.w - b.w;
  return ds * ds / hp.alpha + dw * dw / hp.beta;
}

/// Replaces squared scaled distances by h(z), elementwise.
void apply_radial_profile(KernelFamily family, Eigen::ArrayXXd& z2);

/// Unit-amplitude kernel matrix h(z) between point sets a (rows) and b
/// (columns), each given as exposure and GPS coordinate vectors.
Eigen::MatrixXd kernel_matrix(const Hyperparams& hp, const Eigen::VectorXd& a_w,
                              const Eigen::VectorXd& a_s, const Eigen::VectorXd& b_w,
                              const Eigen::VectorXd& b_s);

/// gamma2 * h(z).
double kernel_eval(const Hyperparams& hp, double gamma2, ExpoGps p1, ExpoGps p2);

struct KernelDerivatives {
  double d1 = 0.0;  ///< dk / dw'  (derivative in the second argument's exposure)
  double d2 = 0.0;  ///< d^2 k / dw dw'
};

/// Exposure derivatives holding both GPS coordinates fixed.
KernelDerivatives kernel_derivatives(const Hyperparams& hp, double gamma2, ExpoGps p1,
                                     ExpoGps p2);

/// Directional variant: the exposure derivative at each point moves along the
/// tangent (1, ds/dw). With zero GPS slopes this reduces to kernel_derivatives;
/// non-zero slopes give the full chain rule through the GPS surface.
KernelDerivatives kernel_derivatives_chain(const Hyperparams& hp, double gamma2, ExpoGps p1,
                                           ExpoGps p2, double ds_dw1, double ds_dw2);

}  // namespace cerfgp
