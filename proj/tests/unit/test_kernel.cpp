#include "cerfgp/error.hpp"
#include "cerfgp/kernel.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cerfgp;

namespace {

Hyperparams make(KernelFamily f, double alpha, double beta) { return {f, alpha, beta, 1.0}; }

// Central differences of kernel_eval along each point's tangent (1, t).
KernelDerivatives finite_difference(const Hyperparams& hp, double gamma2, ExpoGps p1, ExpoGps p2,
                                    double t1, double t2, double h) {
  auto k = [&](double e1, double e2) {
    return kernel_eval(hp, gamma2, {p1.w + e1, p1.s + t1 * e1}, {p2.w + e2, p2.s + t2 * e2});
  };
  const double d1 = (k(0, h) - k(0, -h)) / (2 * h);
  const double d2 = (k(h, h) - k(h, -h) - k(-h, h) + k(-h, -h)) / (4 * h * h);
  return {d1, d2};
}

bool close(double a, double b, double rel, double abs_floor) {
  return std::abs(a - b) <= std::max(rel * std::max(std::abs(a), std::abs(b)), abs_floor);
}

}  // namespace

TEST(Kernel, UnitAtZeroDistance) {
  for (auto f : kAllFamilies) {
    EXPECT_DOUBLE_EQ(kernel_eval(make(f, 0.7, 2.0), 1.0, {1.2, 0.3}, {1.2, 0.3}), 1.0);
  }
}

TEST(Kernel, ClosedFormValues) {
  EXPECT_NEAR(kernel_eval(make(KernelFamily::Gaussian, 1, 1), 4.0, {1, 0}, {0, 0}), 1.4715178, 1e-7);
  EXPECT_NEAR(kernel_eval(make(KernelFamily::Matern32, 1, 4), 1.0, {2, 0}, {0, 0}), 0.4833577, 1e-7);
  // z = 1 for the remaining families.
  EXPECT_NEAR(kernel_eval(make(KernelFamily::Matern12, 1, 1), 1.0, {1, 0}, {0, 0}), std::exp(-1.0), 1e-15);
  const double a = std::sqrt(5.0);
  EXPECT_NEAR(kernel_eval(make(KernelFamily::Matern52, 1, 1), 1.0, {0, 1}, {0, 0}),
              (1 + a + 5.0 / 3.0) * std::exp(-a), 1e-15);
}

TEST(Kernel, RejectsNonFinite) {
  EXPECT_THROW(kernel_eval(make(KernelFamily::Gaussian, 1, 1), 1.0, {std::nan(""), 0}, {0, 0}), Error);
  EXPECT_THROW((Hyperparams{KernelFamily::Gaussian, -1.0, 1.0, 1.0}.validate()), Error);
}

TEST(Kernel, SymmetricAndMonotone) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (auto f : kAllFamilies) {
    const auto hp = make(f, 0.5, 1.7);
    for (int t = 0; t < 50; ++t) {
      const ExpoGps a{u(rng), u(rng)}, b{u(rng), u(rng)};
      EXPECT_EQ(kernel_eval(hp, 2.0, a, b), kernel_eval(hp, 2.0, b, a));
    }
    double prev = 2.0;
    for (double dw = 0.0; dw < 6.0; dw += 0.05) {
      const double k = kernel_eval(hp, 1.0, {dw, 0.4}, {0.0, 0.0});
      EXPECT_LE(k, prev);
      prev = k;
    }
  }
}

TEST(Kernel, GramMatricesArePositiveSemidefinite) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z(0, 1);
  for (auto f : kAllFamilies) {
    for (int rep = 0; rep < 50; ++rep) {
      Eigen::VectorXd w(20), s(20);
      for (int i = 0; i < 20; ++i) {
        w[i] = z(rng);
        s[i] = z(rng);
      }
      const auto hp = make(f, std::exp(z(rng)), std::exp(z(rng)));
      const Eigen::MatrixXd k = kernel_matrix(hp, w, s, w, s);
      const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k).eigenvalues().minCoeff();
      EXPECT_GE(min_eig, -1e-8);
    }
  }
}

TEST(KernelDerivatives, GaussianHandValues) {
  const auto hp = make(KernelFamily::Gaussian, 1, 1);
  const auto d = kernel_derivatives(hp, 1.0, {1, 0}, {0, 0});
  EXPECT_NEAR(d.d1, 0.7357589, 1e-7);
  EXPECT_NEAR(d.d2, -0.7357589, 1e-7);
  EXPECT_EQ(kernel_derivatives(hp, 1.0, {0.5, 0.2}, {0.5, 1.0}).d1, 0.0);
}

TEST(KernelDerivatives, Matern12Rejected) {
  try {
    kernel_derivatives(make(KernelFamily::Matern12, 1, 1), 1.0, {1, 0}, {0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonDifferentiableKernel);
  }
}

TEST(KernelDerivatives, AntisymmetryAndSymmetry) {
  const auto hp = make(KernelFamily::Matern52, 0.8, 1.3);
  const ExpoGps a{0.4, -0.2}, b{-0.6, 0.5};
  const auto ab = kernel_derivatives(hp, 1.0, a, b);
  const auto ba = kernel_derivatives(hp, 1.0, b, a);
  EXPECT_NEAR(ab.d1, -ba.d1, 1e-15);
  EXPECT_NEAR(ab.d2, ba.d2, 1e-15);
}

TEST(KernelDerivatives, MatchFiniteDifferencesAcrossRandomConfigurations) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::uniform_real_distribution<double> logscale(-1.5, 1.5);
  for (auto f : {KernelFamily::Gaussian, KernelFamily::Matern32, KernelFamily::Matern52}) {
    for (int t = 0; t < 100; ++t) {
      const auto hp = make(f, std::exp(logscale(rng)), std::exp(logscale(rng)));
      const double gamma2 = std::exp(logscale(rng));
      const ExpoGps a{u(rng), u(rng)}, b{u(rng), u(rng)};
      const auto exact = kernel_derivatives(hp, gamma2, a, b);
      const auto fd = finite_difference(hp, gamma2, a, b, 0.0, 0.0, 1e-4);
      EXPECT_TRUE(close(exact.d1, fd.d1, 1e-5, 1e-8)) << to_string(f) << " d1 " << exact.d1 << " " << fd.d1;
      EXPECT_TRUE(close(exact.d2, fd.d2, 1e-5, 1e-7)) << to_string(f) << " d2 " << exact.d2 << " " << fd.d2;

      const double t1 = u(rng), t2 = u(rng);
      const auto chain = kernel_derivatives_chain(hp, gamma2, a, b, t1, t2);
      const auto fdc = finite_difference(hp, gamma2, a, b, t1, t2, 1e-4);
      EXPECT_TRUE(close(chain.d1, fdc.d1, 1e-5, 1e-8)) << to_string(f) << " chain d1";
      EXPECT_TRUE(close(chain.d2, fdc.d2, 1e-5, 1e-7)) << to_string(f) << " chain d2 " << chain.d2 << " " << fdc.d2;
    }
  }
}

TEST(KernelDerivatives, ZeroSlopeChainEqualsPartial) {
  const auto hp = make(KernelFamily::Matern32, 0.4, 2.2);
  const auto p = kernel_derivatives(hp, 1.5, {0.3, 0.1}, {-0.2, 0.7});
  const auto c = kernel_derivatives_chain(hp, 1.5, {0.3, 0.1}, {-0.2, 0.7}, 0.0, 0.0);
  EXPECT_EQ(p.d1, c.d1);
  EXPECT_EQ(p.d2, c.d2);
}
