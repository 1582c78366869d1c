#include "cerfgp/error.hpp"
#include "cerfgp/gps.hpp"
#include "cerfgp/regressor.hpp"
#include "cerfgp/simulation.hpp"

#include "helpers.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cerfgp;

namespace {

GpsModel unit_model(double mean_value, double variance) {
  return GpsModel(std::make_shared<RidgeLinear>(mean_value, Eigen::VectorXd::Zero(1)), variance,
                  RegressorKind::RidgeLinear);
}

}  // namespace

TEST(EvalGps, ClosedFormDensities) {
  const auto model = unit_model(2.0, 1.0);
  const Eigen::VectorXd c = Eigen::VectorXd::Zero(1);
  EXPECT_NEAR(eval_gps(model, 2.0, c), 0.3989423, 1e-7);
  EXPECT_NEAR(eval_gps(model, 3.0, c), 0.2419707, 1e-7);
  for (double d : {0.1, 0.7, 2.5}) {
    EXPECT_NEAR(eval_gps(model, 2.0 + d, c), eval_gps(model, 2.0 - d, c), 1e-12);
  }
  EXPECT_THROW(eval_gps(model, std::nan(""), c), Error);
}

TEST(EvalGps, IntegratesToOne) {
  const auto model = unit_model(-1.5, 2.7);
  const Eigen::VectorXd c = Eigen::VectorXd::Zero(1);
  const double sd = std::sqrt(2.7);
  const int steps = 20000;
  const double lo = -1.5 - 8 * sd;
  const double h = 16 * sd / steps;
  double acc = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const double wt = (k == 0 || k == steps) ? 0.5 : 1.0;
    acc += wt * eval_gps(model, lo + k * h, c);
  }
  EXPECT_NEAR(acc * h, 1.0, 1e-6);
}

TEST(FitGps, PerfectlyLinearExposureIsDegenerate) {
  const Dataset d = fixtures::toy_dataset(100, 1);
  const Eigen::VectorXd w = 3.0 * d.c().col(0) - 2.0 * d.c().col(1);
  GpsSettings s;
  s.regressor = RegressorKind::RidgeLinear;
  s.ridge_penalty = 1e-12;
  try {
    fit_gps(d.with_exposures(w), s, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateGps);
  }
}

TEST(FitGps, IndependentNoiseVariance) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z(0.0, 1.0);
  const Eigen::Index n = 2000;
  Eigen::VectorXd y(n), w(n);
  Eigen::MatrixXd c(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    c(i, 0) = z(rng);
    c(i, 1) = z(rng);
    w[i] = 5.0 * z(rng);
    y[i] = z(rng);
  }
  const Dataset d(y, w, c, {"a", "b"});
  GpsSettings s;
  s.regressor = RegressorKind::RidgeLinear;
  EXPECT_NEAR(fit_gps(d, s, 1).residual_variance(), 25.0, 0.15 * 25.0);
  // In-sample residuals of 200 boosting rounds absorb part of the noise.
  s.regressor = RegressorKind::BoostedTrees;
  const double v = fit_gps(d, s, 1).residual_variance();
  EXPECT_GT(v, 0.75 * 25.0);
  EXPECT_LT(v, 25.0);
}

TEST(FitGps, RidgeMatchesNormalEquations) {
  const Dataset d = fixtures::toy_dataset(80, 4);
  const auto fit = RidgeLinear::fit(d.c(), d.w(), 0.0);
  Eigen::MatrixXd x(d.size(), 3);
  x.col(0).setOnes();
  x.rightCols(2) = d.c();
  const Eigen::VectorXd beta = (x.transpose() * x).ldlt().solve(x.transpose() * d.w());
  EXPECT_NEAR(fit.intercept(), beta[0], 1e-10);
  EXPECT_NEAR(fit.slopes()[0], beta[1], 1e-10);
  EXPECT_NEAR(fit.slopes()[1], beta[2], 1e-10);
}

TEST(FitGps, BoostingBeatsConstantOnHeldOutHalf) {
  const Dataset d = gen_dataset({1, OutcomeKind::Cubic, 1000, 5});
  const Eigen::Index half = d.size() / 2;
  const auto model = BoostedTrees::fit(d.c().topRows(half), d.w().head(half), {}, 1);
  const double mean = d.w().head(half).mean();
  double err_model = 0.0, err_const = 0.0;
  for (Eigen::Index i = half; i < d.size(); ++i) {
    const double p = model.predict(d.c().row(i).transpose());
    err_model += (d.w()[i] - p) * (d.w()[i] - p);
    err_const += (d.w()[i] - mean) * (d.w()[i] - mean);
  }
  EXPECT_LT(err_model, err_const);
}

TEST(FitGps, Reproducible) {
  const Dataset d = gen_dataset({1, OutcomeKind::Cubic, 300, 2});
  GpsSettings s;
  s.boosting.subsample = 0.7;
  const auto a = make_surface(fit_gps(d, s, 9), d);
  const auto b = make_surface(fit_gps(d, s, 9), d);
  EXPECT_TRUE(a.s_obs() == b.s_obs());
}

TEST(GpsSurface, ModeValueAndElementwiseOracle) {
  const Dataset d = fixtures::toy_dataset(5, 8);
  GpsSettings s;
  s.regressor = RegressorKind::RidgeLinear;
  const auto model = fit_gps(d, s, 1);
  const double mode_w = model.mean(d.c().row(2).transpose());
  Eigen::VectorXd grid(1);
  grid << mode_w;
  const auto g1 = gps_surface(model, d, grid);
  EXPECT_NEAR(g1.density(0, 2), 1.0 / std::sqrt(2.0 * M_PI * model.residual_variance()), 1e-12);

  Eigen::VectorXd grid3(3);
  grid3 << -1.0, 0.2, 1.4;
  const auto g3 = gps_surface(model, d, grid3);
  for (Eigen::Index m = 0; m < 3; ++m) {
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      EXPECT_NEAR(g3.density(m, i), eval_gps(model, grid3[m], d.c().row(i).transpose()), 1e-12);
    }
  }
}

TEST(GpsSurface, SlopeMatchesFiniteDifference) {
  const Dataset d = fixtures::toy_dataset(20, 12);
  const auto surface = fixtures::linear_surface(d);
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    for (double w : {-1.0, 0.3, 2.0}) {
      const double fd = (surface.at(w + h, i) - surface.at(w - h, i)) / (2 * h);
      EXPECT_NEAR(surface.slope(w, i), fd, 1e-7);
    }
  }
}
