#include "cerfgp/changepoint.hpp"
#include "cerfgp/error.hpp"
#include "cerfgp/simulation.hpp"

#include "helpers.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cerfgp;

namespace {

const Hyperparams kHp{KernelFamily::Matern52, 1.0, 0.5, 2.0};

// Posterior mean curve conditioned on one side only, written from the
// definitions with the full-data standardization and outcome mean.
struct SideCurve {
  const Dataset& data;
  const GpsSurface& surface;
  Hyperparams hp;
  fixtures::DenseGp full;
  std::vector<Eigen::Index> members;
  Eigen::MatrixXd b_inv;

  SideCurve(const Dataset& d, const GpsSurface& s, const Hyperparams& h, double w0, Side side)
      : data(d), surface(s), hp(h), full(d, s, h) {
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (side == Side::Left ? d.w()[i] <= w0 : d.w()[i] > w0) members.push_back(i);
    }
    const auto n = static_cast<Eigen::Index>(members.size());
    Eigen::MatrixXd b(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index c = 0; c < n; ++c) {
        const auto i = members[static_cast<std::size_t>(a)], j = members[static_cast<std::size_t>(c)];
        b(a, c) = hp.ratio2() * full.k(full.ws[i], full.ss[i], full.ws[j], full.ss[j]);
      }
    }
    b.diagonal().array() += 1.0;
    b_inv = b.fullPivLu().inverse();
  }

  double operator()(double w) const {
    const auto n = static_cast<Eigen::Index>(members.size());
    Eigen::VectorXd ys(n);
    for (Eigen::Index a = 0; a < n; ++a) ys[a] = full.yc[members[static_cast<std::size_t>(a)]];
    const Eigen::VectorXd alpha = b_inv * ys;
    double acc = 0.0;
    for (Eigen::Index u = 0; u < data.size(); ++u) {
      const double qw = (w - full.w_mean) / full.w_sd;
      const double qs = (surface.at(w, u) - full.s_mean) / full.s_sd;
      for (Eigen::Index a = 0; a < n; ++a) {
        const auto j = members[static_cast<std::size_t>(a)];
        acc += hp.ratio2() * full.k(full.ws[j], full.ss[j], qw, qs) * alpha[a];
      }
    }
    return full.offset + acc / static_cast<double>(data.size());
  }
};

GpsSurface reflected(const Dataset& d, const GpsSurface& s, double sign, double shift) {
  Eigen::VectorXd means(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) means[i] = sign * s.unit_means()[i] + shift;
  return GpsSurface(means, s.variance(), (sign * d.w().array() + shift).matrix());
}

}  // namespace

TEST(OneSidedDerivative, MatchesFiniteDifferenceOfSideCurve) {
  const Dataset d = fixtures::toy_dataset(60, 71);
  const auto surface = fixtures::linear_surface(d);
  const double range = d.w().maxCoeff() - d.w().minCoeff();
  const double h = 1e-3 * range;
  for (double w0 : {-0.4, 0.1, 0.6}) {
    for (Side side : {Side::Left, Side::Right}) {
      const FitContext ctx{d, surface, kHp, 1.0};
      const auto [mean, var] = one_sided_derivative(ctx, w0, side);
      const SideCurve curve(d, surface, kHp, w0, side);
      const double fd = (curve(w0 + h) - curve(w0 - h)) / (2 * h);
      EXPECT_NEAR(mean, fd, 1e-3 * std::abs(fd)) << w0;
      EXPECT_GE(var, 0.0);
    }
  }
}

TEST(OneSidedDerivative, PartialFormHoldsGpsFixed) {
  // With the GPS coordinate frozen the oracle curve is differentiated in w only.
  const Dataset d = fixtures::toy_dataset(50, 72);
  const auto surface = fixtures::linear_surface(d);
  FitContext ctx{d, surface, kHp, 1.0};
  ctx.chain_rule = false;
  const double w0 = 0.2, h = 1e-4;
  const auto [mean, var] = one_sided_derivative(ctx, w0, Side::Left);
  const SideCurve curve(d, surface, kHp, w0, Side::Left);
  // Evaluate the oracle with s pinned at its w0 values.
  auto frozen = [&](double w) {
    const auto n = static_cast<Eigen::Index>(curve.members.size());
    Eigen::VectorXd ys(n);
    for (Eigen::Index a = 0; a < n; ++a) ys[a] = curve.full.yc[curve.members[static_cast<std::size_t>(a)]];
    const Eigen::VectorXd alpha = curve.b_inv * ys;
    double acc = 0.0;
    for (Eigen::Index u = 0; u < d.size(); ++u) {
      const double qw = (w - curve.full.w_mean) / curve.full.w_sd;
      const double qs = (surface.at(w0, u) - curve.full.s_mean) / curve.full.s_sd;
      for (Eigen::Index a = 0; a < n; ++a) {
        const auto j = curve.members[static_cast<std::size_t>(a)];
        acc += kHp.ratio2() * curve.full.k(curve.full.ws[j], curve.full.ss[j], qw, qs) * alpha[a];
      }
    }
    return acc / static_cast<double>(d.size());
  };
  const double fd = (frozen(w0 + h) - frozen(w0 - h)) / (2 * h);
  EXPECT_NEAR(mean, fd, 1e-4 * std::abs(fd) + 1e-8);
}

TEST(OneSidedDerivative, LinearNoiselessData) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::normal_distribution<double> z(0.0, 1.0);
  const Eigen::Index n = 200;
  Eigen::VectorXd y(n), w(n);
  Eigen::MatrixXd c(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    w[i] = u(rng);
    c(i, 0) = z(rng);
    y[i] = 2.0 * w[i];
  }
  const Dataset d(y, w, c, {"c"});
  const auto surface = fixtures::linear_surface(d);
  const FitContext ctx{d, surface, {KernelFamily::Gaussian, 10.0, 3.2, 100.0}, 1e-6};
  for (double w0 : {3.0, 5.0, 7.0}) {
    const auto est = DerivativeModel(ctx).both(w0);
    EXPECT_NEAR(est.left_mean, 2.0, 0.1) << w0;
    EXPECT_NEAR(est.right_mean, 2.0, 0.1) << w0;
    EXPECT_EQ(est.n_left + est.n_right, n);
  }
}

TEST(OneSidedDerivative, InsufficientSideData) {
  const Dataset d = fixtures::toy_dataset(40, 73);
  const auto surface = fixtures::linear_surface(d);
  const FitContext ctx{d, surface, kHp, 1.0};
  try {
    one_sided_derivative(ctx, d.w().minCoeff() - 1.0, Side::Left);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientSideData);
  }
}

TEST(OneSidedDerivative, Matern12Rejected) {
  const Dataset d = fixtures::toy_dataset(40, 74);
  const auto surface = fixtures::linear_surface(d);
  const FitContext ctx{d, surface, {KernelFamily::Matern12, 1.0, 1.0, 1.0}, 1.0};
  try {
    DerivativeModel model(ctx);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonDifferentiableKernel);
  }
}

TEST(NnGpDerivative, FullNeighborhoodMatchesExact) {
  const Dataset d = fixtures::toy_dataset(50, 75);
  const auto surface = fixtures::linear_surface(d);
  FitContext full{d, surface, kHp, 1.3};
  FitContext nn = full;
  nn.engine = Engine::nngp(50);
  const auto a = DerivativeModel(full).both(0.1);
  const auto b = DerivativeModel(nn).both(0.1);
  EXPECT_NEAR(a.left_mean, b.left_mean, 1e-8 * (1 + std::abs(a.left_mean)));
  EXPECT_NEAR(a.right_mean, b.right_mean, 1e-8 * (1 + std::abs(a.right_mean)));
  EXPECT_NEAR(a.left_var, b.left_var, 1e-6 * (1 + a.left_var));
  EXPECT_NEAR(a.right_var, b.right_var, 1e-6 * (1 + a.right_var));
}

TEST(Detect, NormalQuantile) {
  EXPECT_NEAR(normal_quantile(0.975), 1.959964, 1e-6);
  EXPECT_NEAR(normal_quantile(0.5), 0.0, 1e-15);
  EXPECT_THROW(normal_quantile(1.0), Error);
}

TEST(Detect, IntervalsOnHandCurve) {
  ChangePointReport r;
  r.grid = Eigen::VectorXd::LinSpaced(10, 0.0, 9.0);
  r.delta_mean.resize(10);
  r.delta_mean << 0.1, 3.0, 5.0, 2.5, 0.0, -0.2, -4.0, -6.0, 0.3, -3.0;
  r.delta_sd = Eigen::VectorXd::Ones(10);
  r.usable.assign(10, true);
  r.usable[9] = false;
  r.level = 0.95;
  find_intervals(r);
  ASSERT_EQ(r.intervals.size(), 2u);
  EXPECT_EQ(r.intervals[0], (std::pair<Eigen::Index, Eigen::Index>{1, 3}));
  EXPECT_EQ(r.intervals[1], (std::pair<Eigen::Index, Eigen::Index>{6, 7}));
  ASSERT_EQ(r.points.size(), 2u);
  EXPECT_EQ(r.points[0].w, 2.0);
  EXPECT_EQ(r.points[0].sign, -1);  // left slope above right: slope drops
  EXPECT_EQ(r.points[1].w, 7.0);
  EXPECT_EQ(r.points[1].sign, 1);
  EXPECT_FALSE(r.in_interval[9]);
  for (const auto& p : r.points) {
    const auto& iv = r.intervals[static_cast<std::size_t>(&p - r.points.data())];
    EXPECT_GE(p.grid_index, iv.first);
    EXPECT_LE(p.grid_index, iv.second);
  }
}

TEST(Detect, SdAtLeastEachSide) {
  const Dataset d = fixtures::toy_dataset(60, 76);
  const auto surface = fixtures::linear_surface(d);
  const FitContext ctx{d, surface, kHp, 0.8};
  const DerivativeModel model(ctx);
  for (double w0 : {-0.5, 0.0, 0.5}) {
    const auto est = model.both(w0);
    const double sd = std::sqrt(est.left_var + est.right_var);
    EXPECT_GE(sd, std::sqrt(est.left_var));
    EXPECT_GE(sd, std::sqrt(est.right_var));
  }
}

TEST(Detect, ReflectionSwapsSides) {
  const Dataset d = fixtures::toy_dataset(60, 77);
  const auto surface = fixtures::linear_surface(d);
  const Dataset dr = d.with_exposures(-d.w());
  const auto sr = reflected(d, surface, -1.0, 0.0);
  const DerivativeModel a(FitContext{d, surface, kHp, 1.0});
  const DerivativeModel b(FitContext{dr, sr, kHp, 1.0});
  for (double w0 : {-0.35, 0.05, 0.45}) {
    const auto ea = a.both(w0);
    const auto eb = b.both(-w0);
    EXPECT_NEAR(eb.left_mean, -ea.right_mean, 1e-9);
    EXPECT_NEAR(eb.right_mean, -ea.left_mean, 1e-9);
    EXPECT_NEAR(eb.left_var, ea.right_var, 1e-9);
    // Mirroring swaps the sides and negates each slope, so the jump is unchanged.
    EXPECT_NEAR(eb.left_mean - eb.right_mean, ea.left_mean - ea.right_mean, 1e-9);
  }
}

TEST(Detect, ShiftEquivariance) {
  const Dataset d = gen_dataset({1, OutcomeKind::Piecewise, 300, 4});
  GpsSettings gs;
  gs.regressor = RegressorKind::RidgeLinear;
  const auto surface = make_surface(fit_gps(d, gs, 1), d);
  const double shift = 7.25;
  const Dataset ds = d.with_exposures((d.w().array() + shift).matrix());
  const auto ss = reflected(d, surface, 1.0, shift);
  const Hyperparams hp{KernelFamily::Matern32, 1.0, 0.1, 1.0};
  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(30, 2.0, 18.0);
  const auto ra = detect_change_points(FitContext{d, surface, hp, 20.0}, grid);
  const auto rb = detect_change_points(FitContext{ds, ss, hp, 20.0}, (grid.array() + shift).matrix());
  EXPECT_LT(fixtures::max_abs_diff(ra.delta_mean, rb.delta_mean), 1e-8);
  ASSERT_EQ(ra.points.size(), rb.points.size());
  for (std::size_t k = 0; k < ra.points.size(); ++k) {
    EXPECT_EQ(ra.points[k].grid_index, rb.points[k].grid_index);
    EXPECT_NEAR(rb.points[k].w, ra.points[k].w + shift, 1e-12);
  }
}

TEST(Detect, DropsThinEdgesAndRejectsTinyGrids) {
  const Dataset d = fixtures::toy_dataset(40, 78);
  const auto surface = fixtures::linear_surface(d);
  const FitContext ctx{d, surface, kHp, 1.0};
  Eigen::VectorXd grid(5);
  grid << d.w().minCoeff() - 1.0, -0.2, 0.0, 0.2, d.w().maxCoeff() + 1.0;
  const auto rep = detect_change_points(ctx, grid);
  EXPECT_FALSE(rep.usable[0]);
  EXPECT_FALSE(rep.usable[4]);
  EXPECT_TRUE(rep.usable[2]);
  Eigen::VectorXd tiny(4);
  tiny << -10.0, -9.0, 0.0, 9.0;
  try {
    detect_change_points(ctx, tiny);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridTooSmall);
  }
}
