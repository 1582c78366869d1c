#include "cerfgp/balance.hpp"
#include "cerfgp/error.hpp"
#include "cerfgp/gp.hpp"
#include "cerfgp/pipeline.hpp"
#include "cerfgp/tuning.hpp"

#include "helpers.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace cerfgp;

namespace {

TuneGrid small_grid(const Eigen::VectorXd& w) {
  TuneGrid g;
  g.alphas = {0.32, 1.0};
  g.betas = {0.32, 1.0};
  g.ratios = {1.0};
  g.families = {KernelFamily::Matern32};
  g.w_grid = default_grid(w, 10);
  g.engine = Engine::full();
  return g;
}

}  // namespace

TEST(Tune, SingleCandidate) {
  const Dataset d = fixtures::toy_dataset(40, 61);
  const auto surface = fixtures::linear_surface(d);
  TuneGrid g = small_grid(d.w());
  g.alphas = {1.0};
  g.betas = {1.0};
  const auto res = tune(d.design(), surface, g);
  ASSERT_EQ(res.table.size(), 1u);
  EXPECT_EQ(res.best.family, KernelFamily::Matern32);
  EXPECT_EQ(res.best.alpha, 1.0);
  EXPECT_EQ(res.best_rho, res.table[0].rho);
  EXPECT_EQ(res.best_rho, balance_score(d.design(), surface, res.best, g.w_grid, g.engine));
}

TEST(Tune, MatchesExhaustiveReevaluation) {
  const Dataset d = fixtures::toy_dataset(50, 62);
  const auto surface = fixtures::linear_surface(d);
  const TuneGrid g = small_grid(d.w());
  const auto res = tune(d.design(), surface, g);

  double best = 1e300;
  Hyperparams arg{};
  for (double a : g.alphas) {
    for (double b : g.betas) {
      const Hyperparams hp{KernelFamily::Matern32, a, b, 1.0};
      const GramSystem sys(d.w(), surface, hp);
      const auto rep = covariate_balance(pointwise_weights(sys, g.w_grid), d.design(), g.w_grid);
      if (rep.rho_overall < best) {
        best = rep.rho_overall;
        arg = hp;
      }
    }
  }
  EXPECT_NEAR(res.best_rho, best, 1e-12);
  EXPECT_EQ(res.best.alpha, arg.alpha);
  EXPECT_EQ(res.best.beta, arg.beta);
}

TEST(Tune, ArgminAndDeterminism) {
  const Dataset d = fixtures::toy_dataset(40, 63);
  const auto surface = fixtures::linear_surface(d);
  TuneGrid g = small_grid(d.w());
  g.ratios = {0.32, 3.2};
  g.families = {KernelFamily::Gaussian, KernelFamily::Matern52};
  const auto a = tune(d.design(), surface, g);
  const auto b = tune(d.design(), surface, g);
  ASSERT_EQ(a.table.size(), 16u);
  for (std::size_t k = 0; k < a.table.size(); ++k) {
    EXPECT_EQ(a.table[k].rho, b.table[k].rho);
    if (a.table[k].ok) {
      EXPECT_LE(a.best_rho, a.table[k].rho);
    }
  }
  EXPECT_EQ(a.best_rho, b.best_rho);
  ASSERT_FALSE(a.ties.empty());
  EXPECT_EQ(a.ties.front().alpha, a.best.alpha);
}

TEST(Tune, CandidateOrder) {
  TuneGrid g;
  g.alphas = {1.0, 0.1};
  g.betas = {2.0};
  g.ratios = {3.0, 0.5};
  g.families = {KernelFamily::Matern52, KernelFamily::Gaussian};
  g.w_grid = Eigen::VectorXd::LinSpaced(3, 0, 1);
  const auto c = g.candidates();
  ASSERT_EQ(c.size(), 8u);
  // Families in the listed order, then ascending alpha, beta and ratio.
  EXPECT_EQ(c[0].family, KernelFamily::Matern52);
  EXPECT_EQ(c[0].alpha, 0.1);
  EXPECT_EQ(c[0].gamma_over_sigma, 0.5);
  EXPECT_EQ(c[1].gamma_over_sigma, 3.0);
  EXPECT_EQ(c[2].alpha, 1.0);
  EXPECT_EQ(c[4].family, KernelFamily::Gaussian);
}

TEST(Tune, InvalidGrid) {
  TuneGrid g;
  g.alphas = {1.0};
  g.betas = {-1.0};
  g.ratios = {1.0};
  g.families = {KernelFamily::Gaussian};
  g.w_grid = Eigen::VectorXd::LinSpaced(3, 0, 1);
  EXPECT_THROW(g.validate(), Error);
  g.betas = {};
  EXPECT_THROW(g.validate(), Error);
}

TEST(Tune, AllCandidatesFailing) {
  const Dataset d = fixtures::toy_dataset(30, 64);
  const auto surface = fixtures::linear_surface(d);
  TuneGrid g = small_grid(d.w());
  g.alphas = {0.03};
  g.betas = {0.03};
  g.w_grid = Eigen::VectorXd::LinSpaced(3, 500.0, 600.0);
  try {
    tune(d.design(), surface, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TuningFailed);
  }
}

TEST(Tune, OutcomeBlind) {
  const Dataset d = fixtures::toy_dataset(40, 65);
  std::vector<Eigen::Index> perm(40);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
  Eigen::VectorXd y(40);
  for (Eigen::Index i = 0; i < 40; ++i) y[i] = d.y()[perm[static_cast<std::size_t>(i)]];
  AnalysisSettings s;
  s.gps.regressor = RegressorKind::RidgeLinear;
  s.tune.alphas = {0.32, 1.0};
  s.tune.betas = {1.0};
  s.tune.ratios = {0.32, 1.0};
  s.tune.families = {KernelFamily::Matern32};
  s.tune.m = 8;
  const auto a = run_design(d, s);
  const auto b = run_design(d.with_outcomes(y), s);
  ASSERT_TRUE(a.tuning && b.tuning);
  EXPECT_EQ(a.tuning->best_rho, b.tuning->best_rho);
  EXPECT_EQ(a.hp.alpha, b.hp.alpha);
  EXPECT_EQ(a.hp.gamma_over_sigma, b.hp.gamma_over_sigma);
}

TEST(Tune, NnGpEngineAgreesWithFullAtFullNeighborhood) {
  const Dataset d = fixtures::toy_dataset(40, 66);
  const auto surface = fixtures::linear_surface(d);
  TuneGrid g = small_grid(d.w());
  const auto full = tune(d.design(), surface, g);
  g.engine = Engine::nngp(40);
  const auto nn = tune(d.design(), surface, g);
  EXPECT_NEAR(full.best_rho, nn.best_rho, 1e-6);
}

TEST(DefaultGrid, PercentilesAndSpacing) {
  Eigen::VectorXd v(5);
  v << 3.0, 1.0, 4.0, 2.0, 5.0;
  EXPECT_DOUBLE_EQ(percentile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(percentile(v, 50.0), 3.0);
  EXPECT_DOUBLE_EQ(percentile(v, 100.0), 5.0);
  EXPECT_DOUBLE_EQ(percentile(v, 12.5), 1.5);
  const Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(201, 0.0, 200.0);
  const auto g = default_grid(w, 5);
  ASSERT_EQ(g.size(), 5);
  EXPECT_NEAR(g[0], 1.0, 1e-12);
  EXPECT_NEAR(g[4], 199.0, 1e-12);
  EXPECT_NEAR(g[2], 100.0, 1e-12);
}

TEST(DefaultLattice, Contents) {
  EXPECT_EQ(default_alphas(), (std::vector<double>{0.03, 0.1, 0.32, 1, 3.2, 10, 32}));
  EXPECT_EQ(default_betas().size(), 7u);
  EXPECT_EQ(default_ratios(), (std::vector<double>{0.1, 0.32, 1, 3.2, 10}));
  EXPECT_EQ(differentiable_families().size(), 3u);
  EXPECT_EQ(parse_engine("nngp(40)").ell, 40);
  EXPECT_EQ(parse_engine("full-gp").kind, EngineKind::FullGp);
  EXPECT_THROW(parse_engine("nngp(x)"), Error);
}
