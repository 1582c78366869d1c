#include "cerfgp/simulation.hpp"

#include "cerfgp/error.hpp"
#include "cerfgp/log.hpp"
#include "cerfgp/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace cerfgp {

std::string_view to_string(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::Cubic: return "cubic";
    case OutcomeKind::Piecewise: return "piecewise";
    case OutcomeKind::Linear: return "linear";
  }
  return "cubic";
}

OutcomeKind parse_outcome_kind(std::string_view name) {
  if (name == "cubic") return OutcomeKind::Cubic;
  if (name == "piecewise") return OutcomeKind::Piecewise;
  if (name == "linear") return OutcomeKind::Linear;
  fail(ErrorCode::Config, "unknown outcome kind '" + std::string(name) +
                              "' (expected cubic, piecewise or linear)");
}

void ScenarioConfig::validate() const {
  if (scenario < 1 || scenario > 6) fail(ErrorCode::Config, "scenario must be between 1 and 6");
  if (n < 10) fail(ErrorCode::Config, "simulated sample size must be at least 10");
}

namespace {

// Exposure loading on (C1, ..., C6).
constexpr double kEta[6] = {0.1, 0.1, -0.1, 0.2, 0.1, 0.1};
constexpr double kOutcomeLoad[6] = {2, 2, 3, -1, 2, 2};

double piecewise_terms(double w) {
  if (w > 2.5 && w < 5.0) return 10.0 * w - 25.0;
  if (w >= 5.0 && w < 10.0) return 25.0;
  if (w >= 10.0 && w < 12.5) return 10.0 * w - 75.0;
  if (w >= 12.5 && w < 17.5) return 2.5 * (w - 12.5) + 50.0;
  if (w >= 17.5) return 62.5;
  return 0.0;
}

double exposure(int scenario, const double* c, double lin, std::mt19937_64& rng) {
  std::normal_distribution<double> noise5(0.0, std::sqrt(5.0));
  switch (scenario) {
    case 1: return 9.0 * lin + 17.0 + noise5(rng);
    case 2: {
      std::student_t_distribution<double> t2(2.0);
      return 15.0 * lin + 22.0 + t2(rng);
    }
    case 3: return 9.0 * lin + 1.5 * c[2] * c[2] + 15.0 + noise5(rng);
    case 4: return 49.0 * std::exp(lin) / (1.0 + std::exp(lin)) - 6.0 + noise5(rng);
    case 5: return 42.0 / (1.0 + std::exp(lin)) - 18.0 + noise5(rng);
    default: {
      std::normal_distribution<double> noise4(0.0, 2.0);
      return 7.0 * std::log(std::max(std::abs(lin), 0.01)) + 13.0 + noise4(rng);
    }
  }
}

double outcome_mean(OutcomeKind kind, const double* c, double w) {
  double load = 0.0;
  for (int r = 0; r < 6; ++r) load += kOutcomeLoad[r] * c[r];
  const double effect = 0.1 - 0.1 * c[0] + 0.1 * c[3] + 0.1 * c[4] + 0.1 * c[2] * c[2];
  switch (kind) {
    case OutcomeKind::Cubic: return -10.0 - 5.0 * load - 5.0 * w * effect + 0.13 * 0.13 * w * w * w;
    case OutcomeKind::Linear: return -10.0 - 5.0 * load - 5.0 * w * effect;
    case OutcomeKind::Piecewise: return -10.0 - load - w * effect + piecewise_terms(w);
  }
  return 0.0;
}

}  // namespace

Dataset gen_dataset(const ScenarioConfig& config) {
  config.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed & 0xffffffffu),
                    static_cast<std::uint32_t>(config.seed >> 32), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  std::uniform_int_distribution<int> level(-2, 2);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  std::normal_distribution<double> outcome_noise(0.0, std::sqrt(10.0));

  const auto n = config.n;
  Eigen::VectorXd y(n), w(n);
  Eigen::MatrixXd c(n, 6);
  for (Eigen::Index i = 0; i < n; ++i) {
    double ci[6];
    for (int r = 0; r < 4; ++r) ci[r] = std_normal(rng);
    ci[4] = level(rng);
    ci[5] = unif(rng);
    double lin = -0.8;
    for (int r = 0; r < 6; ++r) lin += kEta[r] * ci[r];
    w[i] = exposure(config.scenario, ci, lin, rng);
    y[i] = outcome_mean(config.outcome, ci, w[i]) + outcome_noise(rng);
    for (int r = 0; r < 6; ++r) c(i, r) = ci[r];
  }
  return Dataset(std::move(y), std::move(w), std::move(c), {"c1", "c2", "c3", "c4", "c5", "c6"});
}

double true_cerf(double w, OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::Cubic: return -10.0 - w + 0.0169 * w * w * w;
    case OutcomeKind::Linear: return -10.0 - w;
    case OutcomeKind::Piecewise: return -10.0 - 0.2 * w + piecewise_terms(w);
  }
  return 0.0;
}

Eigen::VectorXd true_cerf(const Eigen::VectorXd& w, OutcomeKind kind) {
  return w.unaryExpr([kind](double x) { return true_cerf(x, kind); });
}

Eigen::VectorXd marginal_density(const Eigen::VectorXd& w) {
  const auto n = w.size();
  if (n < 2) fail(ErrorCode::Estimation, "density estimate needs at least two exposures");
  const double sd = std::sqrt((w.array() - w.mean()).square().sum() / static_cast<double>(n - 1));
  if (!(sd > 0.0)) fail(ErrorCode::Estimation, "exposure has zero variance");
  const double h = 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
  const double norm = 1.0 / (static_cast<double>(n) * h * std::sqrt(2.0 * std::numbers::pi));
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out[i] = norm * (-0.5 * ((w.array() - w[i]) / h).square()).exp().sum();
  }
  return out;
}

Eigen::VectorXd iptw_weights(const Eigen::VectorXd& marginal, const Eigen::VectorXd& gps) {
  if (marginal.size() != gps.size()) fail(ErrorCode::Input, "density and GPS lengths differ");
  Eigen::VectorXd wts = marginal.cwiseQuotient(gps);
  if (!wts.allFinite()) fail(ErrorCode::Estimation, "non-finite IPTW weight");
  const double cap = percentile(wts, 99.0);
  wts = wts.cwiseMin(cap);
  if (!(wts.sum() > 0.0)) fail(ErrorCode::Estimation, "all IPTW weights are zero");
  return wts / wts.sum();
}

Eigen::Vector4d weighted_cubic_fit(const Eigen::VectorXd& w, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& weights) {
  const auto n = w.size();
  if (y.size() != n || weights.size() != n) fail(ErrorCode::Input, "cubic fit inputs differ in length");
  if (!(weights.sum() > 0.0)) fail(ErrorCode::Estimation, "all regression weights are zero");
  // Fit in centered and scaled exposure for conditioning, then map back.
  const double center = w.mean();
  const double scale = std::max(w.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::MatrixXd x(n, 4);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = (w[i] - center) / scale;
    const double rw = std::sqrt(std::max(weights[i], 0.0));
    x(i, 0) = rw;
    x(i, 1) = rw * u;
    x(i, 2) = rw * u * u;
    x(i, 3) = rw * u * u * u;
  }
  const Eigen::VectorXd rhs = y.cwiseProduct(weights.cwiseMax(0.0).cwiseSqrt());
  const Eigen::Vector4d b = x.colPivHouseholderQr().solve(rhs);
  // Expand sum_k b_k ((w - center)/scale)^k into raw powers of w.
  const double a = 1.0 / scale;
  const double d = -center / scale;
  Eigen::Vector4d out;
  out[0] = b[0] + b[1] * d + b[2] * d * d + b[3] * d * d * d;
  out[1] = b[1] * a + 2.0 * b[2] * a * d + 3.0 * b[3] * a * d * d;
  out[2] = b[2] * a * a + 3.0 * b[3] * a * a * d;
  out[3] = b[3] * a * a * a;
  return out;
}

CerfEstimate baseline_iptw(const Dataset& data, const GpsSurface& surface,
                           const Eigen::VectorXd& w_grid) {
  if (surface.size() != data.size()) fail(ErrorCode::Input, "GPS surface does not match dataset");
  const Eigen::VectorXd wts = iptw_weights(marginal_density(data.w()), surface.s_obs());
  const Eigen::Vector4d b = weighted_cubic_fit(data.w(), data.y(), wts);
  CerfEstimate out{w_grid, Eigen::VectorXd(w_grid.size()), Eigen::VectorXd::Zero(w_grid.size())};
  for (Eigen::Index m = 0; m < w_grid.size(); ++m) {
    const double x = w_grid[m];
    out.r_hat[m] = b[0] + x * (b[1] + x * (b[2] + x * b[3]));
  }
  return out;
}

namespace {

Eigen::Matrix<double, 1, 6> adjustment_basis(double w, double s) {
  Eigen::Matrix<double, 1, 6> row;
  row << 1.0, w, w * w, s, s * s, w * s;
  return row;
}

}  // namespace

CerfEstimate baseline_adjustment(const Dataset& data, const GpsSurface& surface,
                                 const Eigen::VectorXd& w_grid) {
  if (surface.size() != data.size()) fail(ErrorCode::Input, "GPS surface does not match dataset");
  const auto n = data.size();
  Eigen::MatrixXd x(n, 6);
  for (Eigen::Index i = 0; i < n; ++i) x.row(i) = adjustment_basis(data.w()[i], surface.s_obs()[i]);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  Eigen::VectorXd b;
  if (qr.rank() < 6) {
    warn("GPS adjustment design is rank deficient; using ridge penalty 1e-8");
    Eigen::MatrixXd g = x.transpose() * x;
    g.diagonal().array() += 1e-8;
    b = g.ldlt().solve(x.transpose() * data.y());
  } else {
    b = qr.solve(data.y());
  }
  CerfEstimate out{w_grid, Eigen::VectorXd(w_grid.size()), Eigen::VectorXd::Zero(w_grid.size())};
  for (Eigen::Index m = 0; m < w_grid.size(); ++m) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) acc += adjustment_basis(w_grid[m], surface.at(w_grid[m], i)) * b;
    out.r_hat[m] = acc / static_cast<double>(n);
  }
  return out;
}

CurveMetrics curve_metrics(const Eigen::MatrixXd& estimates, const Eigen::VectorXd& truth) {
  if (estimates.cols() != truth.size()) fail(ErrorCode::Input, "estimate and truth grids differ");
  if (estimates.rows() < 1) fail(ErrorCode::Input, "metrics need at least one replicate");
  CurveMetrics out;
  const Eigen::RowVectorXd mean_curve = estimates.colwise().mean();
  out.abs_bias = (mean_curve - truth.transpose()).cwiseAbs().mean();
  out.mse = (estimates.rowwise() - truth.transpose()).array().square().mean();
  out.rmse = std::sqrt(out.mse);
  return out;
}

}  // namespace cerfgp
