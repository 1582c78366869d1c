#include "cerfgp/changepoint.hpp"

#include "cerfgp/error.hpp"
#include "cerfgp/kdtree.hpp"
#include "cerfgp/linalg.hpp"
#include "cerfgp/log.hpp"
#include "cerfgp/parallel.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <tuple>

namespace cerfgp {

namespace {

std::string side_name(Side side) { return side == Side::Left ? "left" : "right"; }

}  // namespace

struct DerivativeModel::Impl {
  const Dataset& data;
  const GpsSurface& surface;
  Hyperparams hp;
  double sigma2;
  Engine engine;
  bool chain_rule;
  Eigen::Index min_side;

  StandardizedCoords coords;
  double offset = 0.0;
  Eigen::VectorXd y_c;
  double r = 1.0;

  // Full engine: units sorted by exposure, ascending and descending, with the
  // Cholesky factor of B in each order. Any prefix of an order is one side,
  // and its factor is the leading block.
  std::vector<Eigen::Index> asc, desc;
  Eigen::MatrixXd l_asc, l_desc;
  Eigen::VectorXd z_asc, z_desc;

  explicit Impl(const FitContext& ctx)
      : data(ctx.data), surface(ctx.surface), hp(ctx.hp), sigma2(ctx.sigma2), engine(ctx.engine),
        chain_rule(ctx.chain_rule), min_side(ctx.min_side),
        coords(standardize_coords(ctx.data.w(), ctx.surface.s_obs())) {
    hp.validate();
    if (!is_differentiable(hp.family)) {
      fail(ErrorCode::NonDifferentiableKernel,
           "change-point analysis needs a differentiable kernel; matern12 is not");
    }
    if (surface.size() != data.size()) fail(ErrorCode::Input, "GPS surface does not match dataset");
    if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) {
      fail(ErrorCode::Input, "sigma2 must be finite and non-negative");
    }
    if (min_side < 1) fail(ErrorCode::Input, "minimum side size must be at least 1");
    const auto& y = data.y();
    offset = ctx.options.center_outcomes ? y.mean() : 0.0;
    y_c = y.array() - offset;
    r = hp.ratio2();

    const auto n = data.size();
    asc.resize(static_cast<std::size_t>(n));
    std::iota(asc.begin(), asc.end(), Eigen::Index{0});
    const auto& w = data.w();
    std::stable_sort(asc.begin(), asc.end(), [&](Eigen::Index a, Eigen::Index b) { return w[a] < w[b]; });
    desc.assign(asc.rbegin(), asc.rend());

    if (engine.kind == EngineKind::FullGp) {
      factor_order(asc, l_asc, z_asc);
      factor_order(desc, l_desc, z_desc);
    }
  }

  void factor_order(const std::vector<Eigen::Index>& order, Eigen::MatrixXd& l, Eigen::VectorXd& z) const {
    const auto n = static_cast<Eigen::Index>(order.size());
    Eigen::VectorXd pw(n), ps(n), py(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto i = order[static_cast<std::size_t>(k)];
      pw[k] = coords.w_std[i];
      ps[k] = coords.s_std[i];
      py[k] = y_c[i];
    }
    Eigen::MatrixXd b = kernel_matrix(hp, pw, ps, pw, ps);
    b *= r;
    b.diagonal().array() += 1.0;
    double jitter = 0.0;
    l = robust_cholesky(std::move(b), jitter);
    z = py;
    l.triangularView<Eigen::Lower>().solveInPlace(z);
  }

  Eigen::Index count(double w0, Side side) const {
    const auto& w = data.w();
    Eigen::Index c = 0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      if (side == Side::Left ? w[i] <= w0 : w[i] > w0) ++c;
    }
    return c;
  }

  // Query points and tangents of every unit at w0 (standardized coordinates).
  struct Queries {
    std::vector<ExpoGps> q;
    std::vector<double> t;
    double d2_total = 0.0;
  };

  Queries queries(double w0) const {
    const auto n = data.size();
    Queries out;
    out.q.resize(static_cast<std::size_t>(n));
    out.t.resize(static_cast<std::size_t>(n));
    const double qw = coords.map_w(w0);
    const double scale = coords.w_sd / coords.s_sd;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      out.q[k] = {qw, coords.map_s(surface.at(w0, i))};
      out.t[k] = chain_rule ? surface.slope(w0, i) * scale : 0.0;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < out.q.size(); ++i) {
      for (std::size_t k = 0; k < out.q.size(); ++k) {
        total += kernel_derivatives_chain(hp, 1.0, out.q[i], out.q[k], out.t[i], out.t[k]).d2;
      }
    }
    out.d2_total = total;
    return out;
  }

  // Summed cross-covariance between observed point x and every unit's derivative.
  double summed_d1(ExpoGps x, const Queries& qs) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < qs.q.size(); ++i) {
      acc += kernel_derivatives_chain(hp, 1.0, x, qs.q[i], 0.0, qs.t[i]).d1;
    }
    return acc;
  }

  ExpoGps point(Eigen::Index i) const { return {coords.w_std[i], coords.s_std[i]}; }

  std::pair<double, double> side_full(double w0, Side side, const Queries& qs) const {
    const auto n_side = count(w0, side);
    check_size(w0, side, n_side);
    const auto& order = side == Side::Left ? asc : desc;
    const auto& l = side == Side::Left ? l_asc : l_desc;
    const auto& z = side == Side::Left ? z_asc : z_desc;
    Eigen::VectorXd v(n_side);
    for (Eigen::Index k = 0; k < n_side; ++k) v[k] = summed_d1(point(order[static_cast<std::size_t>(k)]), qs);
    l.topLeftCorner(n_side, n_side).triangularView<Eigen::Lower>().solveInPlace(v);
    const double nd = static_cast<double>(data.size());
    const double mean = r * v.dot(z.head(n_side)) / nd;
    const double var = sigma2 * std::max(0.0, r * qs.d2_total - r * r * v.squaredNorm()) / (nd * nd);
    return to_raw(mean, var);
  }

  std::pair<double, double> side_nngp(double w0, Side side, const Queries& qs) const {
    const auto& w = data.w();
    std::vector<Eigen::Index> members;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      if (side == Side::Left ? w[i] <= w0 : w[i] > w0) members.push_back(i);
    }
    const auto n_side = static_cast<Eigen::Index>(members.size());
    check_size(w0, side, n_side);
    Eigen::VectorXd mw(n_side), ms(n_side);
    for (Eigen::Index k = 0; k < n_side; ++k) {
      mw[k] = coords.w_std[members[static_cast<std::size_t>(k)]];
      ms[k] = coords.s_std[members[static_cast<std::size_t>(k)]];
    }
    const KdTree2 tree(ms, mw, hp.alpha, hp.beta);
    const Eigen::Index ell = std::min(engine.ell, n_side);

    // c accumulates each unit's local derivative weights on the side's outcomes.
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n_side);
    std::vector<Eigen::Index> nbrs;
    for (std::size_t i = 0; i < qs.q.size(); ++i) {
      tree.nearest(qs.q[i].s, qs.q[i].w, ell, nbrs);
      const auto k = static_cast<Eigen::Index>(nbrs.size());
      Eigen::VectorXd nw(k), ns(k), delta(k);
      for (Eigen::Index j = 0; j < k; ++j) {
        const auto m = nbrs[static_cast<std::size_t>(j)];
        nw[j] = mw[m];
        ns[j] = ms[m];
        delta[j] = kernel_derivatives_chain(hp, 1.0, {nw[j], ns[j]}, qs.q[i], 0.0, qs.t[i]).d1;
      }
      Eigen::MatrixXd b = kernel_matrix(hp, nw, ns, nw, ns);
      b *= r;
      b.diagonal().array() += 1.0;
      double jitter = 0.0;
      const Eigen::MatrixXd l = robust_cholesky(std::move(b), jitter);
      cholesky_solve_in_place(l, delta);
      for (Eigen::Index j = 0; j < k; ++j) c[nbrs[static_cast<std::size_t>(j)]] += r * delta[j];
    }

    std::vector<Eigen::Index> support;
    for (Eigen::Index k = 0; k < n_side; ++k) {
      if (c[k] != 0.0) support.push_back(k);
    }
    const auto s = static_cast<Eigen::Index>(support.size());
    Eigen::VectorXd cs(s), sw(s), ss(s), ys(s);
    double cu = 0.0;
    for (Eigen::Index j = 0; j < s; ++j) {
      const auto k = support[static_cast<std::size_t>(j)];
      cs[j] = c[k];
      sw[j] = mw[k];
      ss[j] = ms[k];
      ys[j] = y_c[members[static_cast<std::size_t>(k)]];
      cu += cs[j] * summed_d1({sw[j], ss[j]}, qs);
    }
    const double chc = cs.dot(kernel_matrix(hp, sw, ss, sw, ss) * cs);
    const double nd = static_cast<double>(data.size());
    const double mean = cs.dot(ys) / nd;
    const double var_unit = r * qs.d2_total - 2.0 * r * cu + r * chc + cs.squaredNorm();
    return to_raw(mean, sigma2 * std::max(0.0, var_unit) / (nd * nd));
  }

  std::pair<double, double> to_raw(double mean, double var) const {
    return {mean / coords.w_sd, var / (coords.w_sd * coords.w_sd)};
  }

  void check_size(double w0, Side side, Eigen::Index n_side) const {
    if (n_side < min_side) {
      std::ostringstream msg;
      msg << side_name(side) << " side of w0 = " << w0 << " has " << n_side
          << " units; at least " << min_side << " are required";
      fail(ErrorCode::InsufficientSideData, msg.str());
    }
  }

  std::pair<double, double> side(double w0, Side s, const Queries& qs) const {
    return engine.kind == EngineKind::FullGp ? side_full(w0, s, qs) : side_nngp(w0, s, qs);
  }
};

DerivativeModel::DerivativeModel(const FitContext& context) : impl_(std::make_unique<Impl>(context)) {}
DerivativeModel::~DerivativeModel() = default;

Eigen::Index DerivativeModel::side_size(double w0, Side side) const { return impl_->count(w0, side); }

std::pair<double, double> DerivativeModel::side(double w0, Side side) const {
  if (!std::isfinite(w0)) fail(ErrorCode::Input, "w0 must be finite");
  impl_->check_size(w0, side, impl_->count(w0, side));
  return impl_->side(w0, side, impl_->queries(w0));
}

DerivativeEstimate DerivativeModel::both(double w0) const {
  if (!std::isfinite(w0)) fail(ErrorCode::Input, "w0 must be finite");
  DerivativeEstimate out;
  out.w0 = w0;
  out.n_left = impl_->count(w0, Side::Left);
  out.n_right = impl_->count(w0, Side::Right);
  impl_->check_size(w0, Side::Left, out.n_left);
  impl_->check_size(w0, Side::Right, out.n_right);
  const auto qs = impl_->queries(w0);
  std::tie(out.left_mean, out.left_var) = impl_->side(w0, Side::Left, qs);
  std::tie(out.right_mean, out.right_var) = impl_->side(w0, Side::Right, qs);
  return out;
}

std::pair<double, double> one_sided_derivative(const FitContext& context, double w0, Side side) {
  return DerivativeModel(context).side(w0, side);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorCode::Input, "quantile level must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

void find_intervals(ChangePointReport& report) {
  const auto m = report.grid.size();
  const double zq = normal_quantile(0.5 + report.level / 2.0);
  report.in_interval.assign(static_cast<std::size_t>(m), false);
  report.intervals.clear();
  report.points.clear();
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    if (!report.usable[kk]) continue;
    report.in_interval[kk] = std::abs(report.delta_mean[k]) > zq * report.delta_sd[k];
  }
  Eigen::Index k = 0;
  while (k < m) {
    if (!report.in_interval[static_cast<std::size_t>(k)]) {
      ++k;
      continue;
    }
    Eigen::Index end = k;
    while (end + 1 < m && report.in_interval[static_cast<std::size_t>(end + 1)]) ++end;
    Eigen::Index best = k;
    for (Eigen::Index j = k + 1; j <= end; ++j) {
      if (std::abs(report.delta_mean[j]) > std::abs(report.delta_mean[best])) best = j;
    }
    report.intervals.emplace_back(k, end);
    const double dm = report.delta_mean[best];
    report.points.push_back({report.grid[best], dm < 0.0 ? 1 : -1, dm, best});
    k = end + 1;
  }
}

ChangePointReport detect_change_points(const FitContext& context, const Eigen::VectorXd& grid,
                                       double level) {
  if (!(level > 0.0 && level < 1.0)) fail(ErrorCode::Input, "credible level must lie in (0, 1)");
  if (!grid.allFinite()) fail(ErrorCode::Input, "grid must be finite");
  for (Eigen::Index k = 1; k < grid.size(); ++k) {
    if (!(grid[k] > grid[k - 1])) fail(ErrorCode::Input, "grid must be strictly ascending");
  }
  const DerivativeModel model(context);
  const auto m = grid.size();
  ChangePointReport report;
  report.grid = grid;
  report.level = level;
  report.delta_mean = Eigen::VectorXd::Zero(m);
  report.delta_sd = Eigen::VectorXd::Zero(m);
  std::vector<char> usable(static_cast<std::size_t>(m), 0);

  parallel_for(static_cast<std::size_t>(m), [&](std::size_t kk) {
    const auto k = static_cast<Eigen::Index>(kk);
    if (model.side_size(grid[k], Side::Left) < context.min_side ||
        model.side_size(grid[k], Side::Right) < context.min_side) {
      return;
    }
    const auto est = model.both(grid[k]);
    report.delta_mean[k] = est.left_mean - est.right_mean;
    report.delta_sd[k] = std::sqrt(est.left_var + est.right_var);
    usable[kk] = 1;
  });
  report.usable.assign(usable.begin(), usable.end());
  const auto n_usable = std::count(usable.begin(), usable.end(), 1);
  if (n_usable < m) {
    warn(std::to_string(m - n_usable) + " grid point(s) dropped: fewer than " +
         std::to_string(context.min_side) + " units on one side");
  }
  if (n_usable < 3) {
    fail(ErrorCode::GridTooSmall, "change-point detection needs at least 3 usable grid points, got " +
                                      std::to_string(n_usable));
  }
  find_intervals(report);
  return report;
}

}  // namespace cerfgp
