#include "cerfgp/nngp.hpp"

#include "cerfgp/error.hpp"
#include "cerfgp/linalg.hpp"
#include "cerfgp/log.hpp"
#include "cerfgp/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cerfgp {

namespace {

Eigen::Index clamp_ell(Eigen::Index ell, Eigen::Index n) {
  if (ell < 1) fail(ErrorCode::Input, "neighbor count must be at least 1");
  if (ell > n) {
    std::ostringstream msg;
    msg << "neighbor count " << ell << " exceeds the " << n << " observed units; using " << n;
    warn(msg.str());
    return n;
  }
  return ell;
}

// Per-unit results at one exposure, kept in memory only for the current grid point.
struct UnitPass {
  std::vector<LocalPrediction> preds;
};

UnitPass predict_all_units(const NnGpSystem& sys, double w) {
  UnitPass pass;
  pass.preds.reserve(static_cast<std::size_t>(sys.size()));
  for (Eigen::Index i = 0; i < sys.size(); ++i) pass.preds.push_back(sys.predict_unit(w, i));
  return pass;
}

AggWeights aggregate_local(const UnitPass& pass, Eigen::Index n_obs, double w, double threshold) {
  AggWeights out{w, Eigen::VectorXd::Zero(n_obs), 0.0};
  for (std::size_t i = 0; i < pass.preds.size(); ++i) {
    const auto& p = pass.preds[i];
    double raw = 0.0;
    double kept = 0.0;
    for (Eigen::Index k = 0; k < p.weights.size(); ++k) {
      raw += p.weights[k];
      if (p.weights[k] >= threshold) kept += p.weights[k];
    }
    out.raw_sum += raw;
    if (!(kept > 1e-12)) {
      std::ostringstream msg;
      msg << "no support at w = " << w << ": every weight of unit " << i
          << " is negligible after truncation";
      fail(ErrorCode::NoSupport, msg.str());
    }
    for (Eigen::Index k = 0; k < p.weights.size(); ++k) {
      if (p.weights[k] >= threshold) {
        out.a_bar[p.neighbors[static_cast<std::size_t>(k)]] += p.weights[k] / kept;
      }
    }
  }
  const auto n_units = static_cast<double>(pass.preds.size());
  out.a_bar /= n_units;
  out.raw_sum /= n_units;
  return out;
}

}  // namespace

NeighborSets neighbor_sets(const Eigen::VectorXd& obs_w, const Eigen::VectorXd& obs_s,
                           const Eigen::VectorXd& query_w, const Eigen::VectorXd& query_s,
                           const Hyperparams& hp, Eigen::Index ell) {
  hp.validate();
  if (obs_w.size() != obs_s.size() || query_w.size() != query_s.size()) {
    fail(ErrorCode::Input, "coordinate lengths differ");
  }
  NeighborSets out;
  out.ell = clamp_ell(ell, obs_w.size());
  const KdTree2 tree(obs_s, obs_w, hp.alpha, hp.beta);
  out.sets.resize(static_cast<std::size_t>(query_w.size()));
  for (Eigen::Index q = 0; q < query_w.size(); ++q) {
    tree.nearest(query_s[q], query_w[q], out.ell, out.sets[static_cast<std::size_t>(q)]);
  }
  return out;
}

NnGpSystem::NnGpSystem(const Eigen::VectorXd& w_obs, GpsSurface surface, const Hyperparams& hp,
                       Eigen::Index ell)
    : coords_(standardize_coords(w_obs, surface.s_obs())),
      surface_(std::move(surface)),
      hp_(hp),
      ell_(0),
      index_(coords_.s_std, coords_.w_std, hp.alpha, hp.beta) {
  hp_.validate();
  ell_ = clamp_ell(ell, coords_.w_std.size());
}

LocalPrediction NnGpSystem::predict_at(double q_w, double q_s, Eigen::Index exclude) const {
  LocalPrediction out;
  const bool drop = exclude >= 0 && exclude < size();
  const Eigen::Index want = drop ? std::min(ell_ + 1, size()) : ell_;
  index_.nearest(q_s, q_w, want, out.neighbors);
  if (drop) {
    auto it = std::find(out.neighbors.begin(), out.neighbors.end(), exclude);
    if (it != out.neighbors.end()) {
      out.neighbors.erase(it);
    } else if (static_cast<Eigen::Index>(out.neighbors.size()) > ell_) {
      out.neighbors.pop_back();
    }
    if (out.neighbors.empty()) fail(ErrorCode::TooFewUnits, "no neighbors left after exclusion");
  }

  const auto k = static_cast<Eigen::Index>(out.neighbors.size());
  Eigen::VectorXd nw(k), ns(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto idx = out.neighbors[static_cast<std::size_t>(j)];
    nw[j] = coords_.w_std[idx];
    ns[j] = coords_.s_std[idx];
  }
  const double r = hp_.ratio2();
  Eigen::MatrixXd b = kernel_matrix(hp_, nw, ns, nw, ns);
  b *= r;
  b.diagonal().array() += 1.0;
  const Eigen::MatrixXd l = robust_cholesky(std::move(b), out.jitter);

  Eigen::VectorXd h(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    h[j] = radial_profile(hp_.family, scaled_distance2(hp_, {nw[j], ns[j]}, {q_w, q_s}));
  }
  out.weights = h;
  cholesky_solve_in_place(l, out.weights);
  out.weights *= r;
  out.variance_unit = std::max(0.0, r + 1.0 - r * h.dot(out.weights));
  return out;
}

LocalPrediction NnGpSystem::predict_unit(double w, Eigen::Index unit) const {
  if (unit < 0 || unit >= size()) {
    fail(ErrorCode::Index, "unit index " + std::to_string(unit) + " out of range");
  }
  if (!std::isfinite(w)) fail(ErrorCode::Input, "query exposure must be finite");
  return predict_at(coords_.map_w(w), coords_.map_s(surface_.at(w, unit)));
}

AggWeights NnGpSystem::weights(double w, double threshold) const {
  if (!std::isfinite(w)) fail(ErrorCode::Input, "query exposure must be finite");
  return aggregate_local(predict_all_units(*this, w), size(), w, threshold);
}

std::vector<AggWeights> NnGpSystem::weights(const Eigen::VectorXd& w_grid, double threshold) const {
  std::vector<AggWeights> out(static_cast<std::size_t>(w_grid.size()));
  parallel_for(out.size(), [&](std::size_t m) {
    out[m] = weights(w_grid[static_cast<Eigen::Index>(m)], threshold);
  });
  return out;
}

std::vector<std::vector<AggWeights>> NnGpSystem::weights_across_ratios(
    const Eigen::VectorXd& w_grid, const std::vector<double>& ratios,
    std::vector<std::string>& errors, double threshold) const {
  const auto n_ratio = ratios.size();
  const auto m_count = static_cast<std::size_t>(w_grid.size());
  std::vector<std::vector<AggWeights>> out(n_ratio, std::vector<AggWeights>(m_count));
  errors.assign(n_ratio, {});
  std::vector<char> failed(n_ratio, 0);
  std::vector<UnitPass> passes(n_ratio);

  std::vector<Eigen::Index> nbrs;
  Eigen::VectorXd nw, ns, h;
  Eigen::MatrixXd h_local, b;
  Eigen::LLT<Eigen::MatrixXd> llt;
  for (std::size_t m = 0; m < m_count; ++m) {
    const double w = w_grid[static_cast<Eigen::Index>(m)];
    for (auto& p : passes) {
      p.preds.clear();
      p.preds.reserve(static_cast<std::size_t>(size()));
    }
    const double q_w = coords_.map_w(w);
    for (Eigen::Index i = 0; i < size(); ++i) {
      const double q_s = coords_.map_s(surface_.at(w, i));
      index_.nearest(q_s, q_w, ell_, nbrs);
      const auto k = static_cast<Eigen::Index>(nbrs.size());
      nw.resize(k);
      ns.resize(k);
      h.resize(k);
      for (Eigen::Index j = 0; j < k; ++j) {
        const auto idx = nbrs[static_cast<std::size_t>(j)];
        nw[j] = coords_.w_std[idx];
        ns[j] = coords_.s_std[idx];
        h[j] = radial_profile(hp_.family, scaled_distance2(hp_, {nw[j], ns[j]}, {q_w, q_s}));
      }
      h_local = kernel_matrix(hp_, nw, ns, nw, ns);
      for (std::size_t t = 0; t < n_ratio; ++t) {
        if (failed[t]) continue;
        const double r = ratios[t] * ratios[t];
        LocalPrediction p;
        p.neighbors = nbrs;
        b = h_local;
        b *= r;
        b.diagonal().array() += 1.0;
        llt.compute(b);
        p.weights = h;
        if (llt.info() == Eigen::Success) {
          llt.solveInPlace(p.weights);
        } else {
          try {
            const Eigen::MatrixXd l = robust_cholesky(b, p.jitter);
            cholesky_solve_in_place(l, p.weights);
          } catch (const Error& e) {
            failed[t] = 1;
            errors[t] = e.what();
            continue;
          }
        }
        p.weights *= r;
        passes[t].preds.push_back(std::move(p));
      }
    }
    for (std::size_t t = 0; t < n_ratio; ++t) {
      if (failed[t]) continue;
      try {
        out[t][m] = aggregate_local(passes[t], size(), w, threshold);
      } catch (const Error& e) {
        failed[t] = 1;
        errors[t] = e.what();
      }
    }
  }
  for (std::size_t t = 0; t < n_ratio; ++t) {
    if (failed[t]) out[t].clear();
  }
  return out;
}

NnGpResult nngp_cerf(const Dataset& data, const GpsSurface& surface, const Hyperparams& hp,
                     Eigen::Index ell, const Eigen::VectorXd& w_grid, double sigma2,
                     const GpOptions& options, bool with_weights) {
  if (surface.size() != data.size()) fail(ErrorCode::Input, "GPS surface does not match dataset");
  if (!w_grid.allFinite()) fail(ErrorCode::Input, "grid must be finite");
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) {
    fail(ErrorCode::Input, "sigma2 must be finite and non-negative");
  }
  const NnGpSystem sys(data.w(), surface, hp, ell);
  const Eigen::VectorXd& y = data.y();
  const double offset = options.center_outcomes ? y.mean() : 0.0;
  const auto n = data.size();
  const double nd = static_cast<double>(n);

  NnGpResult out;
  out.cerf = {w_grid, Eigen::VectorXd(w_grid.size()), Eigen::VectorXd(w_grid.size())};
  const auto m_count = static_cast<std::size_t>(w_grid.size());
  if (with_weights) out.weights.resize(m_count);
  std::vector<double> jitters(m_count, 0.0);

  parallel_for(m_count, [&](std::size_t mi) {
    const auto m = static_cast<Eigen::Index>(mi);
    const UnitPass pass = predict_all_units(sys, w_grid[m]);
    double mean = 0.0;
    double var_sum = 0.0;
    double own_sq = 0.0;
    Eigen::VectorXd total = Eigen::VectorXd::Zero(n);
    for (const auto& p : pass.preds) {
      for (Eigen::Index k = 0; k < p.weights.size(); ++k) {
        const auto j = p.neighbors[static_cast<std::size_t>(k)];
        mean += p.weights[k] * (y[j] - offset);
        total[j] += p.weights[k];
      }
      var_sum += p.variance_unit;
      own_sq += p.weights.squaredNorm();
      jitters[mi] = std::max(jitters[mi], p.jitter);
    }
    out.cerf.r_hat[m] = offset + mean / nd;
    const double var_unit = (var_sum + total.squaredNorm() - own_sq) / (nd * nd);
    out.cerf.sd_r[m] = std::sqrt(std::max(0.0, sigma2 * var_unit));
    if (with_weights) out.weights[mi] = aggregate_local(pass, n, w_grid[m], kDefaultTruncation);
  });
  for (double j : jitters) out.max_jitter = std::max(out.max_jitter, j);
  return out;
}

double nngp_loo_sigma2(const Dataset& data, const GpsSurface& surface, const Hyperparams& hp,
                       Eigen::Index ell, const GpOptions& options) {
  if (data.size() < 3) fail(ErrorCode::TooFewUnits, "leave-one-out variance needs N >= 3");
  if (surface.size() != data.size()) fail(ErrorCode::Input, "GPS surface does not match dataset");
  const auto n = data.size();
  const NnGpSystem sys(data.w(), surface, hp, std::min(ell, n - 1));
  const Eigen::VectorXd& y = data.y();
  const double offset = options.center_outcomes ? y.mean() : 0.0;
  const auto& c = sys.coords();
  Eigen::VectorXd e2(n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t ii) {
    const auto i = static_cast<Eigen::Index>(ii);
    const auto p = sys.predict_at(c.w_std[i], c.s_std[i], i);
    double pred = 0.0;
    for (Eigen::Index k = 0; k < p.weights.size(); ++k) {
      pred += p.weights[k] * (y[p.neighbors[static_cast<std::size_t>(k)]] - offset);
    }
    const double e = y[i] - offset - pred;
    e2[i] = e * e;
  });
  return e2.sum() / static_cast<double>(n - 1);
}

}  // namespace cerfgp
