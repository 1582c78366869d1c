#include "cerfgp/tuning.hpp"

#include "cerfgp/balance.hpp"
#include "cerfgp/error.hpp"
#include "cerfgp/gp.hpp"
#include "cerfgp/nngp.hpp"
#include "cerfgp/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <regex>
#include <sstream>

namespace cerfgp {

std::string to_string(const Engine& engine) {
  if (engine.kind == EngineKind::FullGp) return "full-gp";
  return "nngp(" + std::to_string(engine.ell) + ")";
}

Engine parse_engine(const std::string& text) {
  if (text == "full-gp" || text == "full") return Engine::full();
  if (text == "nngp") return Engine::nngp(25);
  static const std::regex pattern(R"(nngp\((\d+)\))");
  std::smatch match;
  if (std::regex_match(text, match, pattern)) {
    const long ell = std::stol(match[1].str());
    if (ell < 1) fail(ErrorCode::Config, "nngp neighbor count must be at least 1");
    return Engine::nngp(ell);
  }
  fail(ErrorCode::Config, "unknown engine '" + text + "' (expected full-gp or nngp(<ell>))");
}

void TuneGrid::validate() const {
  auto check_axis = [](const std::vector<double>& axis, const char* name) {
    if (axis.empty()) fail(ErrorCode::Config, std::string("tuning axis ") + name + " is empty");
    for (double v : axis) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        fail(ErrorCode::Config, std::string("tuning axis ") + name + " has a non-positive value");
      }
    }
  };
  check_axis(alphas, "alphas");
  check_axis(betas, "betas");
  check_axis(ratios, "ratios");
  if (families.empty()) fail(ErrorCode::Config, "tuning needs at least one kernel family");
  if (w_grid.size() < 1 || !w_grid.allFinite()) fail(ErrorCode::Config, "tuning grid is empty or non-finite");
  if (engine.kind == EngineKind::NnGp && engine.ell < 1) {
    fail(ErrorCode::Config, "nngp neighbor count must be at least 1");
  }
}

std::vector<Hyperparams> TuneGrid::candidates() const {
  auto sorted = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  const auto as = sorted(alphas);
  const auto bs = sorted(betas);
  const auto rs = sorted(ratios);
  std::vector<Hyperparams> out;
  out.reserve(families.size() * as.size() * bs.size() * rs.size());
  for (auto f : families)
    for (double a : as)
      for (double b : bs)
        for (double r : rs) out.push_back({f, a, b, r});
  return out;
}

std::vector<double> default_alphas() { return {0.03, 0.1, 0.32, 1, 3.2, 10, 32}; }
std::vector<double> default_betas() { return default_alphas(); }
std::vector<double> default_ratios() { return {0.1, 0.32, 1, 3.2, 10}; }
std::vector<KernelFamily> differentiable_families() {
  return {KernelFamily::Gaussian, KernelFamily::Matern32, KernelFamily::Matern52};
}

double percentile(Eigen::VectorXd values, double q) {
  if (values.size() == 0) fail(ErrorCode::Input, "percentile of an empty vector");
  std::sort(values.data(), values.data() + values.size());
  const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<Eigen::Index>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Eigen::VectorXd default_grid(const Eigen::VectorXd& w, Eigen::Index m) {
  if (m < 2) fail(ErrorCode::Config, "grid needs at least two points");
  return Eigen::VectorXd::LinSpaced(m, percentile(w, 0.5), percentile(w, 99.5));
}

double balance_score(const DesignView& design, const GpsSurface& surface, const Hyperparams& hp,
                     const Eigen::VectorXd& w_grid, const Engine& engine) {
  std::vector<AggWeights> weights;
  if (engine.kind == EngineKind::FullGp) {
    const GramSystem sys(design.w, surface, hp);
    weights = pointwise_weights(sys, w_grid);
  } else {
    const NnGpSystem sys(design.w, surface, hp, engine.ell);
    weights = sys.weights(w_grid);
  }
  return covariate_balance(weights, design, w_grid).rho_overall;
}

TuneResult tune(const DesignView& design, const GpsSurface& surface, const TuneGrid& grid) {
  grid.validate();
  if (surface.size() != design.size()) fail(ErrorCode::Input, "GPS surface does not match design");
  const auto cands = grid.candidates();
  TuneResult out;
  out.table.resize(cands.size());
  for (std::size_t k = 0; k < cands.size(); ++k) out.table[k].hp = cands[k];

  auto record_failure = [](TuneRow& row, const std::string& message) {
    row.ok = false;
    row.rho = std::numeric_limits<double>::quiet_NaN();
    row.error = message;
  };
  auto record_score = [&](TuneRow& row, const std::vector<AggWeights>& weights) {
    try {
      row.rho = covariate_balance(weights, design, grid.w_grid).rho_overall;
      row.ok = std::isfinite(row.rho);
      if (!row.ok) row.error = "non-finite balance score";
    } catch (const Error& e) {
      record_failure(row, e.what());
    }
  };

  // Candidates sharing (family, alpha, beta) are contiguous; the ratio axis
  // varies fastest.
  const std::size_t n_ratio = grid.ratios.size();
  const std::size_t n_groups = cands.size() / n_ratio;
  std::vector<double> ratios(n_ratio);
  for (std::size_t t = 0; t < n_ratio; ++t) ratios[t] = cands[t].gamma_over_sigma;

  parallel_for(n_groups, [&](std::size_t g) {
    const std::size_t first = g * n_ratio;
    if (grid.engine.kind == EngineKind::NnGp) {
      try {
        const NnGpSystem sys(design.w, surface, cands[first], grid.engine.ell);
        std::vector<std::string> errors;
        const auto all = sys.weights_across_ratios(grid.w_grid, ratios, errors);
        for (std::size_t t = 0; t < n_ratio; ++t) {
          if (all[t].empty()) {
            record_failure(out.table[first + t], errors[t]);
          } else {
            record_score(out.table[first + t], all[t]);
          }
        }
      } catch (const Error& e) {
        for (std::size_t t = 0; t < n_ratio; ++t) record_failure(out.table[first + t], e.what());
      }
      return;
    }
    for (std::size_t t = 0; t < n_ratio; ++t) {
      auto& row = out.table[first + t];
      try {
        const GramSystem sys(design.w, surface, row.hp);
        record_score(row, pointwise_weights(sys, grid.w_grid));
      } catch (const Error& e) {
        record_failure(row, e.what());
      }
    }
  });

  std::size_t best = out.table.size();
  for (std::size_t k = 0; k < out.table.size(); ++k) {
    if (!out.table[k].ok) continue;
    if (best == out.table.size() || out.table[k].rho < out.table[best].rho) best = k;
  }
  if (best == out.table.size()) {
    std::ostringstream msg;
    msg << "all " << out.table.size() << " tuning candidates failed";
    for (std::size_t k = 0; k < std::min<std::size_t>(out.table.size(), 5); ++k) {
      msg << "; " << describe(out.table[k].hp) << ": " << out.table[k].error;
    }
    fail(ErrorCode::TuningFailed, msg.str());
  }
  out.best = out.table[best].hp;
  out.best_rho = out.table[best].rho;
  for (const auto& row : out.table) {
    if (row.ok && row.rho - out.best_rho <= 1e-12) out.ties.push_back(row.hp);
  }
  return out;
}

}  // namespace cerfgp
