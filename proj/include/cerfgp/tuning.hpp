#pragma once

#include "cerfgp/dataset.hpp"
#include "cerfgp/gps.hpp"
#include "cerfgp/kernel.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace cerfgp {

enum class EngineKind { FullGp, NnGp };

struct Engine {
  EngineKind kind = EngineKind::FullGp;
  Eigen::Index ell = 25;

  static Engine full() { return {EngineKind::FullGp, 0}; }
  static Engine nngp(Eigen::Index ell) { return {EngineKind::NnGp, ell}; }
};

std::string to_string(const Engine& engine);
/// Accepts "full-gp", "nngp" (ell 25) and "nngp(<ell>)".
Engine parse_engine(const std::string& text);

struct TuneGrid {
  std::vector<double> alphas;
  std::vector<double> betas;
  std::vector<double> ratios;
  std::vector<KernelFamily> families;
  Eigen::VectorXd w_grid;
  Engine engine;

  void validate() const;
  /// Candidates in iteration order: family, then alpha, beta, ratio ascending.
  std::vector<Hyperparams> candidates() const;
};

std::vector<double> default_alphas();
std::vector<double> default_betas();
std::vector<double> default_ratios();
std::vector<KernelFamily> differentiable_families();

/// M equally spaced points between the 0.5 and 99.5 percentiles of w.
Eigen::VectorXd default_grid(const Eigen::VectorXd& w, Eigen::Index m = 100);
/// Linear-interpolation percentile (q in [0, 100]).
double percentile(Eigen::VectorXd values, double q);

struct TuneRow {
  Hyperparams hp;
  double rho = 0.0;
  bool ok = false;
  std::string error;
};

struct TuneResult {
  Hyperparams best;
  double best_rho = 0.0;
  std::vector<TuneRow> table;
  std::vector<Hyperparams> ties;
};

/// Overall balance score of one candidate; throws on failure.
double balance_score(const DesignView& design, const GpsSurface& surface, const Hyperparams& hp,
                     const Eigen::VectorXd& w_grid, const Engine& engine);

/// Minimizes the overall balance score over the lattice. Reads no outcomes.
TuneResult tune(const DesignView& design, const GpsSurface& surface, const TuneGrid& grid);

}  // namespace cerfgp
