#include "cerfgp/regressor.hpp"

#include "cerfgp/error.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace cerfgp {

Eigen::VectorXd MeanRegressor::predict_all(const Eigen::MatrixXd& c) const {
  Eigen::VectorXd out(c.rows());
  for (Eigen::Index i = 0; i < c.rows(); ++i) out[i] = predict(c.row(i).transpose());
  return out;
}

namespace {

struct NodeStats {
  double sum = 0.0;
  int count = 0;
};

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

}  // namespace

BoostedTrees BoostedTrees::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& target,
                               const BoostingSettings& settings, std::uint64_t seed) {
  const auto n = static_cast<int>(x.rows());
  const auto p = static_cast<int>(x.cols());
  if (n == 0 || target.size() != n) fail(ErrorCode::Input, "boosting: empty or mismatched data");
  if (settings.rounds < 0 || settings.max_depth < 1 || settings.min_leaf < 1 ||
      !(settings.learning_rate > 0.0) || !(settings.subsample > 0.0 && settings.subsample <= 1.0)) {
    fail(ErrorCode::Config, "boosting: invalid settings");
  }

  // Presorted row order per feature; stable so ties keep row order.
  std::vector<std::vector<int>> order(static_cast<std::size_t>(p));
  for (int f = 0; f < p; ++f) {
    auto& idx = order[static_cast<std::size_t>(f)];
    idx.resize(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return x(a, f) < x(b, f); });
  }

  BoostedTrees model;
  model.base_ = target.mean();
  Eigen::VectorXd pred = Eigen::VectorXd::Constant(n, model.base_);
  Eigen::VectorXd resid(n);
  std::vector<int> node_of(static_cast<std::size_t>(n));
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(settings.subsample);

  for (int round = 0; round < settings.rounds; ++round) {
    resid = target - pred;
    // -1 marks rows excluded from this round's sample.
    for (int i = 0; i < n; ++i) {
      node_of[static_cast<std::size_t>(i)] =
          (settings.subsample < 1.0 && !keep(rng)) ? -1 : 0;
    }

    Tree tree(1);
    std::vector<int> frontier{0};
    for (int depth = 0; depth < settings.max_depth && !frontier.empty(); ++depth) {
      // Node totals for the current frontier.
      std::vector<NodeStats> total(tree.size());
      for (int i = 0; i < n; ++i) {
        const int k = node_of[static_cast<std::size_t>(i)];
        if (k < 0) continue;
        total[static_cast<std::size_t>(k)].sum += resid[i];
        total[static_cast<std::size_t>(k)].count += 1;
      }
      std::vector<SplitCandidate> best(tree.size());

      for (int f = 0; f < p; ++f) {
        std::vector<NodeStats> left(tree.size());
        std::vector<double> last_value(tree.size(), 0.0);
        std::vector<bool> has_last(tree.size(), false);
        for (int i : order[static_cast<std::size_t>(f)]) {
          const int k = node_of[static_cast<std::size_t>(i)];
          if (k < 0 || tree[static_cast<std::size_t>(k)].feature != -1) continue;
          const auto ks = static_cast<std::size_t>(k);
          const double v = x(i, f);
          // Evaluate the boundary between the previous distinct value and v.
          if (has_last[ks] && v > last_value[ks]) {
            const auto& L = left[ks];
            const auto& T = total[ks];
            const int nr = T.count - L.count;
            if (L.count >= settings.min_leaf && nr >= settings.min_leaf) {
              const double sr = T.sum - L.sum;
              const double gain = L.sum * L.sum / L.count + sr * sr / nr -
                                  T.sum * T.sum / T.count;
              if (gain > best[ks].gain + 1e-12) {
                best[ks] = {gain, f, 0.5 * (last_value[ks] + v)};
              }
            }
          }
          left[ks].sum += resid[i];
          left[ks].count += 1;
          last_value[ks] = v;
          has_last[ks] = true;
        }
      }

      std::vector<int> next;
      for (int k : frontier) {
        const auto ks = static_cast<std::size_t>(k);
        if (best[ks].feature < 0) continue;
        const int l = static_cast<int>(tree.size());
        tree[ks].feature = best[ks].feature;
        tree[ks].threshold = best[ks].threshold;
        tree[ks].left = l;
        tree[ks].right = l + 1;
        tree.emplace_back();
        tree.emplace_back();
        next.push_back(l);
        next.push_back(l + 1);
      }
      if (next.empty()) break;
      for (int i = 0; i < n; ++i) {
        auto& k = node_of[static_cast<std::size_t>(i)];
        if (k < 0) continue;
        const auto& node = tree[static_cast<std::size_t>(k)];
        if (node.feature >= 0) k = x(i, node.feature) <= node.threshold ? node.left : node.right;
      }
      frontier = std::move(next);
    }

    // Leaf values: shrunken mean residual of sampled rows.
    std::vector<NodeStats> leaf(tree.size());
    for (int i = 0; i < n; ++i) {
      const int k = node_of[static_cast<std::size_t>(i)];
      if (k < 0) continue;
      leaf[static_cast<std::size_t>(k)].sum += resid[i];
      leaf[static_cast<std::size_t>(k)].count += 1;
    }
    for (std::size_t k = 0; k < tree.size(); ++k) {
      if (tree[k].feature == -1 && leaf[k].count > 0) {
        tree[k].value = settings.learning_rate * leaf[k].sum / leaf[k].count;
      }
    }
    model.trees_.push_back(std::move(tree));
    const auto& fitted = model.trees_.back();
    for (int i = 0; i < n; ++i) {
      int k = 0;
      while (fitted[static_cast<std::size_t>(k)].feature >= 0) {
        const auto& node = fitted[static_cast<std::size_t>(k)];
        k = x(i, node.feature) <= node.threshold ? node.left : node.right;
      }
      pred[i] += fitted[static_cast<std::size_t>(k)].value;
    }
  }
  return model;
}

double BoostedTrees::predict(const Eigen::Ref<const Eigen::VectorXd>& c) const {
  double out = base_;
  for (const auto& tree : trees_) {
    int k = 0;
    while (tree[static_cast<std::size_t>(k)].feature >= 0) {
      const auto& node = tree[static_cast<std::size_t>(k)];
      k = c[node.feature] <= node.threshold ? node.left : node.right;
    }
    out += tree[static_cast<std::size_t>(k)].value;
  }
  return out;
}

RidgeLinear RidgeLinear::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& target,
                             double penalty) {
  if (x.rows() == 0 || target.size() != x.rows()) {
    fail(ErrorCode::Input, "ridge: empty or mismatched data");
  }
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double t_mean = target.mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  Eigen::MatrixXd gram = xc.transpose() * xc;
  gram.diagonal().array() += penalty;
  Eigen::VectorXd slopes = gram.ldlt().solve(xc.transpose() * (target.array() - t_mean).matrix());
  const double intercept = t_mean - x_mean.dot(slopes);
  return RidgeLinear(intercept, std::move(slopes));
}

double RidgeLinear::predict(const Eigen::Ref<const Eigen::VectorXd>& c) const {
  return intercept_ + slopes_.dot(c);
}

}  // namespace cerfgp
