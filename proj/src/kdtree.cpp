#include "cerfgp/kdtree.hpp"

#include "cerfgp/error.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <utility>

namespace cerfgp {

KdTree2::KdTree2(Eigen::VectorXd x, Eigen::VectorXd y, double scale_x, double scale_y,
                 int leaf_size)
    : x_(std::move(x)), y_(std::move(y)), scale_x_(scale_x), scale_y_(scale_y),
      leaf_size_(std::max(1, leaf_size)) {
  if (x_.size() != y_.size()) fail(ErrorCode::Input, "kd-tree coordinate lengths differ");
  if (x_.size() == 0) fail(ErrorCode::Input, "kd-tree needs at least one point");
  if (!(scale_x_ > 0.0) || !(scale_y_ > 0.0)) fail(ErrorCode::Input, "kd-tree scales must be positive");
  perm_.resize(static_cast<std::size_t>(x_.size()));
  std::iota(perm_.begin(), perm_.end(), Eigen::Index{0});
  nodes_.reserve(static_cast<std::size_t>(2 * x_.size() / leaf_size_ + 2));
  build(0, static_cast<std::int32_t>(x_.size()));
}

std::int32_t KdTree2::build(std::int32_t begin, std::int32_t end) {
  Node node{};
  node.lo_x = node.lo_y = std::numeric_limits<double>::infinity();
  node.hi_x = node.hi_y = -std::numeric_limits<double>::infinity();
  for (auto k = begin; k < end; ++k) {
    const auto i = perm_[static_cast<std::size_t>(k)];
    node.lo_x = std::min(node.lo_x, x_[i]);
    node.hi_x = std::max(node.hi_x, x_[i]);
    node.lo_y = std::min(node.lo_y, y_[i]);
    node.hi_y = std::max(node.hi_y, y_[i]);
  }
  node.begin = begin;
  node.end = end;
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= leaf_size_) return id;

  const double spread_x = (node.hi_x - node.lo_x) * (node.hi_x - node.lo_x) / scale_x_;
  const double spread_y = (node.hi_y - node.lo_y) * (node.hi_y - node.lo_y) / scale_y_;
  const Eigen::VectorXd& axis = spread_x >= spread_y ? x_ : y_;
  const auto mid = begin + (end - begin) / 2;
  std::nth_element(perm_.begin() + begin, perm_.begin() + mid, perm_.begin() + end,
                   [&](Eigen::Index a, Eigen::Index b) {
                     return axis[a] < axis[b] || (axis[a] == axis[b] && a < b);
                   });
  const auto left = build(begin, mid);
  const auto right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

double KdTree2::box_distance2(const Node& node, double qx, double qy) const {
  double dx = 0.0, dy = 0.0;
  if (qx < node.lo_x) dx = node.lo_x - qx;
  else if (qx > node.hi_x) dx = qx - node.hi_x;
  if (qy < node.lo_y) dy = node.lo_y - qy;
  else if (qy > node.hi_y) dy = qy - node.hi_y;
  return dx * dx / scale_x_ + dy * dy / scale_y_;
}

std::vector<Eigen::Index> KdTree2::nearest(double qx, double qy, Eigen::Index k) const {
  std::vector<Eigen::Index> out;
  nearest(qx, qy, k, out);
  return out;
}

void KdTree2::nearest(double qx, double qy, Eigen::Index k, std::vector<Eigen::Index>& out) const {
  k = std::min(k, size());
  out.clear();
  if (k <= 0) return;
  using Entry = std::pair<double, Eigen::Index>;  // (distance, index), lexicographic
  std::priority_queue<Entry> heap;                // max-heap: worst on top

  // Explicit stack of (node, lower bound).
  std::vector<std::pair<std::int32_t, double>> stack;
  stack.emplace_back(0, box_distance2(nodes_[0], qx, qy));
  while (!stack.empty()) {
    const auto [id, bound] = stack.back();
    stack.pop_back();
    if (static_cast<Eigen::Index>(heap.size()) == k && bound > heap.top().first) continue;
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.left < 0) {
      for (auto p = node.begin; p < node.end; ++p) {
        const auto i = perm_[static_cast<std::size_t>(p)];
        const Entry e{distance2(i, qx, qy), i};
        if (static_cast<Eigen::Index>(heap.size()) < k) {
          heap.push(e);
        } else if (e < heap.top()) {
          heap.pop();
          heap.push(e);
        }
      }
      continue;
    }
    const Node& l = nodes_[static_cast<std::size_t>(node.left)];
    const Node& r = nodes_[static_cast<std::size_t>(node.right)];
    const double dl = box_distance2(l, qx, qy);
    const double dr = box_distance2(r, qx, qy);
    // Push the farther child first so the nearer one is expanded next.
    if (dl <= dr) {
      stack.emplace_back(node.right, dr);
      stack.emplace_back(node.left, dl);
    } else {
      stack.emplace_back(node.left, dl);
      stack.emplace_back(node.right, dr);
    }
  }
  out.resize(heap.size());
  for (auto p = static_cast<std::ptrdiff_t>(heap.size()) - 1; p >= 0; --p) {
    out[static_cast<std::size_t>(p)] = heap.top().second;
    heap.pop();
  }
}

}  // namespace cerfgp
