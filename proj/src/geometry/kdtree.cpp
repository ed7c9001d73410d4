#include "agnc/geometry/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <utility>

#include "agnc/errors.hpp"

namespace agnc {

namespace {

constexpr int kLeafSize = 10;

using Candidate = std::pair<double, int>;  // (squared distance, index), ordered lexicographically

}  // namespace

KdTree::KdTree(std::vector<Eigen::Vector3d> points) : points_(std::move(points)) {
  if (points_.empty()) throw DomainError("cannot build a kd-tree over an empty cloud");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * points_.size() / kLeafSize + 1);
  build(0, static_cast<int>(points_.size()));
}

int KdTree::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({begin, end, -1, 0.0, -1, -1});
  if (end - begin <= kLeafSize) return id;

  Eigen::Vector3d lo = points_[order_[begin]];
  Eigen::Vector3d hi = lo;
  for (int i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all points coincide

  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     const double ca = points_[a][axis];
                     const double cb = points_[b][axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  const double split = points_[order_[mid]][axis];
  const int left = build(begin, mid);
  const int right = build(mid, end);
  Node& node = nodes_[id];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

int KdTree::nearest(const Eigen::Vector3d& query, double* dist2) const {
  Candidate best{std::numeric_limits<double>::infinity(), -1};
  // Explicit stack of (node, lower bound on squared distance).
  std::vector<std::pair<int, double>> stack{{0, 0.0}};
  while (!stack.empty()) {
    const auto [id, bound] = stack.back();
    stack.pop_back();
    if (bound > best.first) continue;
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = order_[i];
        const Candidate c{(points_[idx] - query).squaredNorm(), idx};
        if (c < best) best = c;
      }
      continue;
    }
    const double diff = query[node.axis] - node.split;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    stack.emplace_back(far, diff * diff);
    stack.emplace_back(near, 0.0);
  }
  if (dist2) *dist2 = best.first;
  return best.second;
}

std::vector<int> KdTree::k_nearest(const Eigen::Vector3d& query, int k) const {
  const auto want = static_cast<std::size_t>(std::clamp<long>(k, 0, static_cast<long>(size())));
  std::priority_queue<Candidate> heap;  // worst candidate on top
  auto worst = [&] {
    return heap.size() < want ? std::numeric_limits<double>::infinity() : heap.top().first;
  };
  if (want == 0) return {};

  std::vector<std::pair<int, double>> stack{{0, 0.0}};
  while (!stack.empty()) {
    const auto [id, bound] = stack.back();
    stack.pop_back();
    if (bound > worst()) continue;
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = order_[i];
        const Candidate c{(points_[idx] - query).squaredNorm(), idx};
        if (heap.size() < want) {
          heap.push(c);
        } else if (c < heap.top()) {
          heap.pop();
          heap.push(c);
        }
      }
      continue;
    }
    const double diff = query[node.axis] - node.split;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    stack.emplace_back(far, diff * diff);
    stack.emplace_back(near, 0.0);
  }
  std::vector<int> out(heap.size());
  for (auto i = static_cast<long>(out.size()) - 1; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = heap.top().second;
    heap.pop();
  }
  return out;
}

}  // namespace agnc
