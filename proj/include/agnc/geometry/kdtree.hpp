#pragma once

#include <vector>

#include <Eigen/Core>

namespace agnc {

/// Exact Euclidean nearest-neighbour search over a fixed point set.
///
/// Ties are resolved toward the lowest point index, so results coincide with a
/// brute-force scan that keeps the first minimum. Queries are const and may run
/// concurrently once the tree is built.
class KdTree {
 public:
  /// Throws DomainError for an empty point set.
  explicit KdTree(std::vector<Eigen::Vector3d> points);

  std::size_t size() const { return points_.size(); }
  const Eigen::Vector3d& point(int i) const { return points_[i]; }

  /// Index of the nearest point; the squared distance is written to `dist2` if given.
  int nearest(const Eigen::Vector3d& query, double* dist2 = nullptr) const;
  /// The min(k, size) nearest points ordered by (distance, index).
  std::vector<int> k_nearest(const Eigen::Vector3d& query, int k) const;

 private:
  struct Node {
    int begin = 0;  // range in order_
    int end = 0;
    int axis = -1;  // -1 for a leaf
    double split = 0.0;
    int left = -1;
    int right = -1;
  };

  int build(int begin, int end);

  std::vector<Eigen::Vector3d> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

}  // namespace agnc
