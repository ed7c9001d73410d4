#include "agnc/geometry/normals.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "agnc/errors.hpp"

namespace agnc {

PointCloud estimate_normals(const PointCloud& cloud, const NormalOptions& options) {
  const int k = options.neighbours;
  if (k < 3) throw DomainError("normal estimation needs at least 3 neighbours");
  if (cloud.size() <= static_cast<std::size_t>(k)) {
    throw DomainError(fmt::format("normal estimation needs more than {} points, got {}", k,
                                  cloud.size()));
  }
  const KdTree tree(cloud.points);
  PointCloud out = cloud;
  out.normals.assign(cloud.size(), Eigen::Vector3d::Zero());
  out.normal_valid.assign(cloud.size(), 0);

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d& p = cloud.points[i];
    const std::vector<int> nn = tree.k_nearest(p, k);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (int j : nn) mean += cloud.points[j];
    mean /= static_cast<double>(nn.size());
    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (int j : nn) {
      const Eigen::Vector3d d = cloud.points[j] - mean;
      scatter += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
    const Eigen::Vector3d lambda = eig.eigenvalues();
    if (!(lambda[2] > 0.0) || lambda[1] <= options.rank_tolerance * lambda[2]) continue;

    Eigen::Vector3d n = eig.eigenvectors().col(0).normalized();
    if (n.dot(options.viewpoint - p) < 0.0) n = -n;
    out.normals[i] = n;
    out.normal_valid[i] = 1;
  }
  return out;
}

}  // namespace agnc
