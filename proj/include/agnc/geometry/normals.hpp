#pragma once

#include <Eigen/Core>

#include "agnc/geometry/kdtree.hpp"
#include "agnc/geometry/point_cloud.hpp"

namespace agnc {

struct NormalOptions {
  int neighbours = 15;  // including the point itself
  Eigen::Vector3d viewpoint = Eigen::Vector3d::Zero();
  /// Neighbourhoods whose middle scatter eigenvalue is below this fraction of
  /// the largest are treated as rank < 2 (collinear or coincident).
  double rank_tolerance = 1e-10;
};

/// PCA normals: the eigenvector of the smallest eigenvalue of the k-NN scatter
/// matrix, flipped to face the viewpoint. Throws DomainError if the cloud has
/// no more than k points.
PointCloud estimate_normals(const PointCloud& cloud, const NormalOptions& options = {});

}  // namespace agnc
