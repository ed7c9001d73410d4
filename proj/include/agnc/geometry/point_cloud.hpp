#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "agnc/geometry/lie.hpp"

namespace agnc {

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  /// Empty, or one entry per point. Entries with normal_valid == 0 are
  /// placeholders (degenerate neighbourhood) and must not be used.
  std::vector<Eigen::Vector3d> normals;
  std::vector<std::uint8_t> normal_valid;
  /// Isotropic per-point standard deviation (m).
  double sigma = 0.03;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty(); }
  /// Throws DomainError if normals are misaligned or a valid normal is not unit length.
  void validate() const;
};

/// Points mapped through `pose`; normals are rotated.
PointCloud transform(const PointCloud& cloud, const Pose& pose);

/// "x y z" per line; blank lines and lines starting with '#' are skipped.
PointCloud read_xyz(std::istream& in);
/// ASCII PLY with float/double vertex properties; only x, y, z are read.
PointCloud read_ply(std::istream& in);
/// Dispatches on the extension (.ply, anything else is XYZ).
PointCloud read_cloud(const std::filesystem::path& path);
void write_xyz(std::ostream& os, const PointCloud& cloud);

/// 12 numbers, row-major [C | r].
void write_pose(std::ostream& os, const Pose& pose);
Pose parse_pose(const std::vector<double>& values);

/// Centroid per occupied voxel of side `voxel_size`, in ascending voxel order.
/// Normals are dropped.
PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size);

}  // namespace agnc
