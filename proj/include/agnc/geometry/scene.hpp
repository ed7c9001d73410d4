#pragma once

#include <random>

#include "agnc/geometry/lie.hpp"
#include "agnc/geometry/point_cloud.hpp"

namespace agnc {

/// Synthetic hall: floor, two side walls along x with a row of pillars
/// against each, two end walls, and clutter boxes and spheres standing on the
/// floor. Two scans see the x-windows
/// [0, w] and [L - w, L] with w = L / (2 - overlap), so they share the given
/// fraction of their extent.
struct SceneConfig {
  double length = 5.0;  // L, along x (m)
  double width = 3.0;   // along y
  double height = 2.5;  // wall height
  double density = 400.0;  // raw surface samples per m^2 before downsampling
  double noise = 0.01;     // per-axis Gaussian noise (m)
  bool end_walls = false;       // otherwise the hall continues past both scans
  double pillar_spacing = 0.0;  // 0 disables the pillars
  double pillar_size = 0.3;
  int boxes = 8;
  int spheres = 4;
  double overlap = 0.7;
  double voxel = 0.1;
  double sigma = 0.03;  // point covariance scale carried by the clouds
  double max_yaw_deg = 20.0;  // yaw of the true relative pose, uniform in +-
  int normal_neighbours = 15;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

struct ScenePair {
  PointCloud fixed;   // world frame, with normals
  PointCloud moving;  // moving-scan frame
  Pose truth;         // maps moving-frame points into the world: p = C q + r
};

ScenePair generate_scene_pair(const SceneConfig& cfg, std::mt19937_64& rng);

}  // namespace agnc
