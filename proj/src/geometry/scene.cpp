#include "agnc/geometry/scene.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <fmt/format.h>

#include "agnc/errors.hpp"
#include "agnc/geometry/normals.hpp"

namespace agnc {

namespace {

struct Box {
  Eigen::Vector3d center;  // center of the footprint, on the floor
  Eigen::Vector3d half;    // half extents
  double yaw = 0.0;
};

struct Sphere {
  Eigen::Vector3d center;
  double radius = 0.0;
};

struct Room {
  std::vector<Box> pillars;
  std::vector<Box> boxes;
  std::vector<Sphere> spheres;
};

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

long sample_count(double area, double density, Rng& rng) {
  // Poisson count keeps the expected density exact for small patches.
  return std::poisson_distribution<long>(area * density)(rng);
}

// Samples on the rectangle origin + s u + t v, s, t in [0, 1].
void sample_rect(const Eigen::Vector3d& origin, const Eigen::Vector3d& u, const Eigen::Vector3d& v,
                 double density, Rng& rng, std::vector<Eigen::Vector3d>& out) {
  const long n = sample_count(u.cross(v).norm(), density, rng);
  for (long i = 0; i < n; ++i) out.push_back(origin + uniform(rng, 0, 1) * u + uniform(rng, 0, 1) * v);
}

// Four sides and the top; the bottom rests on the floor.
void add_box(const Box& b, double rho, Rng& rng, std::vector<Eigen::Vector3d>& out) {
  const Eigen::Matrix3d r = Eigen::AngleAxisd(b.yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const Eigen::Vector3d c = b.center + Eigen::Vector3d(0, 0, b.half.z());
  const Eigen::Vector3d hx = r * Eigen::Vector3d(b.half.x(), 0, 0);
  const Eigen::Vector3d hy = r * Eigen::Vector3d(0, b.half.y(), 0);
  const Eigen::Vector3d hz(0, 0, b.half.z());
  sample_rect(c - hx - hy - hz, 2 * hx, 2 * hz, rho, rng, out);
  sample_rect(c - hx + hy - hz, 2 * hx, 2 * hz, rho, rng, out);
  sample_rect(c - hx - hy - hz, 2 * hy, 2 * hz, rho, rng, out);
  sample_rect(c + hx - hy - hz, 2 * hy, 2 * hz, rho, rng, out);
  sample_rect(c - hx - hy + hz, 2 * hx, 2 * hy, rho, rng, out);
}

Room make_room(const SceneConfig& cfg, Rng& rng) {
  Room room;
  if (cfg.pillar_spacing > 0.0) {
    // Square pillars against both side walls, like an arcade.
    const double half = 0.5 * cfg.pillar_size;
    for (double x = 0.5 * cfg.pillar_spacing; x < cfg.length; x += cfg.pillar_spacing) {
      for (double y : {half, cfg.width - half}) {
        room.pillars.push_back({{x, y, 0.0}, {half, half, 0.5 * cfg.height}, 0.0});
      }
    }
  }
  for (int i = 0; i < cfg.boxes; ++i) {
    Box b;
    b.half = {uniform(rng, 0.15, 0.4), uniform(rng, 0.15, 0.4), uniform(rng, 0.2, 0.6)};
    b.center = {uniform(rng, 0.5, cfg.length - 0.5), uniform(rng, 0.5, cfg.width - 0.5), 0.0};
    b.yaw = uniform(rng, 0.0, std::numbers::pi);
    room.boxes.push_back(b);
  }
  for (int i = 0; i < cfg.spheres; ++i) {
    Sphere s;
    s.radius = uniform(rng, 0.15, 0.35);
    s.center = {uniform(rng, 0.5, cfg.length - 0.5), uniform(rng, 0.5, cfg.width - 0.5),
                s.radius + uniform(rng, 0.0, 0.5)};
    room.spheres.push_back(s);
  }
  return room;
}

// One noisy scan of the room restricted to x in [x0, x1].
std::vector<Eigen::Vector3d> scan(const SceneConfig& cfg, const Room& room, double x0, double x1,
                                  Rng& rng) {
  const double rho = cfg.density;
  const double len = x1 - x0;
  std::vector<Eigen::Vector3d> pts;
  const Eigen::Vector3d ex = Eigen::Vector3d::UnitX();
  const Eigen::Vector3d ey = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d ez = Eigen::Vector3d::UnitZ();

  sample_rect({x0, 0, 0}, len * ex, cfg.width * ey, rho, rng, pts);              // floor
  sample_rect({x0, 0, 0}, len * ex, cfg.height * ez, rho, rng, pts);             // wall y = 0
  sample_rect({x0, cfg.width, 0}, len * ex, cfg.height * ez, rho, rng, pts);     // wall y = W
  if (cfg.end_walls && x0 <= 0.0) {
    sample_rect({0, 0, 0}, cfg.width * ey, cfg.height * ez, rho, rng, pts);
  }
  if (cfg.end_walls && x1 >= cfg.length) {
    sample_rect({cfg.length, 0, 0}, cfg.width * ey, cfg.height * ez, rho, rng, pts);
  }

  std::vector<Eigen::Vector3d> clutter;
  for (const Box& b : room.pillars) add_box(b, rho, rng, clutter);
  for (const Box& b : room.boxes) add_box(b, rho, rng, clutter);
  std::normal_distribution<double> normal;
  for (const Sphere& s : room.spheres) {
    const long n = sample_count(4.0 * std::numbers::pi * s.radius * s.radius, rho, rng);
    for (long i = 0; i < n; ++i) {
      Eigen::Vector3d d(normal(rng), normal(rng), normal(rng));
      if (d.norm() < 1e-12) continue;
      clutter.push_back(s.center + s.radius * d.normalized());
    }
  }
  for (const auto& p : clutter) {
    if (p.x() >= x0 && p.x() <= x1) pts.push_back(p);
  }

  std::normal_distribution<double> noise(0.0, cfg.noise);
  if (cfg.noise > 0.0) {
    for (auto& p : pts) p += Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
  }
  return pts;
}

}  // namespace

void SceneConfig::validate() const {
  if (!(length > 0.0) || !(width > 0.0) || !(height > 0.0)) {
    throw ConfigError("scene dimensions must be positive");
  }
  if (!(density > 0.0)) throw ConfigError("scene density must be positive");
  if (noise < 0.0) throw ConfigError("scene noise must be >= 0");
  if (pillar_spacing < 0.0 || !(pillar_size > 0.0)) throw ConfigError("bad pillar layout");
  if (boxes < 0 || spheres < 0) throw ConfigError("clutter counts must be >= 0");
  if (!(overlap > 0.0 && overlap <= 1.0)) {
    throw ConfigError(fmt::format("overlap {} outside (0, 1]", overlap));
  }
  if (!(voxel > 0.0) || !(sigma > 0.0)) throw ConfigError("voxel size and sigma must be positive");
  if (max_yaw_deg < 0.0) throw ConfigError("max_yaw_deg must be >= 0");
}

ScenePair generate_scene_pair(const SceneConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const Room room = make_room(cfg, rng);
  const double w = cfg.length / (2.0 - cfg.overlap);

  ScenePair pair;
  PointCloud fixed_raw;
  fixed_raw.points = scan(cfg, room, 0.0, w, rng);
  fixed_raw.sigma = cfg.sigma;
  PointCloud fixed = voxel_downsample(fixed_raw, cfg.voxel);
  NormalOptions normals;
  normals.neighbours = cfg.normal_neighbours;
  normals.viewpoint = {0.5 * w, 0.5 * cfg.width, 0.5 * cfg.height};
  pair.fixed = estimate_normals(fixed, normals);

  const double yaw = uniform(rng, -cfg.max_yaw_deg, cfg.max_yaw_deg) * std::numbers::pi / 180.0;
  pair.truth.rotation = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  pair.truth.translation = {cfg.length - w, uniform(rng, -0.2, 0.2), uniform(rng, -0.05, 0.05)};

  PointCloud moving_raw;
  moving_raw.points = scan(cfg, room, cfg.length - w, cfg.length, rng);
  moving_raw.sigma = cfg.sigma;
  const Pose to_moving = pair.truth.inverse();
  for (auto& p : moving_raw.points) p = to_moving * p;
  pair.moving = voxel_downsample(moving_raw, cfg.voxel);
  return pair;
}

}  // namespace agnc
