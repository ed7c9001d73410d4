#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <doctest.h>

#include "agnc/errors.hpp"
#include "agnc/geometry/kdtree.hpp"
#include "agnc/geometry/lie.hpp"
#include "agnc/geometry/normals.hpp"
#include "agnc/geometry/perturbation.hpp"
#include "agnc/geometry/point_cloud.hpp"
#include "agnc/geometry/registration.hpp"
#include "agnc/geometry/scene.hpp"

using namespace agnc;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Twist random_twist(std::mt19937_64& rng, double max_angle, double max_offset) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, max_angle);
  Eigen::Vector3d axis;
  do {
    axis = {u(rng), u(rng), u(rng)};
  } while (axis.norm() < 1e-3 || axis.norm() > 1.0);
  return {axis.normalized() * angle(rng), Eigen::Vector3d(u(rng), u(rng), u(rng)) * max_offset};
}

PointCloud plane_grid(int n, double spacing) {
  PointCloud c;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) c.points.emplace_back(i * spacing, j * spacing, 0.0);
  }
  return c;
}

// Three orthogonal faces of a box, so every rigid motion is observable.
PointCloud corner_cloud() {
  PointCloud c;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      const double a = 0.1 * i + 0.05, b = 0.1 * j + 0.05;
      c.points.emplace_back(a, b, 0.0);
      c.points.emplace_back(a, 0.0, b);
      c.points.emplace_back(0.0, a, b);
    }
  }
  NormalOptions opt;
  opt.viewpoint = {1.0, 1.0, 1.0};
  return estimate_normals(c, opt);
}

}  // namespace

TEST_CASE("SE(3) exponential and logarithm") {
  const Pose id = se3_exp(Twist{});
  CHECK(id.rotation == Eigen::Matrix3d::Identity());
  CHECK(id.translation == Eigen::Vector3d::Zero());

  const Pose quarter = se3_exp({Eigen::Vector3d(0, 0, std::numbers::pi / 2), Eigen::Vector3d::Zero()});
  Eigen::Matrix3d rz;
  rz << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  CHECK((quarter.rotation - rz).norm() < 1e-12);

  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const Twist xi = random_twist(rng, 3.0, 2.0);
    const Twist back = se3_log(se3_exp(xi));
    CHECK((back.vector() - xi.vector()).norm() < 1e-9);
    const PoseError e = pose_error(se3_exp(back), se3_exp(xi));
    CHECK(e.rotation < 1e-9);
    CHECK(e.translation < 1e-9);
  }

  const Pose half_turn = se3_exp({Eigen::Vector3d(std::numbers::pi, 0, 0), Eigen::Vector3d::Zero()});
  CHECK_THROWS_AS(se3_log(half_turn), DomainError);

  // Small angles use the series branch.
  const Twist tiny{Eigen::Vector3d(1e-9, -2e-9, 5e-10), Eigen::Vector3d(0.1, 0.2, 0.3)};
  CHECK((se3_log(se3_exp(tiny)).vector() - tiny.vector()).norm() < 1e-15);

  Pose t;
  for (int i = 0; i < 10000; ++i) t = retract_left(t, random_twist(rng, 0.3, 0.1));
  CHECK(t.orthonormality_error() < 1e-9);
  CHECK(t.rotation.determinant() > 0.0);
}

TEST_CASE("nearest neighbours") {
  std::vector<Eigen::Vector3d> grid;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      for (int k = 0; k < 10; ++k) grid.emplace_back(i, j, k);
    }
  }
  const KdTree tree(grid);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-2.0, 11.0);
  for (int q = 0; q < 100; ++q) {
    const Eigen::Vector3d x(u(rng), u(rng), u(rng));
    int best = 0;
    double best_d = (grid[0] - x).squaredNorm();
    for (int i = 1; i < static_cast<int>(grid.size()); ++i) {
      const double d = (grid[i] - x).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    double d2 = -1.0;
    CHECK(tree.nearest(x, &d2) == best);
    CHECK(d2 == best_d);

    std::vector<int> order(grid.size());
    for (int i = 0; i < static_cast<int>(grid.size()); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return (grid[a] - x).squaredNorm() < (grid[b] - x).squaredNorm();
    });
    const std::vector<int> knn = tree.k_nearest(x, 15);
    CHECK(knn == std::vector<int>(order.begin(), order.begin() + 15));
  }
  // Ties go to the lowest index: the midpoint of two grid points.
  CHECK(tree.nearest({0.0, 0.0, 0.5}) == 0);
  CHECK(tree.nearest(grid[537]) == 537);
  CHECK(KdTree({Eigen::Vector3d::Zero()}).nearest({5, -3, 2}) == 0);
  CHECK(KdTree({Eigen::Vector3d::Zero()}).k_nearest({5, -3, 2}, 4).size() == 1);
  CHECK_THROWS_AS(KdTree({}), DomainError);
}

TEST_CASE("normal estimation") {
  const PointCloud plane = estimate_normals(plane_grid(10, 0.1), {15, Eigen::Vector3d(0, 0, 5), 1e-10});
  for (std::size_t i = 0; i < plane.size(); ++i) {
    CHECK(plane.normal_valid[i]);
    CHECK((plane.normals[i] - Eigen::Vector3d::UnitZ()).norm() < 1e-9);
  }

  PointCloud sphere;
  const int n = 2000;
  for (int i = 0; i < n; ++i) {
    // Fibonacci lattice on the unit sphere.
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double r = std::sqrt(1.0 - z * z);
    const double a = i * std::numbers::pi * (3.0 - std::sqrt(5.0));
    sphere.points.emplace_back(r * std::cos(a), r * std::sin(a), z);
  }
  const PointCloud with = estimate_normals(sphere);
  for (std::size_t i = 0; i < with.size(); ++i) {
    CHECK(with.normal_valid[i]);
    CHECK(with.normals[i].dot(-with.points[i].normalized()) > std::cos(5.0 * kDeg));
  }

  PointCloud line;
  for (int i = 0; i < 20; ++i) line.points.emplace_back(0.1 * i, 0.2 * i, -0.05 * i);
  const PointCloud flagged = estimate_normals(line);
  for (auto v : flagged.normal_valid) CHECK_FALSE(v);
  CHECK_THROWS_AS(estimate_normals(plane_grid(3, 0.1)), DomainError);
}

TEST_CASE("perturbation sampling") {
  std::mt19937_64 rng(12);
  const Twist zero = sample_perturbation({0.0, 0.0, 0.1, 0.1}, rng);
  CHECK(zero.vector() == Vector6d::Zero());

  CHECK(preset(Difficulty::Easy).phi_max == doctest::Approx(10.0 * kDeg));
  CHECK(preset(Difficulty::Medium).rho_max == doctest::Approx(0.5));
  CHECK(preset(Difficulty::Hard).phi_max == doctest::Approx(45.0 * kDeg));
  CHECK(parse_difficulty("hard") == Difficulty::Hard);
  CHECK_THROWS_AS(parse_difficulty("extreme"), ConfigError);

  const PerturbationLimits hard = preset(Difficulty::Hard);
  double sum_phi = 0.0, sum_rho = 0.0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const Twist t = sample_perturbation(hard, rng);
    CHECK(t.phi.norm() < hard.phi_max);
    CHECK(t.rho.norm() < hard.rho_max);
    sum_phi += t.phi.squaredNorm();
    sum_rho += t.rho.squaredNorm();
  }
  // A norm-truncated isotropic Gaussian in 3-D has per-axis variance
  // sigma^2 P(chi2_5 < c) / P(chi2_3 < c) with c = (cap / sigma)^2.
  auto truncated_std = [](double sigma, double cap) {
    const double c = (cap / sigma) * (cap / sigma);
    const boost::math::chi_squared_distribution<double> k3(3), k5(5);
    return sigma * std::sqrt(boost::math::cdf(k5, c) / boost::math::cdf(k3, c));
  };
  const double std_phi = std::sqrt(sum_phi / (3.0 * draws));
  const double std_rho = std::sqrt(sum_rho / (3.0 * draws));
  CHECK(std::abs(std_phi / truncated_std(hard.sigma_phi, hard.phi_max) - 1.0) < 0.05);
  CHECK(std::abs(std_rho / truncated_std(hard.sigma_rho, hard.rho_max) - 1.0) < 0.05);
}

TEST_CASE("correspondence residuals") {
  const double s = 0.03;
  std::mt19937_64 rng(6);
  const Pose truth = se3_exp(random_twist(rng, 1.0, 1.0));
  const Eigen::Vector3d p(0.4, -1.2, 2.0);
  const PointToPoint exact = point_to_point_error(truth, p, truth.inverse() * p, s, s);
  CHECK(exact.error.norm() < 1e-12);
  CHECK(exact.mahalanobis < 1e-9);

  const PointToPoint shifted = point_to_point_error(Pose::identity(), {0.03, 0, 0}, Eigen::Vector3d::Zero(), s, s);
  CHECK(shifted.mahalanobis * shifted.mahalanobis == doctest::Approx(0.5).epsilon(1e-12));
  CHECK((correspondence_covariance(truth, s, s) - 2.0 * s * s * Eigen::Matrix3d::Identity()).norm() < 1e-15);

  const Eigen::Vector3d n = Eigen::Vector3d(1, 2, 2).normalized();
  const Eigen::Vector3d q(0.3, 0.1, -0.4);
  const Eigen::Vector3d on_plane = q + Eigen::Vector3d(2, -1, 0) * 0.1;  // orthogonal to n
  CHECK(std::abs(point_to_plane_residual(Pose::identity(), on_plane, n, q, s, s).value) < 1e-12);
  const PlaneResidual off = point_to_plane_residual(Pose::identity(), q + 0.01 * n, n, q, s, s);
  CHECK(std::abs(off.unscaled) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(off.value == doctest::Approx(off.unscaled / std::sqrt(2.0 * s * s)).epsilon(1e-12));

  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const Pose t = se3_exp(random_twist(rng, 1.5, 1.0));
    const Eigen::Vector3d pp(u(rng), u(rng), u(rng));
    const Eigen::Vector3d qq(u(rng), u(rng), u(rng));
    const Eigen::Vector3d nn = Eigen::Vector3d(u(rng), u(rng), u(rng)).normalized();
    const Vector6d j = point_to_plane_residual(t, pp, nn, qq, s, s).jacobian;
    for (int c = 0; c < 6; ++c) {
      Vector6d d = Vector6d::Zero();
      d[c] = 1e-7;
      const double fd = (point_to_plane_residual(retract_left(t, Twist::from_vector(d)), pp, nn, qq, s, s).value -
                         point_to_plane_residual(retract_left(t, Twist::from_vector(-d)), pp, nn, qq, s, s).value) /
                        2e-7;
      CHECK(std::abs(fd - j[c]) <= 1e-5 * std::max(1.0, j.norm()));
    }
  }
}

TEST_CASE("cloud and pose files") {
  PointCloud c;
  c.points = {{1.5, -2.25, 3.0}, {0.1, 0.2, 0.3}, {-1e-3, 4e5, 7.125}};
  std::stringstream ss;
  write_xyz(ss, c);
  const PointCloud back = read_xyz(ss);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(back.points[i] == c.points[i]);

  std::istringstream commented("# header\n\n1 2 3\n4 5 6\n");
  CHECK(read_xyz(commented).size() == 2);
  std::istringstream bad("1 2\n");
  CHECK_THROWS(read_xyz(bad));

  std::istringstream ply(
      "ply\nformat ascii 1.0\ncomment test\nelement vertex 2\nproperty float x\nproperty float y\n"
      "property float z\nproperty uchar red\nelement face 0\nproperty list uchar int vertex_indices\n"
      "end_header\n1 2 3 255\n-1 0.5 2 0\n");
  const PointCloud fromply = read_ply(ply);
  REQUIRE(fromply.size() == 2);
  CHECK(fromply.points[1] == Eigen::Vector3d(-1, 0.5, 2));

  std::mt19937_64 rng(3);
  const Pose t = se3_exp(random_twist(rng, 2.0, 3.0));
  std::stringstream ps;
  write_pose(ps, t);
  std::vector<double> values;
  double v;
  while (ps >> v) values.push_back(v);
  REQUIRE(values.size() == 12);
  const Pose parsed = parse_pose(values);
  CHECK((parsed.rotation - t.rotation).norm() < 1e-12);
  CHECK((parsed.translation - t.translation).norm() < 1e-12);
  CHECK_THROWS(parse_pose({1, 2, 3}));

  const PointCloud down = voxel_downsample(plane_grid(10, 0.05), 0.1);
  CHECK(down.size() == 25);
  CHECK(down.points[0].isApprox(Eigen::Vector3d(0.025, 0.025, 0.0)));
}

TEST_CASE("ICP on exact copies") {
  const PointCloud cloud = corner_cloud();
  IcpOptions opt;
  const IcpResult same = icp(cloud, cloud, Pose::identity(), Method::LS, opt);
  CHECK(same.converged);
  CHECK(same.iterations == 1);
  CHECK(pose_error(same.pose, Pose::identity()).rotation < 1e-12);
  CHECK(pose_error(same.pose, Pose::identity()).translation < 1e-12);

  std::mt19937_64 rng(31);
  opt.rotation_tolerance = 1e-9;
  opt.translation_tolerance = 1e-9;
  for (int k = 0; k < 5; ++k) {
    const Pose truth = se3_exp(sample_perturbation(preset(Difficulty::Easy), rng));
    // moving = truth^-1 applied to the fixed points, so p = truth * q exactly.
    PointCloud moving = transform(cloud, truth.inverse());
    const IcpResult r = icp(cloud, moving, Pose::identity(), Method::LS, opt);
    CHECK(r.converged);
    CHECK(pose_error(r.pose, truth).rotation < 1e-6);
    CHECK(pose_error(r.pose, truth).translation < 1e-6);
  }
}

TEST_CASE("ICP on the synthetic scene") {
  std::mt19937_64 rng(4);
  SceneConfig cfg;
  const ScenePair scene = generate_scene_pair(cfg, rng);
  CHECK(scene.fixed.has_normals());
  const Pose init = scene.truth * se3_exp(sample_perturbation(preset(Difficulty::Medium), rng));
  const IcpResult r = icp(scene.fixed, scene.moving, init, Method::GncAMB);
  CHECK(r.failure.empty());
  CHECK(pose_error(r.pose, scene.truth).rotation < 1.0 * kDeg);
  CHECK(pose_error(r.pose, scene.truth).translation < 0.05);
  CHECK_FALSE(r.stages.empty());
}

TEST_CASE("ICP on disjoint clouds does not crash") {
  const PointCloud fixed = corner_cloud();
  Pose far;
  far.translation = {100.0, 0.0, 0.0};
  const PointCloud moving = transform(fixed, far);
  IcpOptions opt;
  opt.max_correspondence_distance = 1.0;
  for (Method m : {Method::LS, Method::Welsch, Method::GncAMB}) {
    const IcpResult r = icp(fixed, moving, Pose::identity(), m, opt);
    CHECK_FALSE(r.converged);
    CHECK_FALSE(r.failure.empty());
  }
}
