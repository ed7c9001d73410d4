#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <doctest.h>

#include "agnc/errors.hpp"
#include "agnc/geometry/lie.hpp"
#include "agnc/geometry/registration.hpp"
#include "agnc/solver.hpp"

using namespace agnc;

namespace {

WeightedLsProblem scalar_problem(const std::vector<double>& values) {
  WeightedLsProblem p(1);
  for (double v : values) p.add_block(Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Constant(1, v), 1.0);
  return p;
}

double total_loss(const WeightedLsProblem& p, const Eigen::VectorXd& x, const Kernel& k) {
  double s = 0.0;
  const Eigen::VectorXd e = p.residuals(x);
  for (Eigen::Index i = 0; i < e.size(); ++i) s += rho(e[i], k);
  return s;
}

WeightedLsProblem random_problem(std::mt19937_64& rng, int blocks, int n, int d) {
  std::normal_distribution<double> normal;
  WeightedLsProblem p(d);
  for (int i = 0; i < blocks; ++i) {
    Eigen::MatrixXd a(n, d);
    Eigen::VectorXd y(n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < d; ++c) a(r, c) = normal(rng);
      y[r] = normal(rng) + (i % 5 == 0 ? 20.0 : 0.0);
    }
    p.add_block(a, y, 0.5);
  }
  return p;
}

Pose random_pose(std::mt19937_64& rng, double angle, double offset) {
  std::normal_distribution<double> normal;
  Twist xi;
  xi.phi = Eigen::Vector3d(normal(rng), normal(rng), normal(rng)) * angle;
  xi.rho = Eigen::Vector3d(normal(rng), normal(rng), normal(rng)) * offset;
  return se3_exp(xi);
}

std::vector<Eigen::Vector3d> random_points(std::mt19937_64& rng, int count) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<Eigen::Vector3d> pts(count);
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  return pts;
}

}  // namespace

TEST_CASE("weighted linear solve") {
  WeightedLsProblem id(3);
  const Eigen::Vector3d b(1.0, -2.0, 3.5);
  id.add_block(Eigen::Matrix3d::Identity(), b, 1.0);
  CHECK((solve_weighted_linear(id, Eigen::VectorXd::Ones(1)) - b).norm() < 1e-12);

  const WeightedLsProblem two = scalar_problem({0.0, 10.0});
  CHECK(solve_weighted_linear(two, Eigen::Vector2d(1.0, 1.0))[0] == doctest::Approx(5.0));
  CHECK(solve_weighted_linear(two, Eigen::Vector2d(1.0, 0.01))[0] ==
        doctest::Approx(0.1 / 1.01).epsilon(1e-12));

  // Full-covariance block: the solution is the generalized least-squares one.
  WeightedLsProblem gls(2);
  Eigen::Matrix2d cov;
  cov << 2.0, 0.5, 0.5, 1.0;
  const Eigen::Matrix2d a = Eigen::Matrix2d::Identity();
  const Eigen::Vector2d y(1.0, 2.0);
  gls.add_block({a, y, cov});
  gls.add_block({a, Eigen::Vector2d(3.0, -1.0), Eigen::Matrix2d::Identity()});
  const Eigen::Matrix2d info = cov.inverse();
  const Eigen::Vector2d oracle =
      (info + Eigen::Matrix2d::Identity()).ldlt().solve(info * y + Eigen::Vector2d(3.0, -1.0));
  CHECK((solve_weighted_linear(gls, Eigen::Vector2d::Ones()) - oracle).norm() < 1e-12);

  CHECK_THROWS_AS(gls.add_block({a, y, -cov}), DomainError);
  CHECK_THROWS_AS(gls.add_block({Eigen::MatrixXd::Ones(2, 3), y, cov}), DomainError);
}

TEST_CASE("weights act as multiplicities") {
  std::mt19937_64 rng(8);
  WeightedLsProblem p = random_problem(rng, 12, 3, 4);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Eigen::VectorXd w(12);
  for (auto& v : w) v = u(rng);
  const Eigen::VectorXd x = solve_weighted_linear(p, w);

  // Duplicating block 3 equals doubling its weight.
  std::mt19937_64 again(8);
  WeightedLsProblem dup = random_problem(again, 12, 3, 4);
  Eigen::VectorXd w_dup(13);
  w_dup << w, w[3];
  // Regenerate block 3 from the same stream and append it once more.
  std::mt19937_64 regen(8);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a3(3, 4);
  Eigen::VectorXd y3(3);
  for (int i = 0; i <= 3; ++i) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) a3(r, c) = normal(regen);
      y3[r] = normal(regen) + (i % 5 == 0 ? 20.0 : 0.0);
    }
  }
  dup.add_block(a3, y3, 0.5);
  Eigen::VectorXd w_double = w;
  w_double[3] *= 2.0;
  CHECK((solve_weighted_linear(dup, w_dup) - solve_weighted_linear(p, w_double)).norm() < 1e-10);

  CHECK((solve_weighted_linear(p, 7.5 * w) - x).norm() < 1e-10);
  CHECK((solve_weighted_linear(p, 1e-3 * w) - x).norm() < 1e-10);
}

TEST_CASE("rank deficiency") {
  WeightedLsProblem p(2);
  p.add_block(Eigen::RowVector2d(1.0, 1.0), Eigen::VectorXd::Ones(1), 1.0);
  p.add_block(Eigen::RowVector2d(2.0, 2.0), Eigen::VectorXd::Ones(1), 1.0);
  CHECK_THROWS_AS(solve_weighted_linear(p, Eigen::Vector2d::Ones()), RankError);
  const WeightedLsProblem s = scalar_problem({1.0, 2.0});
  CHECK_THROWS_AS(solve_weighted_linear(s, Eigen::Vector2d::Zero()), RankError);
}

TEST_CASE("IRLS") {
  std::vector<double> values(9, 0.0);
  values.push_back(100.0);
  WeightedLsProblem p = scalar_problem(values);

  // Objective scan: the Welsch loss has one basin at 0 and one at 100.
  double best = 1e300;
  double arg = 0.0;
  for (int k = 0; k <= 102000; ++k) {
    const double x = -1.0 + 1e-3 * k;
    const double l = total_loss(p, Eigen::VectorXd::Constant(1, x), Kernel::welsch());
    if (l < best) {
      best = l;
      arg = x;
    }
  }
  CHECK(std::abs(arg) < 1e-3);

  auto [from_zero, r0] = irls(p, Kernel::welsch(), Eigen::VectorXd::Zero(1), 1e-10, 100);
  CHECK(std::abs(from_zero[0]) < 1e-3);
  CHECK(r0.converged);
  auto [from_far, r1] = irls(p, Kernel::welsch(), Eigen::VectorXd::Constant(1, 100.0), 1e-10, 100);
  CHECK(std::abs(from_far[0] - 100.0) < 1e-3);
  CHECK(r1.converged);

  const WeightedLsProblem clean = scalar_problem({1.0, 2.0, 6.0});
  auto [ls, rl] = irls(clean, Kernel::quadratic(), Eigen::VectorXd::Zero(1), 1e-10, 100);
  CHECK(rl.iterations == 1);
  CHECK(rl.converged);
  CHECK(ls[0] == doctest::Approx(3.0));

  std::mt19937_64 rng(21);
  WeightedLsProblem noisy = random_problem(rng, 40, 2, 3);
  for (const Kernel& k : {Kernel::quadratic(), Kernel::cauchy(1.0), Kernel::adaptive(ShapeParameter(1.0)),
                          Kernel::adaptive(ShapeParameter(0.0)), Kernel::adaptive(ShapeParameter(0.5))}) {
    double prev = total_loss(noisy, Eigen::VectorXd::Zero(3), k);
    for (int iters = 1; iters <= 15; ++iters) {
      auto [x, report] = irls(noisy, k, Eigen::VectorXd::Zero(3), 0.0, iters);
      const double l = total_loss(noisy, x, k);
      CHECK(l <= prev * (1.0 + 1e-12) + 1e-12);
      CHECK(report.final_objective == doctest::Approx(l));
      prev = l;
    }
  }
}

TEST_CASE("Gauss-Newton over SE(3)") {
  std::mt19937_64 rng(5);
  const std::vector<Eigen::Vector3d> q = random_points(rng, 30);

  auto point_residuals = [&q](const std::vector<Eigen::Vector3d>& p) {
    return [&q, p](const Pose& t) {
      Eigen::VectorXd r(3 * q.size());
      for (std::size_t i = 0; i < q.size(); ++i) r.segment<3>(3 * i) = p[i] - t * q[i];
      return r;
    };
  };
  // e = p - T q; under T <- exp(d^) T, de/d[phi; rho] = [(T q)^, -I].
  auto point_jacobian = [&q](const Pose& t) {
    Eigen::Matrix<double, Eigen::Dynamic, 6> j(3 * q.size(), 6);
    for (std::size_t i = 0; i < q.size(); ++i) {
      j.block<3, 3>(3 * i, 0) = skew(t * q[i]);
      j.block<3, 3>(3 * i, 3) = -Eigen::Matrix3d::Identity();
    }
    return j;
  };
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(3 * q.size());

  SUBCASE("zero residuals") {
    const Pose truth = random_pose(rng, 0.2, 0.5);
    std::vector<Eigen::Vector3d> p;
    for (const auto& x : q) p.push_back(truth * x);
    auto [pose, report] = gauss_newton_se3(point_residuals(p), point_jacobian, w, truth);
    CHECK(pose.rotation == truth.rotation);
    CHECK(pose.translation == truth.translation);
  }
  SUBCASE("translation offset") {
    Pose truth;
    truth.translation = {0.3, -0.2, 0.5};
    std::vector<Eigen::Vector3d> p;
    for (const auto& x : q) p.push_back(truth * x);
    GaussNewtonOptions opt;
    opt.rotation_tolerance = 1e-10;
    opt.translation_tolerance = 1e-10;
    auto [pose, report] = gauss_newton_se3(point_residuals(p), point_jacobian, w, Pose::identity(), opt);
    CHECK((pose.translation - truth.translation).norm() < 1e-6);
    CHECK(report.iterations <= 3);
  }
  SUBCASE("rotation about z with plane residuals") {
    // Points on three orthogonal planes with known normals.
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::vector<Eigen::Vector3d> fixed, normals;
    for (int k = 0; k < 3; ++k) {
      for (int i = 0; i < 60; ++i) {
        Eigen::Vector3d x(u(rng), u(rng), u(rng));
        x[k] = 0.0;
        fixed.push_back(x);
        normals.push_back(Eigen::Vector3d::Unit(k));
      }
    }
    Pose truth;
    truth.rotation = Eigen::AngleAxisd(10.0 * std::numbers::pi / 180.0, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    std::vector<Eigen::Vector3d> moving;
    for (const auto& x : fixed) moving.push_back(truth.inverse() * x);
    auto res = [&](const Pose& t) {
      Eigen::VectorXd r(fixed.size());
      for (std::size_t i = 0; i < fixed.size(); ++i) {
        r[i] = point_to_plane_residual(t, fixed[i], normals[i], moving[i], 0.03, 0.03).value;
      }
      return r;
    };
    auto jac = [&](const Pose& t) {
      Eigen::Matrix<double, Eigen::Dynamic, 6> j(fixed.size(), 6);
      for (std::size_t i = 0; i < fixed.size(); ++i) {
        j.row(i) = point_to_plane_residual(t, fixed[i], normals[i], moving[i], 0.03, 0.03).jacobian.transpose();
      }
      return j;
    };
    GaussNewtonOptions opt;
    opt.rotation_tolerance = 1e-9;
    opt.translation_tolerance = 1e-9;
    auto [pose, report] =
        gauss_newton_se3(res, jac, Eigen::VectorXd::Ones(fixed.size()), Pose::identity(), opt);
    CHECK(pose_error(pose, truth).rotation < 1e-4);
    CHECK(report.converged);
  }
  SUBCASE("singular geometry names the free direction") {
    Eigen::Matrix<double, Eigen::Dynamic, 6> j = Eigen::Matrix<double, Eigen::Dynamic, 6>::Zero(5, 6);
    for (int i = 0; i < 5; ++i) j(i, 5) = 1.0;
    CHECK_THROWS_AS(gauss_newton_increment(j, Eigen::VectorXd::Ones(5), Eigen::VectorXd::Ones(5)),
                    RankError);
  }
  SUBCASE("Jacobian matches finite differences") {
    std::vector<Eigen::Vector3d> p = random_points(rng, 30);
    auto res = point_residuals(p);
    for (int trial = 0; trial < 20; ++trial) {
      const Pose t = random_pose(rng, 0.8, 1.0);
      const auto j = point_jacobian(t);
      for (int k = 0; k < 6; ++k) {
        Vector6d d = Vector6d::Zero();
        d[k] = 1e-6;
        const Eigen::VectorXd fd = (res(retract_left(t, Twist::from_vector(d))) -
                                    res(retract_left(t, Twist::from_vector(-d)))) / 2e-6;
        CHECK((fd - j.col(k)).norm() <= 1e-5 * std::max(1.0, j.col(k).norm()));
      }
    }
  }
}
