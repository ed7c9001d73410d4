#include "agnc/geometry/lie.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/SVD>
#include <fmt/format.h>

#include "agnc/errors.hpp"

namespace agnc {

namespace {

constexpr double kSmallAngle = 1e-5;

// Left Jacobian of SO(3) and its inverse, with series expansions near zero.
Eigen::Matrix3d left_jacobian(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d k = skew(phi);
  double a = 0.0;
  double b = 0.0;
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    a = 0.5 - t2 / 24.0;
    b = 1.0 / 6.0 - t2 / 120.0;
  } else {
    a = (1.0 - std::cos(theta)) / (theta * theta);
    b = (theta - std::sin(theta)) / (theta * theta * theta);
  }
  return Eigen::Matrix3d::Identity() + a * k + b * k * k;
}

Eigen::Matrix3d left_jacobian_inverse(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d k = skew(phi);
  double c = 0.0;
  if (theta < kSmallAngle) {
    c = 1.0 / 12.0 + theta * theta / 720.0;
  } else {
    c = (1.0 - theta * std::sin(theta) / (2.0 * (1.0 - std::cos(theta)))) / (theta * theta);
  }
  return Eigen::Matrix3d::Identity() - 0.5 * k + c * k * k;
}

}  // namespace

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

void Pose::orthonormalize() {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d c = svd.matrixU() * svd.matrixV().transpose();
  if (c.determinant() < 0.0) {
    Eigen::Matrix3d u = svd.matrixU();
    u.col(2) *= -1.0;
    c = u * svd.matrixV().transpose();
  }
  rotation = c;
}

double Pose::orthonormality_error() const {
  return (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).norm();
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d k = skew(phi);
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    return Eigen::Matrix3d::Identity() + (1.0 - t2 / 6.0) * k + (0.5 - t2 / 24.0) * k * k;
  }
  return Eigen::Matrix3d::Identity() + std::sin(theta) / theta * k +
         (1.0 - std::cos(theta)) / (theta * theta) * k * k;
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& c) {
  const Eigen::Vector3d v(c(2, 1) - c(1, 2), c(0, 2) - c(2, 0), c(1, 0) - c(0, 1));
  const double s = 0.5 * v.norm();
  const double co = 0.5 * (c.trace() - 1.0);
  const double theta = std::atan2(s, co);
  if (theta > std::numbers::pi - 1e-6) {
    throw DomainError(fmt::format("rotation angle {} too close to pi for log", theta));
  }
  if (theta < kSmallAngle) {
    // theta / (2 sin theta) ~ 1/2 + theta^2 / 12
    return (0.5 + theta * theta / 12.0) * v;
  }
  return theta / (2.0 * std::sin(theta)) * v;
}

Pose se3_exp(const Twist& xi) {
  return {so3_exp(xi.phi), left_jacobian(xi.phi) * xi.rho};
}

Twist se3_log(const Pose& pose) {
  const Eigen::Vector3d phi = so3_log(pose.rotation);
  return {phi, left_jacobian_inverse(phi) * pose.translation};
}

Pose retract_left(const Pose& pose, const Twist& delta) {
  Pose out = se3_exp(delta) * pose;
  out.orthonormalize();
  return out;
}

PoseError pose_error(const Pose& a, const Pose& b) {
  const Pose d = a.inverse() * b;
  const Eigen::Matrix3d& c = d.rotation;
  const Eigen::Vector3d v(c(2, 1) - c(1, 2), c(0, 2) - c(2, 0), c(1, 0) - c(0, 1));
  const double angle = std::atan2(0.5 * v.norm(), 0.5 * (c.trace() - 1.0));
  if (angle > std::numbers::pi - 1e-6) {
    // log is undefined here; the translation norm still ranks such failures.
    return {angle, d.translation.norm()};
  }
  return {angle, se3_log(d).rho.norm()};
}

}  // namespace agnc
