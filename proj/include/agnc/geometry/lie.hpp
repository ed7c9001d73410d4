#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace agnc {

using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Element of se(3): rotation part `phi` (rad) and translation part `rho` (m).
/// Stacked as [phi; rho] when a 6-vector is needed.
struct Twist {
  Eigen::Vector3d phi = Eigen::Vector3d::Zero();
  Eigen::Vector3d rho = Eigen::Vector3d::Zero();

  Vector6d vector() const {
    Vector6d v;
    v << phi, rho;
    return v;
  }
  static Twist from_vector(const Vector6d& v) { return {v.head<3>(), v.tail<3>()}; }
};

/// Rigid transform T = [C r; 0 1] acting on points as C p + r.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }

  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return rotation * p + translation; }
  Pose operator*(const Pose& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }
  Pose inverse() const {
    const Eigen::Matrix3d ct = rotation.transpose();
    return {ct, -ct * translation};
  }

  /// Projects the rotation back onto SO(3).
  void orthonormalize();
  /// ||C^T C - I||_F.
  double orthonormality_error() const;
};

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& phi);
/// Throws DomainError when the rotation angle is within 1e-6 of pi.
Eigen::Vector3d so3_log(const Eigen::Matrix3d& rotation);

Pose se3_exp(const Twist& xi);
Twist se3_log(const Pose& pose);

/// Left-perturbation update exp(delta^) * T, re-orthonormalized.
Pose retract_left(const Pose& pose, const Twist& delta);

/// Rotation angle (rad) and translation-part norm of log(a^-1 b).
struct PoseError {
  double rotation = 0.0;
  double translation = 0.0;
};
PoseError pose_error(const Pose& a, const Pose& b);

}  // namespace agnc
