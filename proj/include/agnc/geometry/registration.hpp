#pragma once

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "agnc/geometry/kdtree.hpp"
#include "agnc/geometry/lie.hpp"
#include "agnc/geometry/point_cloud.hpp"
#include "agnc/methods.hpp"

namespace agnc {

/// Covariance of e = p - (C q + r) for isotropic point noise: C R_p C^T + R_q
/// with R = sigma^2 I, i.e. (sigma_p^2 + sigma_q^2) I for every pose.
Eigen::Matrix3d correspondence_covariance(const Pose& pose, double sigma_p, double sigma_q);

struct PointToPoint {
  Eigen::Vector3d error;
  double mahalanobis = 0.0;  // sqrt(e^T Sigma^-1 e)
};

PointToPoint point_to_point_error(const Pose& pose, const Eigen::Vector3d& p,
                                  const Eigen::Vector3d& q, double sigma_p, double sigma_q);

/// Point-to-plane residual n^T (p - (C q + r)) divided by sqrt(n^T Sigma n),
/// and its Jacobian with respect to the left-perturbation twist [phi; rho].
struct PlaneResidual {
  double value = 0.0;
  double unscaled = 0.0;
  Vector6d jacobian = Vector6d::Zero();
};

PlaneResidual point_to_plane_residual(const Pose& pose, const Eigen::Vector3d& p,
                                      const Eigen::Vector3d& normal_p, const Eigen::Vector3d& q,
                                      double sigma_p, double sigma_q);

struct IcpOptions {
  int max_iterations = 50;
  double rotation_tolerance = 1e-3;     // rad
  double translation_tolerance = 1e-3;  // m
  /// Correspondences farther apart than this (m) are dropped.
  double max_correspondence_distance = std::numeric_limits<double>::infinity();
  /// Truncation bound tau for adaptive fitting, as a percentile of the
  /// current point-to-point residuals.
  double tau_percentile = 97.5;
  /// AGNC and GNC-AMB refit alpha* (and the mode) at every re-association;
  /// otherwise only at the first one.
  bool refresh_adaptive = true;
  /// Method parameters; residual_dim is forced to 3 and alpha.tau is
  /// overwritten by the percentile rule.
  MethodParams params = default_params();

  /// Library defaults, with a single reweighted step per association for the
  /// non-GNC methods (classic IRLS-ICP).
  static MethodParams default_params();
};

struct IcpResult {
  Pose pose;
  int iterations = 0;
  bool converged = false;
  /// Non-empty when the solve stopped on an error (for example degenerate geometry).
  std::string failure;
  std::vector<StageRecord> stages;  // GNC sweep of the last association
  int correspondences = 0;  // at the last iteration
};

/// Registers `moving` (Q) onto `fixed` (P): finds T with p ~ C q + r.
///
/// Each iteration associates every P point having a valid normal with its
/// nearest Q point under the current T, then solves the robust problem on
/// those fixed pairs with the chosen method: weights come from the
/// point-to-point Mahalanobis residuals, and every weighted solve is one
/// Gauss-Newton step on the point-to-plane residuals. GNC methods run a whole
/// sweep per association. Converged when the pose change of an iteration is
/// below both tolerances.
IcpResult icp(const PointCloud& fixed, const PointCloud& moving, const Pose& init, Method method,
              const IcpOptions& options = {});

/// Same, with a prebuilt index over the moving cloud.
IcpResult icp(const PointCloud& fixed, const PointCloud& moving, const KdTree& moving_index,
              const Pose& init, Method method, const IcpOptions& options = {});

}  // namespace agnc
