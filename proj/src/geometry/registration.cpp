#include "agnc/geometry/registration.hpp"

#include <cmath>
#include <exception>
#include <optional>
#include <span>

#include <fmt/format.h>

#include "agnc/adaptive_fit.hpp"
#include "agnc/errors.hpp"
#include "agnc/gnc.hpp"
#include "agnc/stats.hpp"

namespace agnc {

Eigen::Matrix3d correspondence_covariance(const Pose& pose, double sigma_p, double sigma_q) {
  const Eigen::Matrix3d rp = sigma_p * sigma_p * Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d rq = sigma_q * sigma_q * Eigen::Matrix3d::Identity();
  return pose.rotation * rp * pose.rotation.transpose() + rq;
}

PointToPoint point_to_point_error(const Pose& pose, const Eigen::Vector3d& p,
                                  const Eigen::Vector3d& q, double sigma_p, double sigma_q) {
  PointToPoint out;
  out.error = p - pose * q;
  const Eigen::Matrix3d sigma = correspondence_covariance(pose, sigma_p, sigma_q);
  out.mahalanobis = std::sqrt(out.error.dot(sigma.ldlt().solve(out.error)));
  return out;
}

PlaneResidual point_to_plane_residual(const Pose& pose, const Eigen::Vector3d& p,
                                      const Eigen::Vector3d& normal_p, const Eigen::Vector3d& q,
                                      double sigma_p, double sigma_q) {
  const Eigen::Vector3d x = pose * q;
  const Eigen::Matrix3d sigma = correspondence_covariance(pose, sigma_p, sigma_q);
  const double scale = 1.0 / std::sqrt(normal_p.dot(sigma * normal_p));
  PlaneResidual out;
  out.unscaled = normal_p.dot(p - x);
  out.value = scale * out.unscaled;
  // x -> exp(delta^) x moves x by phi x x + rho to first order.
  out.jacobian.head<3>() = scale * normal_p.cross(x);
  out.jacobian.tail<3>() = -scale * normal_p;
  return out;
}

MethodParams IcpOptions::default_params() {
  MethodParams p;
  p.residual_dim = 3;
  p.irls_tolerance = 1e-6;
  p.irls_max_iterations = 1;
  return p;
}

IcpResult icp(const PointCloud& fixed, const PointCloud& moving, const Pose& init, Method method,
              const IcpOptions& options) {
  const KdTree index(moving.points);
  return icp(fixed, moving, index, init, method, options);
}

namespace {

// Fixed correspondences between P and Q. Residuals are the point-to-point
// Mahalanobis errors; a solve is one weighted Gauss-Newton step on the
// point-to-plane errors.
class AssociatedPairs {
 public:
  using State = Pose;

  AssociatedPairs(const PointCloud& fixed, const PointCloud& moving, std::vector<int> pi,
                  std::vector<int> qi)
      : fixed_(fixed), moving_(moving), pi_(std::move(pi)), qi_(std::move(qi)) {}

  Eigen::Index size() const { return static_cast<Eigen::Index>(pi_.size()); }

  Eigen::VectorXd residuals(const Pose& pose) const {
    Eigen::VectorXd eps(size());
    for (Eigen::Index k = 0; k < size(); ++k) {
      eps[k] = point_to_point_error(pose, fixed_.points[pi_[k]], moving_.points[qi_[k]],
                                    fixed_.sigma, moving_.sigma)
                   .mahalanobis;
    }
    return eps;
  }

  Pose solve(const Eigen::VectorXd& w, const Pose& pose) const {
    Eigen::VectorXd r(size());
    Eigen::Matrix<double, Eigen::Dynamic, 6> j(size(), 6);
    for (Eigen::Index k = 0; k < size(); ++k) {
      const PlaneResidual res =
          point_to_plane_residual(pose, fixed_.points[pi_[k]], fixed_.normals[pi_[k]],
                                  moving_.points[qi_[k]], fixed_.sigma, moving_.sigma);
      r[k] = res.value;
      j.row(k) = res.jacobian.transpose();
    }
    return retract_left(pose, gauss_newton_increment(j, r, w));
  }

 private:
  const PointCloud& fixed_;
  const PointCloud& moving_;
  std::vector<int> pi_;
  std::vector<int> qi_;
};

AssociatedPairs associate(const PointCloud& fixed, const PointCloud& moving, const KdTree& index,
                          const Pose& pose, double max_distance) {
  const Pose inv = pose.inverse();
  const double max_d2 = max_distance * max_distance;
  std::vector<int> pi;
  std::vector<int> qi;
  pi.reserve(fixed.size());
  qi.reserve(fixed.size());
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    if (!fixed.normal_valid[i]) continue;
    double d2 = 0.0;
    const int j = index.nearest(inv * fixed.points[i], &d2);
    if (d2 > max_d2) continue;
    pi.push_back(static_cast<int>(i));
    qi.push_back(j);
  }
  return {fixed, moving, std::move(pi), std::move(qi)};
}

}  // namespace

IcpResult icp(const PointCloud& fixed, const PointCloud& moving, const KdTree& moving_index,
              const Pose& init, Method method, const IcpOptions& options) {
  if (!fixed.has_normals()) throw DomainError("the fixed cloud needs normals for point-to-plane ICP");
  fixed.validate();
  if (moving.empty()) throw DomainError("the moving cloud is empty");
  if (options.max_iterations < 1) throw ConfigError("ICP needs at least one iteration");

  MethodParams params = options.params;
  params.residual_dim = 3;

  IcpResult result;
  result.pose = init;
  std::optional<ShapeParameter> alpha_star;
  double mode = 0.0;

  try {
    for (int iter = 0; iter < options.max_iterations; ++iter) {
      AssociatedPairs pairs =
          associate(fixed, moving, moving_index, result.pose, options.max_correspondence_distance);
      result.correspondences = static_cast<int>(pairs.size());
      if (pairs.size() < 6) {
        result.failure = fmt::format("only {} correspondences", pairs.size());
        break;
      }

      const Eigen::VectorXd eps = pairs.residuals(result.pose);
      const double tau = percentile_nearest_rank(
          std::span<const double>(eps.data(), static_cast<std::size_t>(eps.size())),
          options.tau_percentile);
      params.alpha.tau = tau > 0.0 ? tau : eps.maxCoeff();

      Pose next;
      if (eps.maxCoeff() == 0.0) {
        next = pairs.solve(Eigen::VectorXd::Ones(eps.size()), result.pose);  // exact overlap
      } else if (!options.refresh_adaptive && alpha_star &&
                 (method == Method::AGNC || method == Method::GncAMB)) {
        const GncWeightRule rule = method == Method::AGNC ? GncWeightRule::agnc(*alpha_star)
                                                          : GncWeightRule::gnc_amb(*alpha_star, mode);
        auto g = run_gnc(pairs, result.pose, rule, params.schedule);
        next = g.state;
        result.stages = std::move(g.stages);
      } else {
        auto outcome = solve_with_method(pairs, method, params, result.pose);
        next = outcome.state;
        if (outcome.alpha_star) alpha_star = outcome.alpha_star;
        if (std::isfinite(outcome.mode)) mode = outcome.mode;
        if (is_gnc(method)) result.stages = std::move(outcome.stages);
      }

      const Twist delta = se3_log(next * result.pose.inverse());
      result.pose = next;
      result.iterations = iter + 1;
      if (delta.phi.norm() < options.rotation_tolerance &&
          delta.rho.norm() < options.translation_tolerance) {
        result.converged = true;
        break;
      }
    }
  } catch (const std::exception& e) {
    result.failure = e.what();
    result.converged = false;
  }
  return result;
}

}  // namespace agnc
