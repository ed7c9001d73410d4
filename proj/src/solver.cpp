#include "agnc/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "agnc/errors.hpp"

namespace agnc {

namespace {

constexpr double kMinRcond = 1e-14;
constexpr double kJitteredMinRcond = 1e-9;

std::string format_vector(const Eigen::VectorXd& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out += fmt::format("{}{:.4f}", i ? ", " : "", v[i]);
  }
  return out + "]";
}

}  // namespace

WeightedLsProblem::WeightedLsProblem(int state_dim) : state_dim_(state_dim) {
  if (state_dim < 1) throw DomainError("state dimension must be >= 1");
}

void WeightedLsProblem::add_block(const LinearBlock& block) {
  const Eigen::Index m = block.observation.size();
  if (m < 1 || block.design.rows() != m || block.design.cols() != state_dim_ ||
      block.covariance.rows() != m || block.covariance.cols() != m) {
    throw DomainError(fmt::format("block sizes inconsistent: A {}x{}, y {}, Sigma {}x{}",
                                  block.design.rows(), block.design.cols(), m,
                                  block.covariance.rows(), block.covariance.cols()));
  }
  Eigen::LLT<Eigen::MatrixXd> llt(block.covariance);
  if (llt.info() != Eigen::Success) throw DomainError("block covariance is not positive definite");
  const auto l = llt.matrixL();
  Eigen::MatrixXd wa = l.solve(block.design);
  Eigen::VectorXd wy = l.solve(block.observation);
  information_.push_back(wa.transpose() * wa);
  gradient_.push_back(wa.transpose() * wy);
  whitened_design_.push_back(std::move(wa));
  whitened_obs_.push_back(std::move(wy));
}

void WeightedLsProblem::add_block(const Eigen::MatrixXd& design, const Eigen::VectorXd& observation,
                                  double sigma) {
  if (!(sigma > 0.0)) throw DomainError("block sigma must be positive");
  const Eigen::Index m = observation.size();
  add_block({design, observation, Eigen::MatrixXd::Identity(m, m) * (sigma * sigma)});
}

Eigen::VectorXd WeightedLsProblem::residuals(const State& x) const {
  Eigen::VectorXd eps(block_count());
  for (int i = 0; i < block_count(); ++i) {
    eps[i] = (whitened_design_[i] * x - whitened_obs_[i]).norm();
  }
  return eps;
}

WeightedLsProblem::State WeightedLsProblem::solve(const Eigen::VectorXd& weights,
                                                  const State& /*current*/) const {
  return solve_weighted_linear(*this, weights);
}

void WeightedLsProblem::accumulate(const Eigen::VectorXd& weights, Eigen::MatrixXd& h,
                                   Eigen::VectorXd& b) const {
  for (int i = 0; i < block_count(); ++i) {
    if (weights[i] == 0.0) continue;
    h += weights[i] * information_[i];
    b += weights[i] * gradient_[i];
  }
}

Eigen::VectorXd solve_weighted_linear(const WeightedLsProblem& problem,
                                      const Eigen::VectorXd& weights) {
  if (weights.size() != problem.block_count()) {
    throw DomainError(fmt::format("{} weights for {} blocks", weights.size(), problem.block_count()));
  }
  const int n = problem.state_dim();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  problem.accumulate(weights, h, b);
  return solve_normal_equations(h, b);
}

Eigen::VectorXd solve_normal_equations(const Eigen::MatrixXd& h, const Eigen::VectorXd& b) {
  Eigen::LLT<Eigen::MatrixXd> llt(h);
  if (llt.info() != Eigen::Success) {
    const double n = static_cast<double>(h.rows());
    const double jitter = 1e-12 * h.trace() / n;
    llt.compute(h + jitter * Eigen::MatrixXd::Identity(h.rows(), h.cols()));
    // A matrix that only factors thanks to the jitter has rcond near 1e-12.
    if (llt.info() != Eigen::Success || llt.rcond() < kJitteredMinRcond) {
      throw RankError("normal matrix is singular");
    }
  }
  if (llt.rcond() < kMinRcond) {
    throw RankError(fmt::format("normal matrix is singular (rcond {:.3g})", llt.rcond()));
  }
  return llt.solve(b);
}

double state_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm(); }

double state_distance(const Pose& a, const Pose& b) {
  const PoseError e = pose_error(a, b);
  return std::hypot(e.rotation, e.translation);
}

WeightPolicy kernel_policy(const Kernel& kernel) {
  kernel.validate();
  return [kernel](const Eigen::VectorXd& eps) {
    WeightUpdate u{Eigen::VectorXd(eps.size()), 0.0};
    for (Eigen::Index i = 0; i < eps.size(); ++i) {
      u.weights[i] = weight(eps[i], kernel);
      u.loss += rho(eps[i], kernel);
    }
    return u;
  };
}

Twist gauss_newton_increment(const Eigen::Matrix<double, Eigen::Dynamic, 6>& jacobian,
                             const Eigen::VectorXd& residuals, const Eigen::VectorXd& weights) {
  if (jacobian.rows() != residuals.size() || weights.size() != residuals.size()) {
    throw DomainError("Jacobian, residual and weight sizes differ");
  }
  const Eigen::Matrix<double, 6, 6> h = jacobian.transpose() * weights.asDiagonal() * jacobian;
  const Vector6d g = jacobian.transpose() * (weights.array() * residuals.array()).matrix();

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> eig(h);
  const double largest = eig.eigenvalues()[5];
  if (!(largest > 0.0) || eig.eigenvalues()[0] <= kMinRcond * largest) {
    throw RankError(fmt::format("degenerate geometry: no constraint along [phi; rho] = {}",
                                format_vector(eig.eigenvectors().col(0))));
  }
  const Vector6d delta = Eigen::LLT<Eigen::Matrix<double, 6, 6>>(h).solve(-g);
  return Twist::from_vector(delta);
}

std::pair<Pose, SolverReport> gauss_newton_se3(const ResidualFunction& residual_fn,
                                               const JacobianFunction& jacobian_fn,
                                               const Eigen::VectorXd& weights, const Pose& init,
                                               const GaussNewtonOptions& options) {
  SolverReport report;
  Pose pose = init;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Eigen::VectorXd r = residual_fn(pose);
    if (r.isZero(0.0)) {
      report.converged = true;
      break;
    }
    const Twist delta = gauss_newton_increment(jacobian_fn(pose), r, weights);
    pose = retract_left(pose, delta);
    report.iterations = iter + 1;
    report.step_norms.push_back(delta.vector().norm());
    if (delta.phi.norm() < options.rotation_tolerance &&
        delta.rho.norm() < options.translation_tolerance) {
      report.converged = true;
      break;
    }
  }
  const Eigen::VectorXd r = residual_fn(pose);
  report.final_objective = 0.5 * (weights.array() * r.array().square()).sum();
  if (!std::isfinite(report.final_objective)) {
    throw DivergenceError("Gauss-Newton objective is not finite");
  }
  return {pose, report};
}

}  // namespace agnc
