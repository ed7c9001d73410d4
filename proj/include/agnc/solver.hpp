#pragma once

#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "agnc/geometry/lie.hpp"
#include "agnc/loss.hpp"

namespace agnc {

/// One measurement block of a linear model: error e = A x - y with covariance Sigma.
struct LinearBlock {
  Eigen::MatrixXd design;
  Eigen::VectorXd observation;
  Eigen::MatrixXd covariance;
};

/// Sum over blocks of 0.5 w_i ||A_i x - y_i||^2 in the metric Sigma_i^-1.
///
/// Blocks are whitened once on insertion, so residual evaluation and the
/// normal-equation assembly only touch precomputed products.
class WeightedLsProblem {
 public:
  using State = Eigen::VectorXd;

  explicit WeightedLsProblem(int state_dim);

  /// Throws DomainError on inconsistent sizes or a non-SPD covariance.
  void add_block(const LinearBlock& block);
  /// Block with covariance sigma^2 I.
  void add_block(const Eigen::MatrixXd& design, const Eigen::VectorXd& observation, double sigma);

  int state_dim() const { return state_dim_; }
  int block_count() const { return static_cast<int>(whitened_design_.size()); }
  int block_dim(int i) const { return static_cast<int>(whitened_obs_[i].size()); }

  /// Mahalanobis residual per block.
  Eigen::VectorXd residuals(const State& x) const;
  /// Weighted minimizer; the current state is unused because the problem is linear.
  State solve(const Eigen::VectorXd& weights, const State& current) const;

  /// Adds sum w_i A_i^T Sigma_i^-1 A_i to h and sum w_i A_i^T Sigma_i^-1 y_i to b.
  void accumulate(const Eigen::VectorXd& weights, Eigen::MatrixXd& h, Eigen::VectorXd& b) const;

 private:
  int state_dim_;
  std::vector<Eigen::MatrixXd> whitened_design_;
  std::vector<Eigen::VectorXd> whitened_obs_;
  std::vector<Eigen::MatrixXd> information_;  // A^T Sigma^-1 A
  std::vector<Eigen::VectorXd> gradient_;     // A^T Sigma^-1 y
};

/// Minimizer of the weighted linear problem. Throws RankError when the normal
/// matrix is singular.
Eigen::VectorXd solve_weighted_linear(const WeightedLsProblem& problem,
                                      const Eigen::VectorXd& weights);

/// Solves the SPD system H x = b. A jitter of 1e-12 trace(H)/n is added only
/// when the plain Cholesky factorization fails.
Eigen::VectorXd solve_normal_equations(const Eigen::MatrixXd& h, const Eigen::VectorXd& b);

struct SolverReport {
  int iterations = 0;
  double final_objective = 0.0;
  bool converged = false;
  bool diverged = false;
  std::vector<double> step_norms;
};

double state_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
double state_distance(const Pose& a, const Pose& b);

/// Weights and total loss for a residual vector.
struct WeightUpdate {
  Eigen::VectorXd weights;
  double loss = 0.0;
};

/// Maps residuals to IRLS weights, possibly refitting kernel parameters.
using WeightPolicy = std::function<WeightUpdate(const Eigen::VectorXd& residuals)>;

/// Fixed kernel: weights w(e_i) and loss sum rho(e_i).
WeightPolicy kernel_policy(const Kernel& kernel);

template <typename P>
concept IrlsProblem = requires(P& p, const typename P::State& x, const Eigen::VectorXd& w) {
  { p.residuals(x) } -> std::convertible_to<Eigen::VectorXd>;
  { p.solve(w, x) } -> std::convertible_to<typename P::State>;
  { state_distance(x, x) } -> std::convertible_to<double>;
};

/// Iteratively reweighted least squares from `init`. Stops when the state
/// update is below `tol`, when the weights stop changing, or after `max_iter`
/// solves. Three consecutive loss increases mark the run diverged and the best
/// iterate is returned.
template <IrlsProblem P>
std::pair<typename P::State, SolverReport> irls(P& problem, const WeightPolicy& policy,
                                                typename P::State init, double tol,
                                                int max_iter) {
  SolverReport report;
  typename P::State x = std::move(init);
  WeightUpdate update = policy(problem.residuals(x));
  typename P::State best = x;
  double best_loss = update.loss;
  double prev_loss = update.loss;
  int increases = 0;

  for (int iter = 0; iter < max_iter; ++iter) {
    typename P::State next = problem.solve(update.weights, x);
    const double step = state_distance(next, x);
    report.step_norms.push_back(step);
    report.iterations = iter + 1;
    x = std::move(next);

    WeightUpdate next_update = policy(problem.residuals(x));
    const bool same_weights = next_update.weights == update.weights;
    update = std::move(next_update);

    if (update.loss < best_loss) {
      best_loss = update.loss;
      best = x;
    }
    increases = update.loss > prev_loss ? increases + 1 : 0;
    prev_loss = update.loss;
    if (increases >= 3) {
      report.diverged = true;
      break;
    }
    if (step < tol || same_weights) {
      report.converged = true;
      break;
    }
  }
  if (report.diverged) {
    report.final_objective = best_loss;
    return {best, report};
  }
  report.final_objective = update.loss;
  return {x, report};
}

template <IrlsProblem P>
std::pair<typename P::State, SolverReport> irls(P& problem, const Kernel& kernel,
                                                typename P::State init, double tol,
                                                int max_iter) {
  return irls(problem, kernel_policy(kernel), std::move(init), tol, max_iter);
}

using ResidualFunction = std::function<Eigen::VectorXd(const Pose&)>;
using JacobianFunction = std::function<Eigen::Matrix<double, Eigen::Dynamic, 6>(const Pose&)>;

/// Weighted Gauss-Newton increment in the left-perturbation Lie algebra:
/// (J^T W J) delta = -J^T W r. Throws RankError naming the weakest direction
/// when J^T W J is singular.
Twist gauss_newton_increment(const Eigen::Matrix<double, Eigen::Dynamic, 6>& jacobian,
                             const Eigen::VectorXd& residuals, const Eigen::VectorXd& weights);

struct GaussNewtonOptions {
  double rotation_tolerance = 1e-3;     // rad
  double translation_tolerance = 1e-3;  // m
  int max_iterations = 50;
};

/// Gauss-Newton over SE(3) with T <- exp(delta^) T.
std::pair<Pose, SolverReport> gauss_newton_se3(const ResidualFunction& residual_fn,
                                               const JacobianFunction& jacobian_fn,
                                               const Eigen::VectorXd& weights, const Pose& init,
                                               const GaussNewtonOptions& options = {});

}  // namespace agnc
