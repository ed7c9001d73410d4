#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "agnc/experiments/report.hpp"
#include "agnc/methods.hpp"

namespace agnc {

struct LinRegConfig {
  int measurements = 2000;  // N
  int measurement_dim = 3;  // n
  int state_dim = 3;
  double sigma = 0.1;
  std::vector<double> outlier_rates{0.2, 0.4, 0.6, 0.8};
  int trials = 30;
  /// Outlier Mahalanobis radius is uniform in (1, max_multiple] times the
  /// inlier threshold.
  double outlier_max_multiple = 5.0;
  std::vector<Method> methods{Method::Welsch, Method::BA,   Method::CA,   Method::AMB,
                              Method::GncGM,  Method::GncTLS, Method::AGNC, Method::GncAMB};
  MethodParams params;  // params.alpha.tau is the truncation bound (default 5)
  std::uint64_t seed = 1;
  int threads = 1;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

struct LinRegData {
  std::vector<Eigen::MatrixXd> design;     // n x d per measurement
  std::vector<Eigen::VectorXd> observation;
  Eigen::VectorXd truth;
  std::vector<bool> outlier;
};

/// A entries and the true state are standard normal; inliers get N(0, sigma^2 I)
/// noise; exactly round(rate N) measurements become outliers whose error has a
/// uniformly random direction and Mahalanobis norm above the inlier threshold.
LinRegData gen_linreg(const LinRegConfig& cfg, double outlier_rate, std::mt19937_64& rng);

WeightedLsProblem make_problem(const LinRegData& data, double sigma);

/// Least-squares solution with unit weights (the pseudoinverse solution).
Eigen::VectorXd pseudoinverse_solution(const WeightedLsProblem& problem);

/// Monte-Carlo benchmark. Metric: "error", the norm of the parameter error.
/// The plain LS solution of each trial is recorded as method "LS".
ExperimentReport run_linreg_mc(const LinRegConfig& cfg);

}  // namespace agnc
