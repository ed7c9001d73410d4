#include "agnc/experiments/linreg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "agnc/errors.hpp"
#include "agnc/stats.hpp"

namespace agnc {

void LinRegConfig::validate() const {
  if (measurements < 1 || measurement_dim < 1 || state_dim < 1) {
    throw ConfigError("measurement count and dimensions must be >= 1");
  }
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (outlier_rates.empty()) throw ConfigError("at least one outlier rate is required");
  for (double r : outlier_rates) {
    if (!(r >= 0.0 && r < 1.0)) throw ConfigError(fmt::format("outlier rate {} outside [0, 1)", r));
    if (r > 0.0 && std::lround(r * measurements) < 1) {
      throw ConfigError(fmt::format("outlier rate {} gives no outliers at N = {}", r, measurements));
    }
  }
  if (!(outlier_max_multiple > 1.0)) throw ConfigError("outlier_max_multiple must exceed 1");
  if (methods.empty()) throw ConfigError("no methods selected");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  params.alpha.validate();
  params.schedule.validate();
}

LinRegData gen_linreg(const LinRegConfig& cfg, double outlier_rate, std::mt19937_64& rng) {
  const int n = cfg.measurement_dim;
  const int d = cfg.state_dim;
  const int count = cfg.measurements;
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  auto gaussian = [&](Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
    }
    return m;
  };

  LinRegData data;
  data.truth = gaussian(d, 1).col(0);

  const auto outliers = static_cast<int>(std::lround(outlier_rate * count));
  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  data.outlier.assign(count, false);
  for (int k = 0; k < outliers; ++k) data.outlier[order[k]] = true;

  const double radius = inlier_threshold(n);
  for (int i = 0; i < count; ++i) {
    Eigen::MatrixXd a = gaussian(n, d);
    Eigen::VectorXd noise;
    if (data.outlier[i]) {
      Eigen::VectorXd dir;
      do {
        dir = gaussian(n, 1).col(0);
      } while (dir.norm() < 1e-12);
      const double scale = radius * (cfg.outlier_max_multiple - (cfg.outlier_max_multiple - 1.0) * uniform(rng));
      noise = cfg.sigma * scale * dir.normalized();
    } else {
      noise = cfg.sigma * gaussian(n, 1).col(0);
    }
    data.observation.push_back(a * data.truth + noise);
    data.design.push_back(std::move(a));
  }
  return data;
}

WeightedLsProblem make_problem(const LinRegData& data, double sigma) {
  WeightedLsProblem problem(static_cast<int>(data.truth.size()));
  for (std::size_t i = 0; i < data.design.size(); ++i) {
    problem.add_block(data.design[i], data.observation[i], sigma);
  }
  return problem;
}

Eigen::VectorXd pseudoinverse_solution(const WeightedLsProblem& problem) {
  return solve_weighted_linear(problem, Eigen::VectorXd::Ones(problem.block_count()));
}

ExperimentReport run_linreg_mc(const LinRegConfig& cfg) {
  cfg.validate();
  using Clock = std::chrono::steady_clock;
  const int rates = static_cast<int>(cfg.outlier_rates.size());
  const int jobs = rates * cfg.trials;
  const std::size_t per_job = cfg.methods.size() + 1;

  std::vector<std::vector<TrialRow>> rows(jobs);
  std::vector<std::vector<StageRow>> stages(jobs);

  parallel_for(jobs, cfg.threads, [&](int job) {
    const int ci = job / cfg.trials;
    const int trial = job % cfg.trials;
    const double rate = cfg.outlier_rates[ci];
    const std::string condition = fmt::format("rate={}", rate);
    std::mt19937_64 rng = trial_rng(cfg.seed, ci, trial);
    const LinRegData data = gen_linreg(cfg, rate, rng);
    WeightedLsProblem problem = make_problem(data, cfg.sigma);

    auto& out = rows[job];
    out.reserve(per_job);
    const auto t0 = Clock::now();
    const Eigen::VectorXd init = pseudoinverse_solution(problem);
    const double ls_time = std::chrono::duration<double>(Clock::now() - t0).count();
    out.push_back({condition, "LS", trial, {(init - data.truth).norm()}, 1, true, false, "",
                   ls_time, ls_time});

    for (Method m : cfg.methods) {
      TrialRow row;
      row.condition = condition;
      row.method = std::string(method_name(m));
      row.trial = trial;
      const auto start = Clock::now();
      try {
        auto result = solve_with_method(problem, m, cfg.params, init);
        row.metrics = {(result.state - data.truth).norm()};
        row.iterations = result.iterations;
        row.converged = result.converged;
        for (const StageRecord& s : result.stages) {
          stages[job].push_back({condition, row.method, trial, s});
        }
      } catch (const std::exception& e) {
        row.metrics = {std::numeric_limits<double>::quiet_NaN()};
        row.flag = fmt::format("failed: {}", e.what());
      }
      row.time_s = std::chrono::duration<double>(Clock::now() - start).count();
      row.time_per_iteration_s = row.iterations > 0 ? row.time_s / row.iterations : row.time_s;
      out.push_back(std::move(row));
    }
  });

  ExperimentReport report;
  report.metric_names = {"error"};
  for (int job = 0; job < jobs; ++job) {
    for (auto& r : rows[job]) report.rows.push_back(std::move(r));
    for (auto& s : stages[job]) report.stages.push_back(std::move(s));
  }
  return report;
}

}  // namespace agnc
