#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "agnc/gnc.hpp"

namespace agnc {

/// One (trial, method) result.
struct TrialRow {
  std::string condition;  // e.g. "rate=0.6" or "hard/overlap=0.7"
  std::string method;
  int trial = 0;
  std::vector<double> metrics;  // parallel to ExperimentReport::metric_names
  int iterations = 0;
  bool converged = false;
  bool success = false;
  /// "" for a normal row, "failed: <reason>" when the method threw, or
  /// "degenerate" when the success predicate is undefined for the trial.
  std::string flag;
  double time_s = 0.0;
  double time_per_iteration_s = 0.0;

  bool usable() const { return flag.empty(); }
};

struct StageRow {
  std::string condition;
  std::string method;
  int trial = 0;
  StageRecord stage;
};

/// Percentiles of one metric for one (condition, method) cell. Percentiles use
/// the nearest-rank definition over the usable rows; `success_rate` counts
/// failed rows as unsuccessful and ignores degenerate ones.
struct SummaryRow {
  std::string condition;
  std::string method;
  std::string metric;
  int count = 0;
  double p50 = 0.0;
  double p75 = 0.0;
  double p90 = 0.0;
  double success_rate = 0.0;
  double median_time_s = 0.0;
  double time_ratio = 0.0;  // median time over the fastest method's in the condition
};

struct ExperimentReport {
  std::vector<std::string> metric_names;
  std::vector<TrialRow> rows;
  std::vector<StageRow> stages;

  /// Cells in first-appearance order of condition, then method.
  std::vector<SummaryRow> summarize() const;
  const SummaryRow* find(const std::vector<SummaryRow>& summary, const std::string& condition,
                         const std::string& method, const std::string& metric) const;

  void write_rows(std::ostream& os) const;
  void write_summary(std::ostream& os, const std::vector<SummaryRow>& summary) const;
  void write_stages(std::ostream& os) const;
  /// rows.csv, summary.csv and stages.csv in `dir` (created if missing).
  void write(const std::filesystem::path& dir) const;

  /// Reads rows.csv and summary.csv back; throws DomainError if the stored
  /// summary differs from the one recomputed from the rows.
  static ExperimentReport load(const std::filesystem::path& dir);
};

/// Random stream for one (seed, condition, trial) triple.
std::mt19937_64 trial_rng(std::uint64_t seed, int condition, int trial);

/// Runs `count` independent jobs on up to `threads` workers. Jobs write to
/// their own output slot, so the result does not depend on the thread count.
void parallel_for(int count, int threads, const std::function<void(int)>& job);

}  // namespace agnc
