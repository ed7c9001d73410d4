#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <exception>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <fmt/format.h>

#include "agnc/adaptive_fit.hpp"
#include "agnc/errors.hpp"
#include "agnc/loss.hpp"

namespace agnc {

/// IncreasingMu sweeps mu upward from 0 (f = (a mu + 2) / (mu + 1), or 2 - mu when
/// a = -inf). DecreasingMu sweeps mu downward to 1 (f = (a + 2 mu - 2) / mu, or
/// (2 mu - 3) / (mu - 1) when a = -inf).
enum class ShapeVariant { IncreasingMu, DecreasingMu };

double shape_fn(ShapeVariant variant, double mu, ShapeParameter alpha_star);

/// Weight minimizing 0.5 w e^2 + Phi(w) for the surrogate of shape f. Shares
/// the implementation of weight_adaptive; f may be -infinity.
double gnc_weight(double eps, double f);

/// Surrogate loss rho_mu(e) for shape f (f may be -infinity).
double gnc_surrogate(double eps, double f);

/// Outlier process of the adaptive surrogate. f = 0, f = 2 and f = -inf use
/// their limit forms w - 1 - log w, 0 and 1 - w + w log w.
double outlier_process_agnc(double w, double f);

/// GNC Geman-McClure weight (mu c^2 / (e^2 + mu c^2))^2.
double weight_gnc_gm(double eps, double mu, double c);
/// GNC truncated least-squares weight with threshold c-bar.
double weight_gnc_tls(double eps, double mu, double cbar);

struct GncSchedule {
  ShapeVariant variant = ShapeVariant::DecreasingMu;
  double update_factor = 1.4;
  /// |f - 2| at the first stage.
  double start_tolerance = 1e-6;
  /// |f - alpha*| that ends the sweep.
  double f_tolerance = 1e-3;
  /// Sweep end for alpha* = -inf.
  double f_floor = -32.0;
  int max_stages = 200;
  /// Weighted solves per stage.
  int inner_iterations = 1;

  void validate() const;
};

/// First mu of the sweep, chosen so |f(mu, alpha*) - 2| <= start_tolerance.
double initial_mu(const GncSchedule& schedule, ShapeParameter alpha_star);
/// Next mu, clamped so the sweep lands exactly on its end point.
double next_mu(const GncSchedule& schedule, double mu, ShapeParameter alpha_star);
bool sweep_finished(const GncSchedule& schedule, double f, ShapeParameter alpha_star);
/// Moves mu back into the shape function's domain and sweep range for
/// alpha_star; used when alpha* is refitted in the middle of a sweep.
double clamp_mu(const GncSchedule& schedule, double mu, ShapeParameter alpha_star);

struct GncWeightRule {
  enum class Tag { AGNC, GncAmb, GncGM, GncTLS };
  Tag tag = Tag::AGNC;
  ShapeParameter alpha_star{2.0};
  double mode = 0.0;       // GncAmb
  double threshold = 1.0;  // c for GncGM, c-bar for GncTLS

  static GncWeightRule agnc(ShapeParameter a) { return {Tag::AGNC, a, 0.0, 1.0}; }
  static GncWeightRule gnc_amb(ShapeParameter a, double mode) { return {Tag::GncAmb, a, mode, 1.0}; }
  static GncWeightRule gnc_gm(double c) { return {Tag::GncGM, ShapeParameter{2.0}, 0.0, c}; }
  static GncWeightRule gnc_tls(double cbar) { return {Tag::GncTLS, ShapeParameter{2.0}, 0.0, cbar}; }

  void validate() const;
};

/// One GNC stage; `f` is NaN for the Geman-McClure and TLS rules.
struct StageRecord {
  int stage = 0;
  double mu = 0.0;
  double f = 0.0;
  double objective = 0.0;  // sum of 0.5 w e^2 after the stage's solve
  int inlier_count = 0;    // weights >= 0.5
};

void write_stage_csv_header(std::ostream& os);
void write_stage_csv_row(std::ostream& os, const StageRecord& record);

template <typename State>
struct GncResult {
  State state;
  Eigen::VectorXd weights;
  std::vector<StageRecord> stages;
  bool finished = false;  // false when max_stages ran out first
};

/// A weighted least-squares problem GNC can drive: Mahalanobis residuals at a
/// state, and a weighted solve starting from a state.
template <typename P>
concept GncProblem = requires(P& p, const typename P::State& x, const Eigen::VectorXd& w) {
  typename P::State;
  { p.residuals(x) } -> std::convertible_to<Eigen::VectorXd>;
  { p.solve(w, x) } -> std::convertible_to<typename P::State>;
};

namespace detail {

double rule_weight(const GncWeightRule& rule, double eps, double mu, double f);
double gm_initial_mu(const Eigen::VectorXd& eps, double c);
double tls_initial_mu(const Eigen::VectorXd& eps, double cbar);

}  // namespace detail

/// Graduated nonconvexity driver: per stage compute the surrogate shape,
/// weights from the current residuals, one weighted solve, then advance mu.
template <GncProblem P>
GncResult<typename P::State> run_gnc(P& problem, typename P::State init,
                                     const GncWeightRule& rule, const GncSchedule& schedule) {
  using Tag = GncWeightRule::Tag;
  rule.validate();
  schedule.validate();

  GncResult<typename P::State> result{std::move(init), {}, {}, false};
  Eigen::VectorXd eps = problem.residuals(result.state);

  const bool adaptive = rule.tag == Tag::AGNC || rule.tag == Tag::GncAmb;
  double mu = 0.0;
  if (adaptive) {
    mu = initial_mu(schedule, rule.alpha_star);
  } else if (rule.tag == Tag::GncGM) {
    mu = detail::gm_initial_mu(eps, rule.threshold);
  } else {
    mu = detail::tls_initial_mu(eps, rule.threshold);
  }

  for (int stage = 0; stage < schedule.max_stages; ++stage) {
    const double f = adaptive ? shape_fn(schedule.variant, mu, rule.alpha_star)
                              : std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd w(eps.size());
    for (Eigen::Index i = 0; i < eps.size(); ++i) w[i] = detail::rule_weight(rule, eps[i], mu, f);

    for (int inner = 0; inner < schedule.inner_iterations; ++inner) {
      try {
        result.state = problem.solve(w, result.state);
      } catch (const std::exception& e) {
        throw SolverError(fmt::format("GNC stage {} (mu = {}): {}", stage, mu, e.what()));
      }
      eps = problem.residuals(result.state);
      if (inner + 1 < schedule.inner_iterations) {
        for (Eigen::Index i = 0; i < eps.size(); ++i) {
          w[i] = detail::rule_weight(rule, eps[i], mu, f);
        }
      }
    }

    StageRecord record;
    record.stage = stage;
    record.mu = mu;
    record.f = f;
    record.objective = 0.5 * (w.array() * eps.array().square()).sum();
    record.inlier_count = static_cast<int>((w.array() >= 0.5).count());
    result.stages.push_back(record);
    result.weights = w;
    if (!std::isfinite(record.objective)) {
      throw DivergenceError(fmt::format("GNC objective diverged at stage {}", stage));
    }

    bool done = false;
    switch (rule.tag) {
      case Tag::AGNC:
      case Tag::GncAmb:
        done = sweep_finished(schedule, f, rule.alpha_star);
        if (!done) mu = next_mu(schedule, mu, rule.alpha_star);
        break;
      case Tag::GncGM:
        done = mu <= 1.0;
        mu = std::max(1.0, mu / schedule.update_factor);
        break;
      case Tag::GncTLS:
        done = ((w.array() == 0.0) || (w.array() == 1.0)).all();
        mu *= schedule.update_factor;
        break;
    }
    if (done) {
      result.finished = true;
      break;
    }
  }
  return result;
}

template <typename State>
struct AdaptiveGncResult {
  GncResult<State> gnc;
  ShapeParameter alpha_star{2.0};
  MbFit mb;                          // GNC-AMB only
  bool mode_shift_degenerate = false;
};

struct AdaptiveFitOptions {
  AlphaSearchConfig alpha;
  int residual_dim = 1;   // n_e
  int density_bins = 100;
  /// Build q(e) from the residuals inside [0, tau] only.
  bool density_within_tau = true;
  bool force_zero_mode = false;
};

/// Shape parameter fitted once on the initial residuals, then the AGNC sweep.
template <GncProblem P>
AdaptiveGncResult<typename P::State> agnc_pipeline(P& problem, typename P::State init,
                                                   const AdaptiveFitOptions& options,
                                                   const GncSchedule& schedule) {
  const Eigen::VectorXd eps = problem.residuals(init);
  ResidualSet set{std::vector<double>(eps.data(), eps.data() + eps.size()), options.residual_dim};
  AdaptiveGncResult<typename P::State> out{{}, select_alpha(set, options.alpha), {}, false};
  out.gnc = run_gnc(problem, std::move(init), GncWeightRule::agnc(out.alpha_star), schedule);
  return out;
}

/// GNC over the AMB loss: fit a*, take the MB mode, fit alpha* on the
/// mode-shifted residuals, then sweep with the mode-shifted AGNC weights.
template <GncProblem P>
AdaptiveGncResult<typename P::State> gnc_amb_pipeline(P& problem, typename P::State init,
                                                      const AdaptiveFitOptions& options,
                                                      const GncSchedule& schedule) {
  const Eigen::VectorXd eps = problem.residuals(init);
  ResidualSet set{std::vector<double>(eps.data(), eps.data() + eps.size()), options.residual_dim};

  AdaptiveGncResult<typename P::State> out;
  if (options.force_zero_mode) {
    out.mb = MbFit{0.0, options.residual_dim, 0.0, 0};
  } else {
    const EmpiricalDensity q =
        options.density_within_tau
            ? estimate_density_within(set, options.density_bins, options.alpha.tau)
            : estimate_density(set, options.density_bins);
    out.mb = fit_mb(q, options.residual_dim, options.alpha.tau);
  }
  const double mode = out.mb.mode;
  const ModeShiftedAlpha shifted = select_alpha_modeshifted(set, mode, options.alpha);
  out.alpha_star = shifted.alpha;
  out.mode_shift_degenerate = shifted.degenerate;
  out.gnc = run_gnc(problem, std::move(init), GncWeightRule::gnc_amb(out.alpha_star, mode), schedule);
  return out;
}

}  // namespace agnc
