#pragma once

#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "agnc/adaptive_fit.hpp"
#include "agnc/gnc.hpp"
#include "agnc/loss.hpp"
#include "agnc/solver.hpp"

namespace agnc {

/// Robust estimation methods compared by the benchmarks.
///
///   LS       plain least squares (reference)
///   Cauchy   fixed Cauchy kernel, IRLS
///   Welsch   fixed Welsch kernel, IRLS
///   BA       adaptive loss, alpha refit each iteration, alpha >= 0 grid with a
///            nearly untruncated partition function
///   CA       adaptive loss, alpha refit each iteration over the full grid with
///            the truncated partition function
///   AMB      mode-shifted adaptive loss, mode and alpha refit each iteration
///   GncGM    GNC with Geman-McClure
///   GncTLS   GNC with truncated least squares
///   AGNC     GNC over the adaptive loss, alpha fitted once at the start
///   GncAMB   GNC over the mode-shifted adaptive loss
enum class Method { LS, Cauchy, Welsch, BA, CA, AMB, GncGM, GncTLS, AGNC, GncAMB };

std::string_view method_name(Method m);
/// Accepts the names printed by method_name, case-insensitive, with or
/// without dashes ("GNC-AMB", "gncamb"). Throws ConfigError otherwise.
Method parse_method(std::string_view name);
/// Comma-separated list.
std::vector<Method> parse_method_list(std::string_view list);
bool is_gnc(Method m);

struct MethodParams {
  int residual_dim = 3;
  double cauchy_scale = 1.0;
  double welsch_scale = 1.0;
  /// GNC-GM scale c and GNC-TLS threshold c-bar; <= 0 selects inlier_threshold(residual_dim).
  double gm_scale = 0.0;
  double tls_threshold = 0.0;
  /// Alpha search for CA, AMB, AGNC and GNC-AMB.
  AlphaSearchConfig alpha;
  /// Truncation bound for BA; large enough that the partition function is
  /// effectively the untruncated one for alpha >= 0.
  double ba_tau = 100.0;
  int density_bins = 100;
  bool density_within_tau = true;
  GncSchedule schedule;
  double irls_tolerance = 1e-8;
  int irls_max_iterations = 100;

  double resolved_gm_scale() const;
  double resolved_tls_threshold() const;
};

/// Weight policy of a non-GNC method. The reported loss is the quantity the
/// method minimizes: sum rho for fixed kernels, and the grid objective
/// N log Z + sum rho at the selected alpha for the adaptive ones.
WeightPolicy method_policy(Method m, const MethodParams& params);

/// Alpha search used by BA.
AlphaSearchConfig ba_alpha_config(const MethodParams& params);

template <typename State>
struct MethodOutcome {
  State state;
  int iterations = 0;  // IRLS iterations, or GNC stages
  bool converged = false;
  bool diverged = false;
  std::vector<StageRecord> stages;
  std::optional<ShapeParameter> alpha_star;  // AGNC and GNC-AMB
  double mode = std::numeric_limits<double>::quiet_NaN();
};

template <GncProblem P>
  requires IrlsProblem<P>
MethodOutcome<typename P::State> solve_with_method(P& problem, Method m,
                                                   const MethodParams& params,
                                                   typename P::State init) {
  using State = typename P::State;
  MethodOutcome<State> out;
  AdaptiveFitOptions fit;
  fit.alpha = params.alpha;
  fit.residual_dim = params.residual_dim;
  fit.density_bins = params.density_bins;
  fit.density_within_tau = params.density_within_tau;

  auto take_gnc = [&out](GncResult<State>&& g) {
    out.state = std::move(g.state);
    out.iterations = static_cast<int>(g.stages.size());
    out.converged = g.finished;
    out.stages = std::move(g.stages);
  };

  switch (m) {
    case Method::GncGM:
      take_gnc(run_gnc(problem, std::move(init), GncWeightRule::gnc_gm(params.resolved_gm_scale()),
                       params.schedule));
      return out;
    case Method::GncTLS:
      take_gnc(run_gnc(problem, std::move(init),
                       GncWeightRule::gnc_tls(params.resolved_tls_threshold()), params.schedule));
      return out;
    case Method::AGNC: {
      auto r = agnc_pipeline(problem, std::move(init), fit, params.schedule);
      out.alpha_star = r.alpha_star;
      take_gnc(std::move(r.gnc));
      return out;
    }
    case Method::GncAMB: {
      auto r = gnc_amb_pipeline(problem, std::move(init), fit, params.schedule);
      out.alpha_star = r.alpha_star;
      out.mode = r.mb.mode;
      take_gnc(std::move(r.gnc));
      return out;
    }
    default:
      break;
  }
  auto [state, report] = irls(problem, method_policy(m, params), std::move(init),
                              params.irls_tolerance, params.irls_max_iterations);
  out.state = std::move(state);
  out.iterations = report.iterations;
  out.converged = report.converged;
  out.diverged = report.diverged;
  return out;
}

}  // namespace agnc
