#include "agnc/adaptive_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "agnc/errors.hpp"

namespace agnc {

void ResidualSet::validate() const {
  if (dim < 1) throw DomainError(fmt::format("residual dimension {} < 1", dim));
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) {
      throw DomainError(fmt::format("residual {} is not a nonnegative finite value", v));
    }
  }
}

double EmpiricalDensity::at(double eps) const {
  if (eps < 0.0 || eps > upper()) return 0.0;
  const auto bins = static_cast<std::ptrdiff_t>(masses.size());
  auto idx = static_cast<std::ptrdiff_t>(eps / bin_width());
  idx = std::clamp<std::ptrdiff_t>(idx, 0, bins - 1);
  return masses[static_cast<std::size_t>(idx)];
}

double EmpiricalDensity::peak() const {
  const auto it = std::max_element(masses.begin(), masses.end());
  const auto i = static_cast<std::size_t>(it - masses.begin());
  return 0.5 * (bin_edges[i] + bin_edges[i + 1]);
}

std::vector<ShapeParameter> default_alpha_grid() {
  std::vector<ShapeParameter> grid;
  for (double a : {2.0, 1.5, 1.0, 0.5, 0.0, -0.5, -1.0, -2.0, -4.0, -8.0, -16.0, -32.0}) {
    grid.emplace_back(a);
  }
  grid.push_back(ShapeParameter::negative_infinity());
  return grid;
}

void AlphaSearchConfig::validate() const {
  if (grid.empty()) throw ConfigError("alpha grid is empty");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("truncation bound tau must be > 0");
}

EmpiricalDensity estimate_density(const ResidualSet& residuals, int bin_count) {
  residuals.validate();
  if (residuals.values.empty()) throw DomainError("cannot estimate a density from no residuals");
  if (bin_count < 2) throw DomainError("density needs at least two bins");

  const double max_value = *std::max_element(residuals.values.begin(), residuals.values.end());
  // All-zero residuals still get a well-defined unit range.
  const double upper = max_value > 0.0 ? max_value : 1.0;
  const double width = upper / bin_count;

  EmpiricalDensity density;
  density.bin_edges.resize(static_cast<std::size_t>(bin_count) + 1);
  for (int i = 0; i <= bin_count; ++i) density.bin_edges[i] = width * i;
  density.bin_edges.back() = upper;
  density.masses.assign(static_cast<std::size_t>(bin_count), 0.0);

  for (double v : residuals.values) {
    auto idx = static_cast<int>(v / width);
    idx = std::clamp(idx, 0, bin_count - 1);
    density.masses[static_cast<std::size_t>(idx)] += 1.0;
  }
  const double norm = 1.0 / (static_cast<double>(residuals.values.size()) * width);
  for (double& m : density.masses) m *= norm;
  return density;
}

EmpiricalDensity estimate_density_within(const ResidualSet& residuals, int bin_count,
                                        double upper) {
  if (!(upper > 0.0)) throw DomainError("density bound must be positive");
  ResidualSet inside{{}, residuals.dim};
  for (double v : residuals.values) {
    if (v <= upper) inside.values.push_back(v);
  }
  if (inside.values.empty()) {
    throw DomainError(fmt::format("no residual inside the density bound {}", upper));
  }
  return estimate_density(inside, bin_count);
}

double partition_truncated_one_sided(ShapeParameter alpha, double tau, double quadrature_step) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("tau must be positive");
  if (!(quadrature_step > 0.0)) throw DomainError("quadrature step must be positive");
  const auto intervals = std::max<long>(1, std::lround(std::ceil(tau / quadrature_step)));
  const double h = tau / static_cast<double>(intervals);
  double sum = 0.5 * (std::exp(-rho_adaptive(0.0, alpha)) + std::exp(-rho_adaptive(tau, alpha)));
  for (long k = 1; k < intervals; ++k) {
    sum += std::exp(-rho_adaptive(h * static_cast<double>(k), alpha));
  }
  return sum * h;
}

double partition_truncated(ShapeParameter alpha, double tau, double quadrature_step) {
  // exp(-rho) is even in the residual.
  return 2.0 * partition_truncated_one_sided(alpha, tau, quadrature_step);
}

std::vector<double> alpha_objective(std::span<const double> residuals,
                                    const AlphaSearchConfig& cfg, bool one_sided) {
  cfg.validate();
  const double n = static_cast<double>(residuals.size());
  std::vector<double> objective;
  objective.reserve(cfg.grid.size());
  for (const ShapeParameter& alpha : cfg.grid) {
    const double z = one_sided ? partition_truncated_one_sided(alpha, cfg.tau, cfg.step())
                               : partition_truncated(alpha, cfg.tau, cfg.step());
    double total = n * std::log(z);
    for (double e : residuals) total += rho_adaptive(e, alpha);
    objective.push_back(total);
  }
  return objective;
}

namespace {

ShapeParameter argmin_alpha(const std::vector<ShapeParameter>& grid,
                            const std::vector<double>& objective) {
  std::ptrdiff_t best = -1;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(objective[i])) continue;
    if (best < 0) {
      best = static_cast<std::ptrdiff_t>(i);
      continue;
    }
    const auto b = static_cast<std::size_t>(best);
    if (objective[i] < objective[b] || (objective[i] == objective[b] && grid[b] < grid[i])) {
      best = static_cast<std::ptrdiff_t>(i);
    }
  }
  if (best < 0) throw FittingError("alpha grid objective is non-finite everywhere");
  return grid[static_cast<std::size_t>(best)];
}

}  // namespace

ShapeParameter select_alpha(const ResidualSet& residuals, const AlphaSearchConfig& cfg) {
  residuals.validate();
  if (residuals.values.empty()) throw DomainError("cannot select alpha from no residuals");
  return argmin_alpha(cfg.grid, alpha_objective(residuals.values, cfg, false));
}

ModeShiftedAlpha select_alpha_modeshifted(const ResidualSet& residuals, double mode,
                                          const AlphaSearchConfig& cfg) {
  residuals.validate();
  cfg.validate();
  if (!(mode >= 0.0) || !std::isfinite(mode)) throw DomainError("mode must be >= 0");
  if (!(cfg.tau > mode)) {
    throw ConfigError(fmt::format("truncation bound {} must exceed the mode {}", cfg.tau, mode));
  }

  std::vector<double> shifted;
  shifted.reserve(residuals.values.size());
  for (double e : residuals.values) {
    if (e > mode) shifted.push_back(e - mode);
  }
  ModeShiftedAlpha result;
  result.shifted_count = static_cast<int>(shifted.size());
  if (shifted.empty()) {
    result.degenerate = true;
    return result;
  }

  AlphaSearchConfig shifted_cfg = cfg;
  shifted_cfg.tau = cfg.tau - mode;
  if (cfg.quadrature_step <= 0.0) shifted_cfg.quadrature_step = shifted_cfg.tau / 2000.0;
  result.alpha = argmin_alpha(cfg.grid, alpha_objective(shifted, shifted_cfg, true));
  return result;
}

double mb_pdf(double eps, double a, int n_e) {
  if (!(a > 0.0)) throw DomainError("MB scale must be positive");
  if (n_e < 1) throw DomainError("MB dimension must be >= 1");
  if (eps < 0.0) return 0.0;
  const double n = n_e;
  const double log_norm =
      n * std::log(a) + (0.5 * n - 1.0) * std::numbers::ln2 + std::lgamma(0.5 * n);
  if (eps == 0.0) return n_e == 1 ? std::exp(-log_norm) : 0.0;
  return std::exp((n - 1.0) * std::log(eps) - log_norm - eps * eps / (2.0 * a * a));
}

namespace {

struct MbObjective {
  std::vector<double> nodes;
  std::vector<double> q;
  std::vector<double> trapezoid_weights;
  int n_e;

  struct Value {
    double j = 0.0;
    double grad = 0.0;
    double hess = 0.0;
  };

  Value evaluate(double a, bool derivatives) const {
    Value v;
    const double n = n_e;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (q[k] == 0.0) continue;
      const double e = nodes[k];
      const double p = mb_pdf(e, a, n_e);
      const double q2 = q[k] * q[k];
      const double diff = p - q[k];
      v.j += trapezoid_weights[k] * q2 * diff * diff;
      if (!derivatives) continue;
      // d log p / da and its derivative.
      const double s = e * e / (a * a * a) - n / a;
      const double ds = -3.0 * e * e / (a * a * a * a) + n / (a * a);
      const double dp = p * s;
      const double d2p = p * (s * s + ds);
      v.grad += trapezoid_weights[k] * 2.0 * q2 * diff * dp;
      v.hess += trapezoid_weights[k] * 2.0 * q2 * (dp * dp + diff * d2p);
    }
    return v;
  }
};

}  // namespace

MbFit fit_mb(const EmpiricalDensity& q, int n_e, double tau, const MbFitOptions& options) {
  if (n_e < 1) throw DomainError("MB dimension must be >= 1");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("tau must be positive");
  if (q.masses.empty() || q.bin_edges.size() != q.masses.size() + 1) {
    throw DomainError("empirical density is malformed");
  }

  MbObjective objective;
  objective.n_e = n_e;
  const int m = std::max(1, options.quadrature_intervals);
  const double h = tau / m;
  for (int k = 0; k <= m; ++k) {
    const double e = h * k;
    objective.nodes.push_back(e);
    objective.q.push_back(q.at(e));
    objective.trapezoid_weights.push_back((k == 0 || k == m) ? 0.5 * h : h);
  }

  double a = 0.0;
  if (n_e >= 2) {
    a = q.peak() / std::sqrt(static_cast<double>(n_e - 1));
  } else {
    double second_moment = 0.0;
    for (std::size_t i = 0; i < q.masses.size(); ++i) {
      const double c = 0.5 * (q.bin_edges[i] + q.bin_edges[i + 1]);
      second_moment += q.masses[i] * c * c * (q.bin_edges[i + 1] - q.bin_edges[i]);
    }
    a = std::sqrt(second_moment);
  }
  if (!(a > 0.0)) a = q.bin_width();

  MbFit fit;
  fit.n_e = n_e;
  bool converged = false;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    fit.iterations = iter + 1;
    const auto cur = objective.evaluate(a, true);
    if (!std::isfinite(cur.j) || !std::isfinite(cur.grad)) {
      throw FittingError("MB objective is not finite", a);
    }
    if (std::abs(cur.grad) < options.gradient_tolerance) {
      converged = true;
      break;
    }
    double step = cur.hess > 0.0 ? -cur.grad / cur.hess : -0.5 * a * std::copysign(1.0, cur.grad);
    // Keep the trial point positive before the sufficient-decrease test.
    while (a + step <= 0.0) step *= 0.5;

    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const double trial = a + t * step;
      const auto next = objective.evaluate(trial, false);
      if (std::isfinite(next.j) && next.j <= cur.j + 1e-4 * t * step * cur.grad) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // No descent along the Newton direction at machine precision.
      converged = true;
      break;
    }
    const double delta = t * step;
    a += delta;
    if (std::abs(delta) <= 1e-12 * a) {
      converged = true;
      break;
    }
  }
  if (!converged || !(a > 0.0) || !std::isfinite(a)) {
    throw FittingError(fmt::format("MB fit did not converge in {} iterations (a = {})",
                                   options.max_iterations, a),
                       a);
  }
  fit.a_star = a;
  fit.mode = a * std::sqrt(static_cast<double>(n_e - 1));
  return fit;
}

}  // namespace agnc
