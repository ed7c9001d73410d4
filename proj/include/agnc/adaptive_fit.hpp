#pragma once

#include <span>
#include <vector>

#include "agnc/loss.hpp"

namespace agnc {

/// Nonnegative Mahalanobis residuals together with the dimension of the
/// underlying error vector.
struct ResidualSet {
  std::vector<double> values;
  int dim = 1;

  /// Throws DomainError on negative/non-finite values or dim < 1.
  void validate() const;
};

/// Fixed-width histogram normalized to unit integral.
struct EmpiricalDensity {
  std::vector<double> bin_edges;  // bin_count + 1 ascending edges, first is 0
  std::vector<double> masses;     // density value per bin

  double bin_width() const { return bin_edges[1] - bin_edges[0]; }
  double upper() const { return bin_edges.back(); }
  /// Density at eps; 0 outside [0, upper].
  double at(double eps) const;
  /// Center of the highest bin (first one on ties).
  double peak() const;
};

/// Result of fitting a Maxwell-Boltzmann density.
struct MbFit {
  double a_star = 1.0;
  int n_e = 1;
  double mode = 0.0;  // a_star * sqrt(n_e - 1)
  int iterations = 0;
};

/// Default alpha grid: 2 down to -32 plus -inf.
std::vector<ShapeParameter> default_alpha_grid();

struct AlphaSearchConfig {
  std::vector<ShapeParameter> grid = default_alpha_grid();
  double tau = 5.0;
  /// Quadrature step for the truncated partition function; <= 0 means tau / 2000.
  double quadrature_step = 0.0;

  double step() const { return quadrature_step > 0.0 ? quadrature_step : tau / 2000.0; }
  void validate() const;
};

EmpiricalDensity estimate_density(const ResidualSet& residuals, int bin_count);
/// Density of the residuals that fall inside [0, upper]. Residuals beyond the
/// truncation bound are left out, so far outliers do not flatten the inlier
/// peak. Throws DomainError when no residual is inside.
EmpiricalDensity estimate_density_within(const ResidualSet& residuals, int bin_count, double upper);

/// Integral of exp(-rho(e, alpha)) over [-tau, tau] by composite trapezoid.
double partition_truncated(ShapeParameter alpha, double tau, double quadrature_step);
/// One-sided version over [0, tau], used for mode-shifted residuals.
double partition_truncated_one_sided(ShapeParameter alpha, double tau, double quadrature_step);

/// Grid objective N log Z(alpha) + sum rho(e_i, alpha), one entry per grid value.
std::vector<double> alpha_objective(std::span<const double> residuals,
                                    const AlphaSearchConfig& cfg, bool one_sided = false);

/// Argmin of the grid objective; ties go to the larger alpha.
ShapeParameter select_alpha(const ResidualSet& residuals, const AlphaSearchConfig& cfg);

struct ModeShiftedAlpha {
  ShapeParameter alpha{2.0};
  int shifted_count = 0;      // number of residuals strictly above the mode
  bool degenerate = false;    // no residual above the mode; alpha forced to 2
};

/// Alpha fitted to xi = eps - mode over the residuals above the mode, with the
/// partition integral taken over [0, tau - mode].
ModeShiftedAlpha select_alpha_modeshifted(const ResidualSet& residuals, double mode,
                                          const AlphaSearchConfig& cfg);

/// Maxwell-Boltzmann density of dimension n_e with scale a.
double mb_pdf(double eps, double a, int n_e);

struct MbFitOptions {
  int max_iterations = 50;
  double gradient_tolerance = 1e-8;
  int quadrature_intervals = 2000;
};

/// Fits a* minimizing the integral over [0, tau] of (q (p_MB - q))^2 by Newton's
/// method with a halving line search.
MbFit fit_mb(const EmpiricalDensity& q, int n_e, double tau, const MbFitOptions& options = {});

}  // namespace agnc
