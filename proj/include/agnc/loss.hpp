#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace agnc {

/// Shape parameter of the general adaptive loss, alpha in [-inf, 2].
///
/// Negative infinity is stored as a sentinel rather than as an IEEE infinity;
/// every piecewise formula dispatches on `branch()` so the general branch never
/// sees an infinite exponent.
class ShapeParameter {
 public:
  enum class Branch { Quadratic, Cauchy, Welsch, General };

  /// Tolerance of the near-branch guard around alpha = 0 and alpha = 2.
  static constexpr double kBranchGuard = 1e-5;

  /// Accepts any finite alpha <= 2, or -infinity (mapped to the sentinel).
  explicit ShapeParameter(double alpha);

  static ShapeParameter negative_infinity();

  bool is_negative_infinity() const noexcept { return neg_inf_; }
  /// Numeric value; -infinity for the sentinel.
  double value() const noexcept;
  Branch branch() const noexcept;

  friend bool operator==(const ShapeParameter&, const ShapeParameter&) = default;
  /// Total order with the sentinel below every finite value.
  friend bool operator<(const ShapeParameter& a, const ShapeParameter& b) {
    if (a.neg_inf_ || b.neg_inf_) return a.neg_inf_ && !b.neg_inf_;
    return a.alpha_ < b.alpha_;
  }

  std::string to_string() const;

 private:
  ShapeParameter() = default;
  double alpha_ = 2.0;
  bool neg_inf_ = false;
};

/// Parses "2", "-0.5", "-inf".
ShapeParameter parse_shape_parameter(std::string_view text);

enum class KernelTag {
  Quadratic,
  Cauchy,
  Welsch,
  GemanMcClure,
  TruncatedLS,
  BarronAdaptive,
  AMB,
};

std::string_view kernel_name(KernelTag tag);
/// Case-insensitive; throws ConfigError for unknown names.
KernelTag parse_kernel_tag(std::string_view name);

/// A fully parameterized robust kernel.
///
/// `scale` is the Cauchy/Welsch/Geman-McClure scale c or the truncated
/// least-squares threshold c-bar (residuals are Mahalanobis distances, so the
/// default scale is 1). `alpha` is used by BarronAdaptive and AMB, `mode` by
/// AMB only.
struct Kernel {
  KernelTag tag = KernelTag::Quadratic;
  double scale = 1.0;
  ShapeParameter alpha{2.0};
  double mode = 0.0;

  static Kernel quadratic() { return Kernel{}; }
  static Kernel cauchy(double c = 1.0) { return {KernelTag::Cauchy, c, ShapeParameter{2.0}, 0.0}; }
  static Kernel welsch(double c = 1.0) { return {KernelTag::Welsch, c, ShapeParameter{2.0}, 0.0}; }
  static Kernel geman_mcclure(double c = 1.0) {
    return {KernelTag::GemanMcClure, c, ShapeParameter{2.0}, 0.0};
  }
  static Kernel truncated_ls(double cbar) {
    return {KernelTag::TruncatedLS, cbar, ShapeParameter{2.0}, 0.0};
  }
  static Kernel adaptive(ShapeParameter alpha) {
    return {KernelTag::BarronAdaptive, 1.0, alpha, 0.0};
  }
  static Kernel amb(double mode, ShapeParameter alpha) {
    return {KernelTag::AMB, 1.0, alpha, mode};
  }

  /// Throws ConfigError when a required parameter is missing or invalid.
  void validate() const;
};

// Adaptive loss and its IRLS weight, piecewise in alpha.
double rho_adaptive(double eps, ShapeParameter alpha);
double weight_adaptive(double eps, ShapeParameter alpha);

/// Classical M-estimator weights:
///   Cauchy  1 / (1 + (e/c)^2)
///   Welsch  exp(-(e/c)^2)
///   GM      (1 + (e/c)^2)^-2     (rho = e^2 / (2 (1 + (e/c)^2)))
///   TLS     1 if e <= c-bar else 0
double weight_classic(double eps, const Kernel& kernel);

/// AMB weight: 1 at or below the mode, the adaptive weight of the shifted
/// residual above it.
double weight_amb(double eps, double mode, ShapeParameter alpha);

/// Pointwise AMB loss, 0.5 e^2 below the mode and the integral of e * w above.
/// The part without a closed form is integrated with adaptive Gauss-Kronrod.
double rho_amb(double eps, double mode, ShapeParameter alpha);

/// Cumulative trapezoidal AMB loss over an ascending grid starting at 0.
std::vector<double> rho_amb_numeric(std::span<const double> eps_grid, double mode,
                                    ShapeParameter alpha);

// Dispatch over every kernel family.
double rho(double eps, const Kernel& kernel);
double weight(double eps, const Kernel& kernel);
/// d rho / d eps, which is eps * weight(eps) for every kernel.
double grad_rho(double eps, const Kernel& kernel);

}  // namespace agnc
