#include "agnc/loss.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "agnc/errors.hpp"

namespace agnc {

namespace {

void check_residual(double eps) {
  if (!std::isfinite(eps)) throw DomainError("residual is not finite");
  if (eps < 0.0) throw DomainError(fmt::format("residual {} is negative", eps));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Integral of the adaptive weight over [0, xi].
double integrate_weight(double xi, ShapeParameter alpha) {
  switch (alpha.branch()) {
    case ShapeParameter::Branch::Quadratic:
      return xi;
    case ShapeParameter::Branch::Cauchy:
      return std::numbers::sqrt2 * std::atan(xi / std::numbers::sqrt2);
    case ShapeParameter::Branch::Welsch:
      return std::sqrt(std::numbers::pi / 2.0) * std::erf(xi / std::numbers::sqrt2);
    case ShapeParameter::Branch::General:
      break;
  }
  auto w = [alpha](double s) { return weight_adaptive(s, alpha); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(w, 0.0, xi, 15, 1e-14);
}

}  // namespace

ShapeParameter::ShapeParameter(double alpha) {
  if (std::isnan(alpha)) throw DomainError("shape parameter is NaN");
  if (alpha == -std::numeric_limits<double>::infinity()) {
    neg_inf_ = true;
    alpha_ = 0.0;
    return;
  }
  if (!std::isfinite(alpha) || alpha > 2.0) {
    throw DomainError(fmt::format("shape parameter {} outside [-inf, 2]", alpha));
  }
  alpha_ = alpha;
}

ShapeParameter ShapeParameter::negative_infinity() {
  ShapeParameter p;
  p.neg_inf_ = true;
  p.alpha_ = 0.0;
  return p;
}

double ShapeParameter::value() const noexcept {
  return neg_inf_ ? -std::numeric_limits<double>::infinity() : alpha_;
}

ShapeParameter::Branch ShapeParameter::branch() const noexcept {
  if (neg_inf_) return Branch::Welsch;
  if (std::abs(alpha_) < kBranchGuard) return Branch::Cauchy;
  if (std::abs(alpha_ - 2.0) < kBranchGuard) return Branch::Quadratic;
  return Branch::General;
}

std::string ShapeParameter::to_string() const {
  return neg_inf_ ? std::string("-inf") : fmt::format("{}", alpha_);
}

ShapeParameter parse_shape_parameter(std::string_view text) {
  const std::string t = lower(text);
  if (t == "-inf" || t == "-infinity") return ShapeParameter::negative_infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size()) throw ConfigError("");
    return ShapeParameter(v);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("cannot parse shape parameter '{}'", text));
  }
}

std::string_view kernel_name(KernelTag tag) {
  switch (tag) {
    case KernelTag::Quadratic: return "quadratic";
    case KernelTag::Cauchy: return "cauchy";
    case KernelTag::Welsch: return "welsch";
    case KernelTag::GemanMcClure: return "gm";
    case KernelTag::TruncatedLS: return "tls";
    case KernelTag::BarronAdaptive: return "adaptive";
    case KernelTag::AMB: return "amb";
  }
  return "unknown";
}

KernelTag parse_kernel_tag(std::string_view name) {
  const std::string n = lower(name);
  if (n == "quadratic" || n == "ls" || n == "l2") return KernelTag::Quadratic;
  if (n == "cauchy") return KernelTag::Cauchy;
  if (n == "welsch") return KernelTag::Welsch;
  if (n == "gm" || n == "geman-mcclure" || n == "gemanmcclure") return KernelTag::GemanMcClure;
  if (n == "tls" || n == "truncated-ls" || n == "truncatedls") return KernelTag::TruncatedLS;
  if (n == "adaptive" || n == "barron") return KernelTag::BarronAdaptive;
  if (n == "amb") return KernelTag::AMB;
  throw ConfigError(fmt::format("unknown kernel '{}'", name));
}

void Kernel::validate() const {
  switch (tag) {
    case KernelTag::Quadratic:
    case KernelTag::BarronAdaptive:
      return;
    case KernelTag::Cauchy:
    case KernelTag::Welsch:
    case KernelTag::GemanMcClure:
    case KernelTag::TruncatedLS:
      if (!(std::isfinite(scale) && scale > 0.0)) {
        throw ConfigError(fmt::format("{} kernel needs a positive scale, got {}",
                                      kernel_name(tag), scale));
      }
      return;
    case KernelTag::AMB:
      if (!(std::isfinite(mode) && mode >= 0.0)) {
        throw ConfigError(fmt::format("AMB kernel needs a nonnegative mode, got {}", mode));
      }
      return;
  }
  throw ConfigError("unknown kernel tag");
}

double rho_adaptive(double eps, ShapeParameter alpha) {
  check_residual(eps);
  const double e2 = eps * eps;
  switch (alpha.branch()) {
    case ShapeParameter::Branch::Quadratic:
      return 0.5 * e2;
    case ShapeParameter::Branch::Cauchy:
      return std::log1p(0.5 * e2);
    case ShapeParameter::Branch::Welsch:
      return -std::expm1(-0.5 * e2);
    case ShapeParameter::Branch::General:
      break;
  }
  const double a = alpha.value();
  const double b = std::abs(a - 2.0);
  return b / a * std::expm1(0.5 * a * std::log1p(e2 / b));
}

double weight_adaptive(double eps, ShapeParameter alpha) {
  check_residual(eps);
  const double e2 = eps * eps;
  switch (alpha.branch()) {
    case ShapeParameter::Branch::Quadratic:
      return 1.0;
    case ShapeParameter::Branch::Cauchy:
      return 2.0 / (e2 + 2.0);
    case ShapeParameter::Branch::Welsch:
      return std::exp(-0.5 * e2);
    case ShapeParameter::Branch::General:
      break;
  }
  const double a = alpha.value();
  const double b = std::abs(a - 2.0);
  return std::exp((0.5 * a - 1.0) * std::log1p(e2 / b));
}

double weight_classic(double eps, const Kernel& kernel) {
  check_residual(eps);
  kernel.validate();
  const double u = eps / kernel.scale;
  switch (kernel.tag) {
    case KernelTag::Cauchy:
      return 1.0 / (1.0 + u * u);
    case KernelTag::Welsch:
      return std::exp(-u * u);
    case KernelTag::GemanMcClure: {
      const double d = 1.0 + u * u;
      return 1.0 / (d * d);
    }
    case KernelTag::TruncatedLS:
      return eps <= kernel.scale ? 1.0 : 0.0;
    default:
      throw ConfigError(fmt::format("'{}' is not a classical kernel", kernel_name(kernel.tag)));
  }
}

double weight_amb(double eps, double mode, ShapeParameter alpha) {
  check_residual(eps);
  if (!(mode >= 0.0) || !std::isfinite(mode)) throw DomainError("AMB mode must be >= 0");
  if (eps <= mode) return 1.0;
  return weight_adaptive(eps - mode, alpha);
}

double rho_amb(double eps, double mode, ShapeParameter alpha) {
  check_residual(eps);
  if (!(mode >= 0.0) || !std::isfinite(mode)) throw DomainError("AMB mode must be >= 0");
  if (eps <= mode) return 0.5 * eps * eps;
  // Integral of t * w(t - mode) from mode to eps, split as (s + mode) * w(s).
  const double xi = eps - mode;
  return 0.5 * mode * mode + rho_adaptive(xi, alpha) + mode * integrate_weight(xi, alpha);
}

std::vector<double> rho_amb_numeric(std::span<const double> eps_grid, double mode,
                                    ShapeParameter alpha) {
  std::vector<double> out;
  if (eps_grid.empty()) return out;
  if (eps_grid.front() != 0.0) throw DomainError("AMB loss grid must start at 0");
  out.reserve(eps_grid.size());
  out.push_back(0.0);
  double prev_e = 0.0;
  double prev_g = 0.0;
  for (std::size_t i = 1; i < eps_grid.size(); ++i) {
    const double e = eps_grid[i];
    if (!(e >= prev_e)) throw DomainError("AMB loss grid must be sorted ascending");
    const double g = e * weight_amb(e, mode, alpha);
    out.push_back(out.back() + 0.5 * (e - prev_e) * (g + prev_g));
    prev_e = e;
    prev_g = g;
  }
  return out;
}

double rho(double eps, const Kernel& kernel) {
  check_residual(eps);
  kernel.validate();
  const double c = kernel.scale;
  const double u2 = (eps / c) * (eps / c);
  switch (kernel.tag) {
    case KernelTag::Quadratic:
      return 0.5 * eps * eps;
    case KernelTag::Cauchy:
      return 0.5 * c * c * std::log1p(u2);
    case KernelTag::Welsch:
      return -0.5 * c * c * std::expm1(-u2);
    case KernelTag::GemanMcClure:
      return 0.5 * eps * eps / (1.0 + u2);
    case KernelTag::TruncatedLS:
      return 0.5 * std::min(eps * eps, c * c);
    case KernelTag::BarronAdaptive:
      return rho_adaptive(eps, kernel.alpha);
    case KernelTag::AMB:
      return rho_amb(eps, kernel.mode, kernel.alpha);
  }
  throw ConfigError("unknown kernel tag");
}

double weight(double eps, const Kernel& kernel) {
  switch (kernel.tag) {
    case KernelTag::Quadratic:
      check_residual(eps);
      return 1.0;
    case KernelTag::Cauchy:
    case KernelTag::Welsch:
    case KernelTag::GemanMcClure:
    case KernelTag::TruncatedLS:
      return weight_classic(eps, kernel);
    case KernelTag::BarronAdaptive:
      return weight_adaptive(eps, kernel.alpha);
    case KernelTag::AMB:
      kernel.validate();
      return weight_amb(eps, kernel.mode, kernel.alpha);
  }
  throw ConfigError("unknown kernel tag");
}

double grad_rho(double eps, const Kernel& kernel) { return eps * weight(eps, kernel); }

}  // namespace agnc
