#include "agnc/gnc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace agnc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ShapeParameter as_shape(double f) {
  if (f == -kInf) return ShapeParameter::negative_infinity();
  return ShapeParameter(f);
}

void check_mu_domain(ShapeVariant variant, double mu, ShapeParameter alpha_star) {
  if (!std::isfinite(mu)) throw DomainError(fmt::format("mu {} is not finite", mu));
  if (variant == ShapeVariant::IncreasingMu) {
    if (!(mu > 0.0)) throw DomainError(fmt::format("increasing-mu shape needs mu > 0, got {}", mu));
    return;
  }
  if (alpha_star.is_negative_infinity() ? !(mu > 1.0) : !(mu >= 1.0)) {
    throw DomainError(fmt::format("decreasing-mu shape needs mu {} 1, got {}",
                                  alpha_star.is_negative_infinity() ? ">" : ">=", mu));
  }
}

// Shape value f that closes the -inf sweep, mapped back to mu.
double floor_mu(const GncSchedule& s) {
  const double f = s.f_floor;
  if (s.variant == ShapeVariant::IncreasingMu) return 2.0 - f;
  return (3.0 - f) / (2.0 - f);
}

}  // namespace

double shape_fn(ShapeVariant variant, double mu, ShapeParameter alpha_star) {
  check_mu_domain(variant, mu, alpha_star);
  if (variant == ShapeVariant::IncreasingMu) {
    if (alpha_star.is_negative_infinity()) return 2.0 - mu;
    return std::min(2.0, (alpha_star.value() * mu + 2.0) / (mu + 1.0));
  }
  if (alpha_star.is_negative_infinity()) return std::min(2.0, (2.0 * mu - 3.0) / (mu - 1.0));
  return std::min(2.0, (alpha_star.value() + 2.0 * mu - 2.0) / mu);
}

double gnc_weight(double eps, double f) { return weight_adaptive(eps, as_shape(f)); }

double gnc_surrogate(double eps, double f) { return rho_adaptive(eps, as_shape(f)); }

double outlier_process_agnc(double w, double f) {
  if (!(w > 0.0 && w <= 1.0)) throw DomainError(fmt::format("weight {} outside (0, 1]", w));
  switch (as_shape(f).branch()) {
    case ShapeParameter::Branch::Quadratic:
      return 0.0;
    case ShapeParameter::Branch::Cauchy:
      return w - 1.0 - std::log(w);
    case ShapeParameter::Branch::Welsch:
      return 1.0 - w + w * std::log(w);
    case ShapeParameter::Branch::General:
      break;
  }
  const double b = std::abs(f - 2.0);
  const double lw = std::log(w);
  return b / f * std::expm1(f / (f - 2.0) * lw) - w * 0.5 * b * std::expm1(2.0 / (f - 2.0) * lw);
}

double weight_gnc_gm(double eps, double mu, double c) {
  if (!std::isfinite(eps) || eps < 0.0) throw DomainError("residual must be finite and >= 0");
  if (!(mu > 0.0) || !(c > 0.0)) throw DomainError("GNC-GM needs mu > 0 and c > 0");
  const double s = mu * c * c;
  const double r = s / (eps * eps + s);
  return r * r;
}

double weight_gnc_tls(double eps, double mu, double cbar) {
  if (!std::isfinite(eps) || eps < 0.0) throw DomainError("residual must be finite and >= 0");
  if (!(mu > 0.0) || !(cbar > 0.0)) throw DomainError("GNC-TLS needs mu > 0 and c-bar > 0");
  const double e2 = eps * eps;
  const double c2 = cbar * cbar;
  if (e2 <= mu / (mu + 1.0) * c2) return 1.0;
  if (e2 >= (mu + 1.0) / mu * c2) return 0.0;
  return cbar * std::sqrt(mu * (mu + 1.0)) / eps - mu;
}

void GncSchedule::validate() const {
  if (!(update_factor > 1.0)) throw ConfigError("GNC update factor must exceed 1");
  if (!(start_tolerance > 0.0) || !(f_tolerance > 0.0)) {
    throw ConfigError("GNC tolerances must be positive");
  }
  if (!(f_floor < 2.0)) throw ConfigError("GNC f floor must be below 2");
  if (max_stages < 1 || inner_iterations < 1) throw ConfigError("GNC stage counts must be >= 1");
}

double initial_mu(const GncSchedule& s, ShapeParameter alpha_star) {
  if (s.variant == ShapeVariant::IncreasingMu) {
    // 2 - f = (2 - a) mu / (mu + 1), and mu for the -inf shape.
    if (alpha_star.is_negative_infinity()) return s.start_tolerance;
    const double gap = 2.0 - alpha_star.value();
    if (gap <= s.start_tolerance) return 1.0;
    return s.start_tolerance / (gap - s.start_tolerance);
  }
  // 2 - f = (2 - a) / mu, and 1 / (mu - 1) for the -inf shape.
  if (alpha_star.is_negative_infinity()) return std::max(2.0, 1.0 + 1.0 / s.start_tolerance);
  return std::max(2.0, (2.0 - alpha_star.value()) / s.start_tolerance);
}

double next_mu(const GncSchedule& s, double mu, ShapeParameter alpha_star) {
  if (s.variant == ShapeVariant::IncreasingMu) {
    const double next = mu * s.update_factor;
    return alpha_star.is_negative_infinity() ? std::min(next, floor_mu(s)) : next;
  }
  const double end = alpha_star.is_negative_infinity() ? floor_mu(s) : 1.0;
  return std::max(end, mu / s.update_factor);
}

bool sweep_finished(const GncSchedule& s, double f, ShapeParameter alpha_star) {
  if (alpha_star.is_negative_infinity()) return f <= s.f_floor + 1e-12 * std::abs(s.f_floor);
  return std::abs(f - alpha_star.value()) <= s.f_tolerance * (1.0 + 1e-9);
}

double clamp_mu(const GncSchedule& s, double mu, ShapeParameter alpha_star) {
  if (s.variant == ShapeVariant::IncreasingMu) {
    return alpha_star.is_negative_infinity() ? std::min(mu, floor_mu(s)) : mu;
  }
  return std::max(mu, alpha_star.is_negative_infinity() ? floor_mu(s) : 1.0);
}

void GncWeightRule::validate() const {
  switch (tag) {
    case Tag::AGNC:
      return;
    case Tag::GncAmb:
      if (!(mode >= 0.0) || !std::isfinite(mode)) throw ConfigError("GNC-AMB needs a mode >= 0");
      return;
    case Tag::GncGM:
    case Tag::GncTLS:
      if (!(threshold > 0.0) || !std::isfinite(threshold)) {
        throw ConfigError("GNC-GM/TLS need a positive threshold");
      }
      return;
  }
}

void write_stage_csv_header(std::ostream& os) { os << "stage,mu,f,objective,inlier_count"; }

void write_stage_csv_row(std::ostream& os, const StageRecord& r) {
  fmt::print(os, "{},{},{},{},{}", r.stage, r.mu, r.f, r.objective, r.inlier_count);
}

namespace detail {

double rule_weight(const GncWeightRule& rule, double eps, double mu, double f) {
  switch (rule.tag) {
    case GncWeightRule::Tag::AGNC:
      return gnc_weight(eps, f);
    case GncWeightRule::Tag::GncAmb:
      return eps <= rule.mode ? 1.0 : gnc_weight(eps - rule.mode, f);
    case GncWeightRule::Tag::GncGM:
      return weight_gnc_gm(eps, mu, rule.threshold);
    case GncWeightRule::Tag::GncTLS:
      return weight_gnc_tls(eps, mu, rule.threshold);
  }
  throw ConfigError("unknown GNC rule");
}

double gm_initial_mu(const Eigen::VectorXd& eps, double c) {
  const double max_e2 = eps.size() > 0 ? eps.array().square().maxCoeff() : 0.0;
  return std::max(1.0, 2.0 * max_e2 / (c * c));
}

double tls_initial_mu(const Eigen::VectorXd& eps, double cbar) {
  const double max_e2 = eps.size() > 0 ? eps.array().square().maxCoeff() : 0.0;
  const double c2 = cbar * cbar;
  // Everything already inside the threshold: any large mu gives unit weights.
  if (max_e2 <= c2) return 1e8;
  return c2 / (2.0 * max_e2 - c2);
}

}  // namespace detail

}  // namespace agnc
