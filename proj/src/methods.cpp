#include "agnc/methods.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "agnc/errors.hpp"
#include "agnc/stats.hpp"

namespace agnc {

namespace {

constexpr std::array kMethods = {
    std::pair{Method::LS, "LS"},         std::pair{Method::Cauchy, "Cauchy"},
    std::pair{Method::Welsch, "Welsch"}, std::pair{Method::BA, "BA"},
    std::pair{Method::CA, "CA"},         std::pair{Method::AMB, "AMB"},
    std::pair{Method::GncGM, "GNC-GM"},  std::pair{Method::GncTLS, "GNC-TLS"},
    std::pair{Method::AGNC, "AGNC"},     std::pair{Method::GncAMB, "GNC-AMB"},
};

std::string fold(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '-' || c == '_') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

ResidualSet to_set(const Eigen::VectorXd& eps, int dim) {
  return {std::vector<double>(eps.data(), eps.data() + eps.size()), dim};
}

// Weights and grid objective for the adaptive loss with alpha refit on eps.
WeightUpdate adaptive_update(const Eigen::VectorXd& eps, int dim, const AlphaSearchConfig& cfg) {
  const ResidualSet set = to_set(eps, dim);
  const ShapeParameter alpha = select_alpha(set, cfg);
  WeightUpdate u{Eigen::VectorXd(eps.size()), 0.0};
  for (Eigen::Index i = 0; i < eps.size(); ++i) {
    u.weights[i] = weight_adaptive(eps[i], alpha);
    u.loss += rho_adaptive(eps[i], alpha);
  }
  u.loss += static_cast<double>(eps.size()) *
            std::log(partition_truncated(alpha, cfg.tau, cfg.step()));
  return u;
}

WeightUpdate amb_update(const Eigen::VectorXd& eps, const MethodParams& p) {
  const ResidualSet set = to_set(eps, p.residual_dim);
  const EmpiricalDensity q = p.density_within_tau
                                 ? estimate_density_within(set, p.density_bins, p.alpha.tau)
                                 : estimate_density(set, p.density_bins);
  const MbFit mb = fit_mb(q, p.residual_dim, p.alpha.tau);
  const ModeShiftedAlpha shifted = select_alpha_modeshifted(set, mb.mode, p.alpha);
  const double tau = p.alpha.tau - mb.mode;
  const double step = p.alpha.quadrature_step > 0.0 ? p.alpha.quadrature_step : tau / 2000.0;

  WeightUpdate u{Eigen::VectorXd(eps.size()), 0.0};
  int above = 0;
  for (Eigen::Index i = 0; i < eps.size(); ++i) {
    u.weights[i] = weight_amb(eps[i], mb.mode, shifted.alpha);
    if (eps[i] > mb.mode) {
      u.loss += rho_adaptive(eps[i] - mb.mode, shifted.alpha);
      ++above;
    }
  }
  if (above > 0) {
    u.loss += above * std::log(partition_truncated_one_sided(shifted.alpha, tau, step));
  }
  return u;
}

}  // namespace

std::string_view method_name(Method m) {
  for (const auto& [method, name] : kMethods) {
    if (method == m) return name;
  }
  return "?";
}

Method parse_method(std::string_view name) {
  const std::string key = fold(name);
  for (const auto& [method, text] : kMethods) {
    if (fold(text) == key) return method;
  }
  throw ConfigError(fmt::format("unknown method '{}'", name));
}

std::vector<Method> parse_method_list(std::string_view list) {
  std::vector<Method> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = std::min(list.find(',', start), list.size());
    std::string_view item = list.substr(start, comma - start);
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.front()))) item.remove_prefix(1);
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.back()))) item.remove_suffix(1);
    if (item.empty()) throw ConfigError(fmt::format("empty entry in method list '{}'", list));
    out.push_back(parse_method(item));
    start = comma + 1;
  }
  return out;
}

bool is_gnc(Method m) {
  return m == Method::GncGM || m == Method::GncTLS || m == Method::AGNC || m == Method::GncAMB;
}

double MethodParams::resolved_gm_scale() const {
  return gm_scale > 0.0 ? gm_scale : inlier_threshold(residual_dim);
}

double MethodParams::resolved_tls_threshold() const {
  return tls_threshold > 0.0 ? tls_threshold : inlier_threshold(residual_dim);
}

AlphaSearchConfig ba_alpha_config(const MethodParams& params) {
  AlphaSearchConfig cfg;
  cfg.grid.clear();
  for (const ShapeParameter& a : params.alpha.grid) {
    if (!a.is_negative_infinity() && a.value() >= 0.0) cfg.grid.push_back(a);
  }
  if (cfg.grid.empty()) throw ConfigError("BA needs at least one alpha >= 0 in the grid");
  cfg.tau = params.ba_tau;
  return cfg;
}

WeightPolicy method_policy(Method m, const MethodParams& params) {
  switch (m) {
    case Method::LS:
      return kernel_policy(Kernel::quadratic());
    case Method::Cauchy:
      return kernel_policy(Kernel::cauchy(params.cauchy_scale));
    case Method::Welsch:
      return kernel_policy(Kernel::welsch(params.welsch_scale));
    case Method::BA: {
      const AlphaSearchConfig cfg = ba_alpha_config(params);
      const int dim = params.residual_dim;
      return [cfg, dim](const Eigen::VectorXd& eps) { return adaptive_update(eps, dim, cfg); };
    }
    case Method::CA: {
      params.alpha.validate();
      const AlphaSearchConfig cfg = params.alpha;
      const int dim = params.residual_dim;
      return [cfg, dim](const Eigen::VectorXd& eps) { return adaptive_update(eps, dim, cfg); };
    }
    case Method::AMB: {
      params.alpha.validate();
      return [params](const Eigen::VectorXd& eps) { return amb_update(eps, params); };
    }
    default:
      break;
  }
  throw ConfigError(fmt::format("{} is a GNC method and has no IRLS weight policy", method_name(m)));
}

}  // namespace agnc
