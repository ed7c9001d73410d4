#include "agnc/geometry/perturbation.hpp"

#include <cctype>
#include <numbers>
#include <string>

#include <fmt/format.h>

#include "agnc/errors.hpp"

namespace agnc {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Eigen::Vector3d draw(double sigma, double cap, std::mt19937_64& rng) {
  if (sigma == 0.0) return Eigen::Vector3d::Zero();
  std::normal_distribution<double> normal(0.0, sigma);
  Eigen::Vector3d v;
  do {
    v = {normal(rng), normal(rng), normal(rng)};
  } while (!(v.norm() < cap));
  return v;
}

}  // namespace

std::string_view difficulty_name(Difficulty d) {
  switch (d) {
    case Difficulty::Easy:
      return "easy";
    case Difficulty::Medium:
      return "medium";
    case Difficulty::Hard:
      return "hard";
  }
  return "?";
}

Difficulty parse_difficulty(std::string_view name) {
  std::string key;
  for (char c : name) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (key == "easy") return Difficulty::Easy;
  if (key == "medium") return Difficulty::Medium;
  if (key == "hard") return Difficulty::Hard;
  throw ConfigError(fmt::format("unknown difficulty '{}'", name));
}

PerturbationLimits preset(Difficulty d) {
  double phi_max = 0.0;
  double rho_max = 0.0;
  switch (d) {
    case Difficulty::Easy:
      phi_max = 10.0 * kDeg;
      rho_max = 0.1;
      break;
    case Difficulty::Medium:
      phi_max = 20.0 * kDeg;
      rho_max = 0.5;
      break;
    case Difficulty::Hard:
      phi_max = 45.0 * kDeg;
      rho_max = 1.0;
      break;
  }
  return {0.5 * phi_max, 0.5 * rho_max, phi_max, rho_max};
}

Twist sample_perturbation(const PerturbationLimits& limits, std::mt19937_64& rng) {
  if (limits.sigma_phi < 0.0 || limits.sigma_rho < 0.0) {
    throw DomainError("perturbation deviations must be >= 0");
  }
  if (!(limits.phi_max > 0.0) || !(limits.rho_max > 0.0)) {
    throw DomainError("perturbation caps must be positive");
  }
  // The two parts are independent, so rejecting each separately draws from
  // the same joint distribution as rejecting the pair.
  Twist t;
  t.phi = draw(limits.sigma_phi, limits.phi_max, rng);
  t.rho = draw(limits.sigma_rho, limits.rho_max, rng);
  return t;
}

}  // namespace agnc
