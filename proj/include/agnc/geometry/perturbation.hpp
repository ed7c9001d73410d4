#pragma once

#include <random>
#include <string_view>

#include "agnc/geometry/lie.hpp"

namespace agnc {

/// Per-axis Gaussian standard deviations and strict norm caps (rad, m).
struct PerturbationLimits {
  double sigma_phi = 0.0;
  double sigma_rho = 0.0;
  double phi_max = 0.0;
  double rho_max = 0.0;
};

enum class Difficulty { Easy, Medium, Hard };

std::string_view difficulty_name(Difficulty d);
/// "easy", "medium" or "hard"; throws ConfigError otherwise.
Difficulty parse_difficulty(std::string_view name);

/// Caps 10 deg / 0.1 m, 20 deg / 0.5 m and 45 deg / 1 m, with each standard
/// deviation set to half its cap.
PerturbationLimits preset(Difficulty d);

/// Isotropic Gaussian twist, redrawn until ||phi|| < phi_max and
/// ||rho|| < rho_max. Zero deviations give the zero twist.
Twist sample_perturbation(const PerturbationLimits& limits, std::mt19937_64& rng);

}  // namespace agnc
