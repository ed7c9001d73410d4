#include "agnc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <fmt/format.h>

#include "agnc/errors.hpp"

namespace agnc {

double chi2_quantile(int dof, double p) {
  if (dof < 1) throw DomainError(fmt::format("chi-squared needs dof >= 1, got {}", dof));
  if (!(p > 0.0 && p < 1.0)) throw DomainError(fmt::format("probability {} outside (0, 1)", p));
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof), p);
}

double inlier_threshold(int dof) { return std::sqrt(chi2_quantile(dof, 0.9973)); }

double percentile_nearest_rank(std::span<const double> values, double p) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (!(p >= 0.0 && p <= 100.0)) throw DomainError(fmt::format("percentile {} outside [0, 100]", p));
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  const auto rank = static_cast<std::size_t>(std::ceil(p * n / 100.0));
  return sorted[rank == 0 ? 0 : rank - 1];
}

}  // namespace agnc
