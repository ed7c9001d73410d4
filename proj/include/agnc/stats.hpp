#pragma once

#include <span>

namespace agnc {

/// Inverse CDF of the chi-squared distribution with `dof` degrees of freedom.
double chi2_quantile(int dof, double p);

/// sqrt(chi2_quantile(dof, 0.9973)): the Mahalanobis radius beyond which a
/// residual counts as an outlier.
double inlier_threshold(int dof);

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value (1-based),
/// or the smallest value for p = 0. NaN for an empty input.
double percentile_nearest_rank(std::span<const double> values, double p);

}  // namespace agnc
