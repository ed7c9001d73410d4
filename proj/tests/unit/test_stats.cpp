#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "agnc/stats.hpp"

using namespace agnc;

namespace {

// Regularized lower incomplete gamma P(a, x) from its power series.
double lower_gamma_p(double a, double x) {
  if (x <= 0.0) return 0.0;
  long double term = 1.0L / a;
  long double sum = term;
  for (int n = 1; n < 10000; ++n) {
    term *= static_cast<long double>(x) / (a + n);
    sum += term;
    if (term < sum * 1e-20L) break;
  }
  return static_cast<double>(sum * std::exp(static_cast<long double>(a * std::log(x) - x - std::lgamma(a))));
}

double chi2_quantile_oracle(int dof, double p) {
  double lo = 0.0, hi = 1.0;
  while (lower_gamma_p(0.5 * dof, 0.5 * hi) < p) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (lower_gamma_p(0.5 * dof, 0.5 * mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double percentile_oracle(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  if (p == 0.0) return v.front();
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * v.size()));
  return v[rank - 1];
}

}  // namespace

TEST_CASE("chi-squared quantile") {
  for (int dof = 1; dof <= 8; ++dof) {
    for (double p : {0.01, 0.5, 0.9, 0.99, 0.9973}) {
      CAPTURE(dof);
      CAPTURE(p);
      CHECK(std::abs(chi2_quantile(dof, p) - chi2_quantile_oracle(dof, p)) < 1e-8);
    }
  }
  CHECK(inlier_threshold(3) == doctest::Approx(std::sqrt(chi2_quantile_oracle(3, 0.9973))).epsilon(1e-12));
  // One degree of freedom: the 3-sigma rule.
  CHECK(inlier_threshold(1) == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("nearest-rank percentile") {
  const std::vector<double> small{15, 20, 35, 40, 50};
  CHECK(percentile_nearest_rank(small, 30) == 20);
  CHECK(percentile_nearest_rank(small, 40) == 20);
  CHECK(percentile_nearest_rank(small, 50) == 35);
  CHECK(percentile_nearest_rank(small, 100) == 50);
  CHECK(percentile_nearest_rank(small, 0) == 15);
  CHECK(std::isnan(percentile_nearest_rank(std::vector<double>{}, 50)));

  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  for (int n : {1, 2, 7, 100, 1001}) {
    std::vector<double> v(n);
    for (double& x : v) x = normal(rng);
    for (double p : {0.0, 1.0, 25.0, 50.0, 75.0, 90.0, 97.5, 100.0}) {
      CHECK(percentile_nearest_rank(v, p) == percentile_oracle(v, p));
    }
  }
}
