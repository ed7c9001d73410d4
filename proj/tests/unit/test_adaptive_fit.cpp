#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include "agnc/adaptive_fit.hpp"
#include "agnc/errors.hpp"

using namespace agnc;

namespace {

std::vector<double> mb_samples(int count, double a, int n_e, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, a);
  std::vector<double> out(count);
  for (double& v : out) {
    double s = 0.0;
    for (int k = 0; k < n_e; ++k) {
      const double x = normal(rng);
      s += x * x;
    }
    v = std::sqrt(s);
  }
  return out;
}

// Histogram built straight from the analytic MB density.
EmpiricalDensity exact_mb_density(double a, int n_e, double upper, int bins) {
  EmpiricalDensity q;
  const double w = upper / bins;
  for (int i = 0; i <= bins; ++i) q.bin_edges.push_back(w * i);
  for (int i = 0; i < bins; ++i) {
    const double c = w * (i + 0.5);
    const double chi = std::pow(c, n_e - 1) * std::exp(-c * c / (2 * a * a));
    const double norm = std::pow(2.0, 1.0 - n_e / 2.0) / (std::tgamma(n_e / 2.0) * std::pow(a, n_e));
    q.masses.push_back(norm * chi);
  }
  return q;
}

// Independent grid objective: N log Z + sum rho, with Z from Gauss-Kronrod.
ShapeParameter brute_force_alpha(const std::vector<double>& e, const std::vector<ShapeParameter>& grid,
                                 double tau) {
  double best = std::numeric_limits<double>::infinity();
  ShapeParameter arg = grid.front();
  for (const ShapeParameter& a : grid) {
    const double z = 2.0 * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                               [&](double x) { return std::exp(-rho_adaptive(x, a)); }, 0.0, tau, 12,
                               1e-12);
    double obj = e.size() * std::log(z);
    for (double v : e) obj += rho_adaptive(v, a);
    if (!std::isfinite(best) || obj < best - 1e-9 * std::abs(best)) {
      best = obj;
      arg = a;
    }
  }
  return arg;
}

}  // namespace

TEST_CASE("histogram density") {
  const EmpiricalDensity point = estimate_density({{1, 1, 1, 1}, 1}, 2);
  CHECK(point.masses[0] == 0.0);
  CHECK(point.masses[1] > 0.0);

  const EmpiricalDensity two = estimate_density({{0.5, 1.5}, 1}, 2);
  CHECK(two.upper() == 1.5);
  CHECK(two.masses[0] == two.masses[1]);
  double integral = 0.0;
  for (double m : two.masses) integral += m * two.bin_width();
  CHECK(integral == doctest::Approx(1.0));

  const EmpiricalDensity mb = estimate_density({mb_samples(100000, 1.0, 3, 7), 3}, 100);
  CHECK(std::abs(mb.peak() - std::numbers::sqrt2) < 0.1);

  CHECK_THROWS_AS(estimate_density({{}, 1}, 10), DomainError);
  CHECK_THROWS_AS(estimate_density({{-1.0}, 1}, 10), DomainError);
  CHECK_THROWS_AS(estimate_density_within({{6.0, 7.0}, 1}, 10, 5.0), DomainError);
  const EmpiricalDensity inside = estimate_density_within({{1.0, 2.0, 50.0}, 1}, 10, 5.0);
  CHECK(inside.upper() == 2.0);
}

TEST_CASE("truncated partition function") {
  const double tau = 5.0;
  const double gauss = std::sqrt(2.0 * std::numbers::pi) * std::erf(tau / std::numbers::sqrt2);
  CHECK(std::abs(partition_truncated(ShapeParameter(2.0), tau, tau / 2000) - gauss) < 1e-6);
  CHECK(gauss == doctest::Approx(2.506628).epsilon(1e-6));

  // Richardson-extrapolated trapezoid oracle for the Welsch limit.
  auto trapezoid = [](int n) {
    const double h = 5.0 / n;
    double s = 0.5 * (1.0 + std::exp(-(1.0 - std::exp(-12.5))));
    for (int k = 1; k < n; ++k) {
      const double x = h * k;
      s += std::exp(-(1.0 - std::exp(-0.5 * x * x)));
    }
    return 2.0 * s * h;
  };
  const double richardson = (4.0 * trapezoid(20000) - trapezoid(10000)) / 3.0;
  CHECK(std::abs(partition_truncated(ShapeParameter::negative_infinity(), tau, tau / 2000) -
                 richardson) < 1e-6);

  for (double t : {1e-3, 1e-5}) {
    CHECK(partition_truncated(ShapeParameter(-2.0), t, t / 2000) == doctest::Approx(2 * t).epsilon(1e-6));
  }

  for (double a : {2.0, 0.0, -2.0, -32.0}) {
    double prev = 0.0;
    for (double t : {0.5, 1.0, 2.0, 5.0, 10.0}) {
      const double z = partition_truncated(ShapeParameter(a), t, t / 2000);
      CHECK(z > prev);
      prev = z;
    }
  }
  CHECK_THROWS_AS(partition_truncated(ShapeParameter(0.0), 0.0, 1e-3), DomainError);
}

TEST_CASE("alpha grid search") {
  const std::vector<ShapeParameter> grid{ShapeParameter(2.0), ShapeParameter(1.0), ShapeParameter(0.0),
                                         ShapeParameter(-2.0), ShapeParameter::negative_infinity()};
  AlphaSearchConfig cfg;
  cfg.grid = grid;
  cfg.tau = 5.0;

  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  std::vector<double> gaussian(2000);
  for (double& v : gaussian) v = std::abs(normal(rng));
  const ShapeParameter near_quadratic = select_alpha({gaussian, 1}, cfg);
  CHECK(near_quadratic.value() >= 1.0);
  CHECK(near_quadratic == brute_force_alpha(gaussian, grid, cfg.tau));

  AlphaSearchConfig single;
  single.grid = {ShapeParameter(2.0)};
  CHECK(select_alpha({{0.0}, 1}, single).value() == 2.0);

  std::vector<double> heavy;
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  for (int i = 0; i < 800; ++i) heavy.push_back(8.0 + jitter(rng));
  for (int i = 0; i < 200; ++i) heavy.push_back(0.5 + jitter(rng));
  cfg.tau = 10.0;
  const ShapeParameter tail = select_alpha({heavy, 1}, cfg);
  CHECK(tail.value() <= 0.0);
  CHECK(tail == brute_force_alpha(heavy, grid, cfg.tau));

  // Duplicating the data scales the objective but keeps the argmin.
  std::vector<double> doubled = heavy;
  doubled.insert(doubled.end(), heavy.begin(), heavy.end());
  CHECK(select_alpha({doubled, 1}, cfg) == tail);
  AlphaSearchConfig full;
  full.tau = 5.0;
  std::vector<double> mixed = gaussian;
  for (int i = 0; i < 500; ++i) mixed.push_back(3.0 + 2.0 * std::abs(normal(rng)));
  std::vector<double> tripled;
  for (int k = 0; k < 3; ++k) tripled.insert(tripled.end(), mixed.begin(), mixed.end());
  CHECK(select_alpha({tripled, 1}, full) == select_alpha({mixed, 1}, full));
}

TEST_CASE("Maxwell-Boltzmann density") {
  CHECK(mb_pdf(0.0, 1.0, 3) == 0.0);
  CHECK(mb_pdf(std::numbers::sqrt2, 1.0, 3) ==
        doctest::Approx(std::sqrt(2.0 / std::numbers::pi) * 2.0 * std::exp(-1.0)).epsilon(1e-12));
  for (int n_e : {1, 2, 3, 6}) {
    const double total = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [n_e](double e) { return mb_pdf(e, 1.0, n_e); }, 0.0, 20.0, 15, 1e-14);
    CHECK(std::abs(total - 1.0) < 1e-6);
  }
}

TEST_CASE("Maxwell-Boltzmann fit") {
  const MbFit unit = fit_mb(exact_mb_density(1.0, 3, 8.0, 400), 3, 8.0);
  CHECK(std::abs(unit.a_star - 1.0) < 0.02);
  CHECK(std::abs(unit.mode - std::numbers::sqrt2) < 0.03);
  CHECK(unit.mode == unit.a_star * std::sqrt(2.0));

  const MbFit twice = fit_mb(exact_mb_density(2.0, 3, 16.0, 400), 3, 16.0);
  CHECK(std::abs(twice.mode - 2.0 * std::numbers::sqrt2) < 0.06);

  const MbFit flat = fit_mb(exact_mb_density(1.0, 1, 6.0, 200), 1, 6.0);
  CHECK(flat.mode == 0.0);

  // Samples: the acceptance-level recovery and scale equivariance.
  const std::vector<double> samples = mb_samples(100000, 1.0, 3, 11);
  const MbFit sampled = fit_mb(estimate_density({samples, 3}, 100), 3, 5.0);
  CHECK(sampled.a_star >= 0.95);
  CHECK(sampled.a_star <= 1.05);
  CHECK(sampled.mode >= 1.34);
  CHECK(sampled.mode <= 1.49);
  for (double s : {0.5, 2.0}) {
    std::vector<double> scaled = samples;
    for (double& v : scaled) v *= s;
    const MbFit fit = fit_mb(estimate_density({scaled, 3}, 100), 3, 5.0 * s);
    CHECK(std::abs(fit.a_star / (s * sampled.a_star) - 1.0) < 0.02);
    CHECK(fit.mode == fit.a_star * std::sqrt(2.0));
  }
}

TEST_CASE("mode-shifted alpha") {
  const std::vector<double> samples = mb_samples(3000, 1.0, 3, 5);
  AlphaSearchConfig cfg;
  const ModeShiftedAlpha zero = select_alpha_modeshifted({samples, 3}, 0.0, cfg);
  CHECK(zero.alpha == select_alpha({samples, 3}, cfg));
  CHECK_FALSE(zero.degenerate);

  std::vector<double> mixed = mb_samples(3000, 1.0, 3, 9);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> far(5.0, 10.0);
  for (int i = 0; i < 2000; ++i) mixed.push_back(far(rng));
  cfg.tau = 10.0;
  CHECK(select_alpha_modeshifted({mixed, 3}, std::numbers::sqrt2, cfg).alpha.value() <= 0.0);

  const ModeShiftedAlpha below = select_alpha_modeshifted({{0.1, 0.2, 0.3}, 3}, 1.0, cfg);
  CHECK(below.degenerate);
  CHECK(below.alpha.value() == 2.0);
  CHECK(below.shifted_count == 0);
}
