#include <doctest.h>

#include <cmath>
#include <numbers>

#include "../oracles.hpp"
#include "proxnest/analytic.hpp"
#include "proxnest/error.hpp"

using namespace proxnest;

TEST_CASE("prior volume: closed-form cases and quadrature") {
  CHECK(std::fabs(prior_volume_v({std::numbers::pi, 1.0, Vec{0.0}})) <= 1e-15);
  CHECK(prior_volume_v({0.5, 1.0, Vec{0.0, 0.0}}) ==
        doctest::Approx(std::log(2 * std::numbers::pi)).epsilon(1e-15));
  const double q = oracle::log_integrate([](double x) { return -0.5 * x * x; }, -kInf, kInf, 0.0);
  CHECK(std::fabs(prior_volume_v({0.5, 1.0, Vec{0.0}}) - q) <= 1e-8);
}

TEST_CASE("gaussian evidence: closed-form cases and quadrature") {
  CHECK(gaussian_log_evidence({0.5, 1.0, Vec{0.0, 0.0}}) ==
        doctest::Approx(std::log(std::numbers::pi)).epsilon(1e-15));
  const double q = oracle::log_integrate(
      [](double x) { return -0.5 * x * x - 0.5 * (1 - x) * (1 - x); }, -kInf, kInf, 0.0);
  CHECK(std::fabs(gaussian_log_evidence({0.5, 1.0, Vec{1.0}}) - q) <= 1e-8);

  // separable: the d-dimensional value is the sum of 1-D quadratures
  const Vec y{0.3, -1.2, 2.5};
  double sum = 0;
  for (double yi : y)
    sum += oracle::log_integrate(
        [&](double x) { return -0.8 * x * x - (yi - x) * (yi - x) / (2 * 0.36); }, -kInf, kInf, 0.0);
  CHECK(std::fabs(gaussian_log_evidence({0.8, 0.6, y}) - sum) <= 1e-8);
}

TEST_CASE("evidence conventions and monotonicity") {
  const GaussianConjugateSpec s{0.5, 1.0, simulate_validation_data(50, 1.0, 3)};
  // log(VZ) - log V is the evidence under the normalised prior, which is <= 0
  // because exp(-g) <= 1
  CHECK(gaussian_log_evidence(s) - prior_volume_v(s) <= 0.0);
  double prev = kInf;
  for (double mu : {0.1, 0.3, 1.0, 3.0, 10.0}) {
    const double v = gaussian_log_evidence({mu, 1.0, Vec(20, 0.0)});
    CHECK(v < prev);
    prev = v;
  }
  CHECK_THROWS_AS(gaussian_log_evidence({0.0, 1.0, Vec{1.0}}), DomainError);
  CHECK_THROWS_AS(gaussian_log_evidence({0.5, 1.0, Vec{}}), DomainError);
}

TEST_CASE("validation data: reproducible and centred on the unit box") {
  const Vec a = simulate_validation_data(20000, 1.0, 5);
  CHECK(a == simulate_validation_data(20000, 1.0, 5));
  const auto [m, se] = oracle::mean_se(a);
  CHECK(std::fabs(m - 0.5) <= 4 * se);
}

TEST_CASE("Monte Carlo baseline") {
  SUBCASE("d = 1 agrees with quadrature") {
    const GaussianConjugateSpec s{0.5, 1.0, Vec{0.4}};
    const McEstimate e = mc_integration(s, 100000, 7, -6.0, 6.0);
    const double q = oracle::log_integrate(
        [](double x) { return -0.5 * x * x - 0.5 * (0.4 - x) * (0.4 - x); }, -6.0, 6.0, 0.0);
    CHECK(std::fabs(e.log_vz - q) <= 3 * e.std_err);
    CHECK(e.n_samples == 100000u);
  }
  SUBCASE("one sample is the integrand value times the box volume") {
    const GaussianConjugateSpec s{0.5, 1.0, Vec{0.4}};
    const double lo = 0.25, hi = 0.25 + 1e-9;
    const McEstimate e = mc_integration(s, 1, 9, lo, hi);
    const double expect = -0.5 * lo * lo - 0.5 * (0.4 - lo) * (0.4 - lo) + std::log(hi - lo);
    CHECK(std::fabs(e.log_vz - expect) <= 1e-8);
    CHECK(e.std_err == 0.0);
  }
  SUBCASE("errors") {
    const GaussianConjugateSpec s{0.5, 1.0, Vec{0.4}};
    CHECK_THROWS_AS(mc_integration(s, 0, 1, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(mc_integration(s, 10, 1, 1.0, 1.0), DomainError);
  }
}
