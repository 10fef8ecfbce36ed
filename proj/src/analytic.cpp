#include "proxnest/analytic.hpp"

#include <cmath>
#include <numbers>

#include "proxnest/error.hpp"

namespace proxnest {

void GaussianConjugateSpec::validate() const {
  detail::require(mu > 0.0 && std::isfinite(mu), "conjugate spec: mu must be positive");
  detail::require(sigma > 0.0 && std::isfinite(sigma), "conjugate spec: sigma must be positive");
  detail::require(!y.empty(), "conjugate spec: empty data");
}

double prior_volume_v(const GaussianConjugateSpec& spec) {
  spec.validate();
  const double d = static_cast<double>(spec.dim());
  return 0.5 * d * (std::log(2.0 * std::numbers::pi) - std::log(2.0 * spec.mu));
}

double gaussian_log_evidence(const GaussianConjugateSpec& spec) {
  spec.validate();
  const double d = static_cast<double>(spec.dim());
  const double s2 = spec.sigma * spec.sigma;
  const double a = 2.0 * spec.mu + 1.0 / s2;
  const double yy = compensated_squared_norm(spec.y);
  NeumaierSum t;
  t.add(0.5 * d * std::log(2.0 * std::numbers::pi / a));
  t.add(-yy / (2.0 * s2));
  t.add(0.5 * (1.0 / a) * (yy / (s2 * s2)));
  return t.value();
}

Vec simulate_validation_data(std::size_t d, double sigma, std::uint64_t seed) {
  detail::require(d > 0, "validation data: zero dimension");
  Rng rng(seed);
  Vec y(d);
  for (double& v : y) v = rng.uniform();
  for (double& v : y) v += sigma * rng.normal();
  return y;
}

McEstimate mc_integration(const GaussianConjugateSpec& spec, std::size_t n_samples,
                          std::uint64_t seed, double lo, double hi) {
  spec.validate();
  detail::require(n_samples >= 1, "mc_integration: need at least one sample");
  detail::require(hi > lo, "mc_integration: empty box");
  const std::size_t d = spec.dim();
  const double inv2s2 = 1.0 / (2.0 * spec.sigma * spec.sigma);
  Rng rng(seed);
  std::vector<double> log_h(n_samples);
  for (auto& lh : log_h) {
    NeumaierSum acc;
    for (std::size_t k = 0; k < d; ++k) {
      const double x = lo + (hi - lo) * rng.uniform();
      const double r = spec.y[k] - x;
      acc.add(-spec.mu * x * x - r * r * inv2s2);
    }
    lh = acc.value();
  }
  const double log_mean = log_sum_exp(log_h) - std::log(static_cast<double>(n_samples));
  // relative standard error of the mean of h = exp(log_h)
  NeumaierSum var;
  for (double lh : log_h) {
    const double r = std::exp(lh - log_mean) - 1.0;
    var.add(r * r);
  }
  McEstimate e;
  e.n_samples = n_samples;
  e.log_vz = log_mean + static_cast<double>(d) * std::log(hi - lo);
  const double nn = static_cast<double>(n_samples);
  e.std_err = n_samples > 1 ? std::sqrt(var.value() / (nn - 1.0) / nn) : 0.0;
  return e;
}

}  // namespace proxnest
