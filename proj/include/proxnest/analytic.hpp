#pragma once

#include <cstdint>

#include "proxnest/numerics.hpp"

namespace proxnest {

/// Gaussian prior exp(-mu ||x||^2) with identity-operator Gaussian likelihood
/// exp(-||y - x||^2 / (2 sigma^2)).
struct GaussianConjugateSpec {
  double mu = 0.5;
  double sigma = 1.0;
  Vec y;

  std::size_t dim() const { return y.size(); }
  void validate() const;
};

/// log V, V = integral of exp(-mu ||x||^2) = (pi/mu)^(d/2).
double prior_volume_v(const GaussianConjugateSpec& spec);

/// Closed-form log(V Z) = log of the integral of exp(-f - g).
double gaussian_log_evidence(const GaussianConjugateSpec& spec);

/// y = x + w with x ~ U[0,1]^d and w ~ N(0, sigma^2 I).
Vec simulate_validation_data(std::size_t d, double sigma, std::uint64_t seed);

struct McEstimate {
  double log_vz = kNegInf;
  double std_err = 0.0;  // delta-method standard error of log_vz
  std::size_t n_samples = 0;
};

/// Plain Monte Carlo: average of exp(-f - g) over uniform draws on
/// [lo, hi]^d, times the box volume.
McEstimate mc_integration(const GaussianConjugateSpec& spec, std::size_t n_samples,
                          std::uint64_t seed, double lo, double hi);

}  // namespace proxnest
