#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "proxnest/linear_operator.hpp"
#include "proxnest/numerics.hpp"

namespace proxnest {

/// Moreau-Yosida smoothing scale.
struct SmoothingParam {
  explicit SmoothingParam(double lambda);
  double lambda;
};

/// A proximal map x -> prox(x) with its parameter already bound.
using ProxFn = std::function<Vec(std::span<const double>)>;

Vec soft_threshold(std::span<const double> v, double theta);
/// Modulus shrinkage z (|z| - theta)/|z| for complex coefficients.
std::vector<std::complex<double>> soft_threshold(std::span<const std::complex<double>> v,
                                                 double theta);

/// prox of u -> weight*||Psi^T u||_1 for an orthonormal dictionary Psi:
/// x + Psi(soft(Psi^T x) - Psi^T x). Pass weight = lambda*mu.
Vec prox_l1_synthesis(std::span<const double> x, double weight, const LinearOperator& dict);

Vec project_l2_ball(std::span<const double> z, std::span<const double> center, double radius);

/// Gradient of the Moreau envelope: (x - prox(x)) / lambda.
Vec moreau_grad(const ProxFn& prox_at, SmoothingParam lambda, std::span<const double> x);

/// Moreau decomposition: prox of the conjugate, x - prox(x).
Vec prox_conjugate(const ProxFn& prox_at, std::span<const double> x);

/// Largest ||A A^T v - v|| / ||v|| over random probes; used for the
/// orthonormal-dictionary contract. Requires a square operator.
double orthonormality_defect(const LinearOperator& op, int probes, std::uint64_t seed);

inline constexpr double kOrthonormalTol = 1e-10;

/// Throws ContractError unless the operator passes the orthonormality check.
void require_orthonormal(const LinearOperator& op);

namespace detail {
// Same as prox_l1_synthesis without the orthonormality probe; callers must
// have validated the dictionary already.
Vec prox_l1_synthesis_unchecked(std::span<const double> x, double weight,
                                const LinearOperator& dict);
}  // namespace detail

}  // namespace proxnest
