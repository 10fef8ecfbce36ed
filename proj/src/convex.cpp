#include "proxnest/convex.hpp"

#include <cmath>

#include "proxnest/error.hpp"
#include "proxnest/kernels.hpp"

namespace proxnest {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) detail::require(std::isfinite(x), what);
}

}  // namespace

SmoothingParam::SmoothingParam(double l) : lambda(l) {
  detail::require(l > 0.0 && std::isfinite(l), "smoothing parameter must be positive");
}

Vec soft_threshold(std::span<const double> v, double theta) {
  detail::require(theta >= 0.0, "soft_threshold: negative threshold");
  Vec out(v.size());
  kernels::soft_threshold(v, theta, out);
  return out;
}

std::vector<std::complex<double>> soft_threshold(std::span<const std::complex<double>> v,
                                                 double theta) {
  detail::require(theta >= 0.0, "soft_threshold: negative threshold");
  std::vector<std::complex<double>> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double m = std::abs(v[i]);
    out[i] = m > theta ? v[i] * ((m - theta) / m) : std::complex<double>(0.0, 0.0);
  }
  return out;
}

Vec prox_l1_synthesis(std::span<const double> x, double weight, const LinearOperator& dict) {
  detail::require(weight >= 0.0, "prox_l1_synthesis: negative weight");
  require_orthonormal(dict);
  detail::require(x.size() == dict.in_dim(), "prox_l1_synthesis: dimension mismatch");
  return detail::prox_l1_synthesis_unchecked(x, weight, dict);
}

Vec project_l2_ball(std::span<const double> z, std::span<const double> center, double radius) {
  detail::require(!z.empty(), "project_l2_ball: empty vector");
  detail::require(z.size() == center.size(), "project_l2_ball: dimension mismatch");
  detail::require(radius > 0.0, "project_l2_ball: radius must be positive");
  const double dist = std::sqrt(kernels::squared_distance(z, center));
  Vec out(z.begin(), z.end());
  if (dist <= radius) return out;
  const double s = radius / dist;
  kernels::axpby(s, z, 1.0 - s, center, out);
  return out;
}

Vec moreau_grad(const ProxFn& prox_at, SmoothingParam lambda, std::span<const double> x) {
  require_finite(x, "moreau_grad: non-finite input");
  Vec p = prox_at(x);
  detail::require(p.size() == x.size(), "moreau_grad: prox changed the dimension");
  const double inv = 1.0 / lambda.lambda;
  kernels::axpby(inv, x, -inv, p, p);
  return p;
}

Vec prox_conjugate(const ProxFn& prox_at, std::span<const double> x) {
  Vec p = prox_at(x);
  detail::require(p.size() == x.size(), "prox_conjugate: prox changed the dimension");
  kernels::axpby(1.0, x, -1.0, p, p);
  return p;
}

double orthonormality_defect(const LinearOperator& op, int probes, std::uint64_t seed) {
  detail::require(op.in_dim() == op.out_dim(), "orthonormality check needs a square operator");
  Rng rng(seed);
  Vec v(op.in_dim()), t(op.in_dim()), back(op.in_dim());
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    rng.fill_normal(v);
    op.adjoint(v, t);
    op.forward(t, back);
    worst = std::max(worst, std::sqrt(kernels::squared_distance(back, v) / kernels::squared_norm(v)));
  }
  return worst;
}

void require_orthonormal(const LinearOperator& op) {
  if (op.is_identity()) return;
  const bool ok =
      op.in_dim() == op.out_dim() && orthonormality_defect(op, 2, 1234) <= kOrthonormalTol;
  detail::require_contract(ok, "dictionary is not orthonormal");
}

namespace detail {

Vec prox_l1_synthesis_unchecked(std::span<const double> x, double weight,
                                const LinearOperator& dict) {
  if (weight == 0.0) return Vec(x.begin(), x.end());
  Vec coeffs = dict.adjoint(x);
  Vec shrunk(coeffs.size());
  kernels::soft_threshold(coeffs, weight, shrunk);
  kernels::axpby(1.0, shrunk, -1.0, coeffs, shrunk);
  Vec out = dict.forward(shrunk);
  kernels::axpby(1.0, x, 1.0, out, out);
  return out;
}

}  // namespace detail

}  // namespace proxnest
