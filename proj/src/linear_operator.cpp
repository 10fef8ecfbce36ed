#include "proxnest/linear_operator.hpp"

#include <algorithm>
#include <cmath>

#include "proxnest/error.hpp"
#include "proxnest/kernels.hpp"

namespace proxnest {

Vec LinearOperator::forward(std::span<const double> x) const {
  Vec out(out_dim());
  forward(x, out);
  return out;
}

Vec LinearOperator::adjoint(std::span<const double> y) const {
  Vec out(in_dim());
  adjoint(y, out);
  return out;
}

void LinearOperator::check_forward_dims(std::span<const double> x, std::span<double> out) const {
  detail::require(x.size() == in_dim() && out.size() == out_dim(),
                  "linear operator: forward dimension mismatch");
}

void LinearOperator::check_adjoint_dims(std::span<const double> y, std::span<double> out) const {
  detail::require(y.size() == out_dim() && out.size() == in_dim(),
                  "linear operator: adjoint dimension mismatch");
}

IdentityOperator::IdentityOperator(std::size_t n) : n_(n) {
  detail::require(n > 0, "identity operator: zero dimension");
}

void IdentityOperator::forward(std::span<const double> x, std::span<double> out) const {
  check_forward_dims(x, out);
  std::copy(x.begin(), x.end(), out.begin());
}

void IdentityOperator::adjoint(std::span<const double> y, std::span<double> out) const {
  check_adjoint_dims(y, out);
  std::copy(y.begin(), y.end(), out.begin());
}

std::optional<Vec> IdentityOperator::solve_normal_closed_form(double beta,
                                                              std::span<const double> rhs) const {
  Vec x(rhs.begin(), rhs.end());
  const double s = 1.0 / (1.0 + beta);
  for (double& v : x) v *= s;
  return x;
}

DenseMatrixOperator::DenseMatrixOperator(std::size_t rows, std::size_t cols, Vec entries)
    : rows_(rows), cols_(cols), a_(std::move(entries)) {
  detail::require(rows > 0 && cols > 0, "dense operator: zero dimension");
  detail::require(a_.size() == rows * cols, "dense operator: entry count");
  norm_ = estimate_operator_norm(*this, 200, 7) * 1.01;
}

void DenseMatrixOperator::forward(std::span<const double> x, std::span<double> out) const {
  check_forward_dims(x, out);
  for (std::size_t r = 0; r < rows_; ++r)
    out[r] = kernels::dot(std::span<const double>(a_.data() + r * cols_, cols_), x);
}

void DenseMatrixOperator::adjoint(std::span<const double> y, std::span<double> out) const {
  check_adjoint_dims(y, out);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    const double yr = y[r];
    const double* row = a_.data() + r * cols_;
    for (std::size_t c = 0; c < cols_; ++c) out[c] += row[c] * yr;
  }
}

double estimate_operator_norm(const LinearOperator& op, int iterations, std::uint64_t seed) {
  Rng rng(seed);
  Vec x(op.in_dim());
  rng.fill_normal(x);
  Vec ax(op.out_dim());
  double est = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double nx = std::sqrt(kernels::squared_norm(x));
    if (nx == 0.0) return 0.0;
    for (double& v : x) v /= nx;
    op.forward(x, ax);
    op.adjoint(ax, x);
    est = std::sqrt(std::sqrt(kernels::squared_norm(x)));
  }
  return est;
}

double adjoint_mismatch(const LinearOperator& op, int probes, std::uint64_t seed) {
  Rng rng(seed);
  Vec x(op.in_dim()), y(op.out_dim()), ax(op.out_dim()), aty(op.in_dim());
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    rng.fill_normal(x);
    rng.fill_normal(y);
    op.forward(x, ax);
    op.adjoint(y, aty);
    const double lhs = kernels::dot(ax, y);
    const double rhs = kernels::dot(x, aty);
    const double scale = std::sqrt(kernels::squared_norm(ax) * kernels::squared_norm(y)) +
                         std::sqrt(kernels::squared_norm(x) * kernels::squared_norm(aty));
    if (scale > 0.0) worst = std::max(worst, std::fabs(lhs - rhs) / scale);
  }
  return worst;
}

}  // namespace proxnest
