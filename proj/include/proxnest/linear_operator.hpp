#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "proxnest/numerics.hpp"

namespace proxnest {

/// Real-linear map from image space R^d to data space. Complex data vectors
/// are stored interleaved (re, im), so a map into C^m has out_dim() == 2m and
/// the Euclidean inner product on the interleaved array is Re<u, v>.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual std::size_t in_dim() const = 0;
  virtual std::size_t out_dim() const = 0;
  virtual void forward(std::span<const double> x, std::span<double> out) const = 0;
  virtual void adjoint(std::span<const double> y, std::span<double> out) const = 0;
  virtual std::string name() const = 0;

  virtual bool is_identity() const { return false; }
  /// Upper bound on the spectral norm.
  virtual double norm_bound() const = 0;

  /// Exact solve of (beta*A^T A + I) x = rhs when the operator has a cheap
  /// closed form; nullopt otherwise.
  virtual std::optional<Vec> solve_normal_closed_form(double beta,
                                                      std::span<const double> rhs) const {
    (void)beta;
    (void)rhs;
    return std::nullopt;
  }

  Vec forward(std::span<const double> x) const;
  Vec adjoint(std::span<const double> y) const;

 protected:
  void check_forward_dims(std::span<const double> x, std::span<double> out) const;
  void check_adjoint_dims(std::span<const double> y, std::span<double> out) const;
};

using OperatorPtr = std::shared_ptr<const LinearOperator>;

class IdentityOperator final : public LinearOperator {
 public:
  explicit IdentityOperator(std::size_t n);
  std::size_t in_dim() const override { return n_; }
  std::size_t out_dim() const override { return n_; }
  void forward(std::span<const double> x, std::span<double> out) const override;
  void adjoint(std::span<const double> y, std::span<double> out) const override;
  std::string name() const override { return "identity"; }
  bool is_identity() const override { return true; }
  double norm_bound() const override { return 1.0; }
  std::optional<Vec> solve_normal_closed_form(double beta,
                                              std::span<const double> rhs) const override;

  using LinearOperator::adjoint;
  using LinearOperator::forward;

 private:
  std::size_t n_;
};

/// Row-major dense matrix, mainly for testing the generic solver paths.
class DenseMatrixOperator final : public LinearOperator {
 public:
  DenseMatrixOperator(std::size_t rows, std::size_t cols, Vec entries);
  std::size_t in_dim() const override { return cols_; }
  std::size_t out_dim() const override { return rows_; }
  void forward(std::span<const double> x, std::span<double> out) const override;
  void adjoint(std::span<const double> y, std::span<double> out) const override;
  std::string name() const override { return "dense"; }
  double norm_bound() const override { return norm_; }

  using LinearOperator::adjoint;
  using LinearOperator::forward;

 private:
  std::size_t rows_, cols_;
  Vec a_;
  double norm_;
};

/// Power-iteration estimate of ||A||.
double estimate_operator_norm(const LinearOperator& op, int iterations, std::uint64_t seed);

/// max |<Ax, y> - <x, A^T y>| / (||Ax|| ||y|| + ||x|| ||A^T y||) over random probes.
double adjoint_mismatch(const LinearOperator& op, int probes, std::uint64_t seed);

}  // namespace proxnest
