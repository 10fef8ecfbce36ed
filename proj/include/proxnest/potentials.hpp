#pragma once

#include <span>
#include <string>

#include "proxnest/linear_operator.hpp"
#include "proxnest/numerics.hpp"

namespace proxnest {

enum class PriorKind { Flat, GaussianL2, LaplaceL1 };

PriorKind parse_prior_kind(const std::string& s);
std::string prior_kind_name(PriorKind k);

/// Prior density exp(-f(x)):
///   Flat        f = indicator of the box [0, box_max]^d
///   GaussianL2  f = mu ||Psi^T x||_2^2
///   LaplaceL1   f = mu ||Psi^T x||_1
class PriorModel {
 public:
  static PriorModel flat(std::size_t dim, double box_max);
  static PriorModel gaussian(double mu, OperatorPtr dict);
  static PriorModel laplace(double mu, OperatorPtr dict);

  PriorKind kind() const { return kind_; }
  double mu() const { return mu_; }
  double box_max() const { return box_max_; }
  std::size_t dim() const { return dim_; }
  const OperatorPtr& dict() const { return dict_; }

  /// f(x); +inf outside the support of a Flat prior.
  double potential(std::span<const double> x) const;
  /// Lipschitz constant of the gradient of the smooth part (2 mu for GaussianL2, 0 otherwise).
  double lipschitz() const;
  /// prox of lambda*f at x.
  Vec prox(std::span<const double> x, double lambda) const;
  /// Writes the (smoothed) gradient of f at x into grad: exact for GaussianL2,
  /// Moreau envelope gradient with scale lambda otherwise. Returns f(x).
  double potential_and_gradient(std::span<const double> x, double lambda,
                                std::span<double> grad) const;
  /// log of the normaliser of exp(-f), i.e. log V.
  double log_normaliser() const;
  /// Marginal standard deviation of one coordinate under the prior.
  double marginal_std() const;
  std::string describe() const;

 private:
  PriorModel(PriorKind kind, double mu, OperatorPtr dict, std::size_t dim, double box_max);
  PriorKind kind_;
  double mu_;
  OperatorPtr dict_;
  std::size_t dim_;
  double box_max_;
};

/// g(x) = ||y - Phi x||^2 / (2 sigma^2); the Gaussian normalising constant is
/// deliberately left out of every reported evidence.
class GaussianLikelihood {
 public:
  GaussianLikelihood(Vec data, OperatorPtr op, double sigma);

  double potential(std::span<const double> x) const;
  /// Also returns Phi x through `phix`.
  double potential(std::span<const double> x, std::span<double> phix) const;
  /// Gradient Phi^T(Phi x - y)/sigma^2.
  Vec gradient(std::span<const double> x) const;

  const Vec& data() const { return y_; }
  const LinearOperator& op() const { return *op_; }
  const OperatorPtr& op_ptr() const { return op_; }
  double sigma() const { return sigma_; }
  std::size_t dim() const { return op_->in_dim(); }

 private:
  Vec y_;
  OperatorPtr op_;
  double sigma_;
};

inline double level_to_tau(double log_lstar) { return -log_lstar; }

/// B_tau = {x : g(x) < tau}.
class LikelihoodBall {
 public:
  LikelihoodBall(const GaussianLikelihood& lik, double tau);

  bool contains(std::span<const double> x) const { return lik_->potential(x) < tau_; }
  bool contains_value(double g) const { return g < tau_; }
  /// Radius of the data-space ball {u : ||y - u|| <= r}.
  double data_radius() const;
  double tau() const { return tau_; }
  const GaussianLikelihood& likelihood() const { return *lik_; }

 private:
  const GaussianLikelihood* lik_;
  double tau_;
};

}  // namespace proxnest
