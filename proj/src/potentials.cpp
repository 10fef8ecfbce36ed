#include "proxnest/potentials.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "proxnest/convex.hpp"
#include "proxnest/error.hpp"
#include "proxnest/kernels.hpp"

namespace proxnest {

PriorKind parse_prior_kind(const std::string& s) {
  if (s == "flat") return PriorKind::Flat;
  if (s == "gaussian" || s == "l2") return PriorKind::GaussianL2;
  if (s == "laplace" || s == "l1") return PriorKind::LaplaceL1;
  throw DomainError("unknown prior kind: " + s);
}

std::string prior_kind_name(PriorKind k) {
  switch (k) {
    case PriorKind::Flat: return "flat";
    case PriorKind::GaussianL2: return "gaussian";
    case PriorKind::LaplaceL1: return "laplace";
  }
  return "?";
}

PriorModel::PriorModel(PriorKind kind, double mu, OperatorPtr dict, std::size_t dim, double box_max)
    : kind_(kind), mu_(mu), dict_(std::move(dict)), dim_(dim), box_max_(box_max) {}

PriorModel PriorModel::flat(std::size_t dim, double box_max) {
  detail::require(dim > 0, "flat prior: zero dimension");
  detail::require(box_max > 0.0 && std::isfinite(box_max), "flat prior: box bound must be positive");
  return PriorModel(PriorKind::Flat, 0.0, std::make_shared<IdentityOperator>(dim), dim, box_max);
}

PriorModel PriorModel::gaussian(double mu, OperatorPtr dict) {
  detail::require(mu > 0.0 && std::isfinite(mu), "gaussian prior: mu must be positive");
  detail::require(dict != nullptr, "gaussian prior: missing dictionary");
  require_orthonormal(*dict);
  const std::size_t d = dict->in_dim();
  return PriorModel(PriorKind::GaussianL2, mu, std::move(dict), d, 0.0);
}

PriorModel PriorModel::laplace(double mu, OperatorPtr dict) {
  detail::require(mu > 0.0 && std::isfinite(mu), "laplace prior: mu must be positive");
  detail::require(dict != nullptr, "laplace prior: missing dictionary");
  require_orthonormal(*dict);
  const std::size_t d = dict->in_dim();
  return PriorModel(PriorKind::LaplaceL1, mu, std::move(dict), d, 0.0);
}

double PriorModel::potential(std::span<const double> x) const {
  detail::require(x.size() == dim_, "prior potential: dimension mismatch");
  switch (kind_) {
    case PriorKind::Flat:
      for (double v : x)
        if (v < 0.0 || v > box_max_) return kInf;
      return 0.0;
    case PriorKind::GaussianL2:
      // ||Psi^T x|| = ||x|| for orthonormal Psi
      return mu_ * kernels::squared_norm(x);
    case PriorKind::LaplaceL1: {
      if (dict_->is_identity()) return mu_ * kernels::sum_abs(x);
      const Vec c = dict_->adjoint(x);
      return mu_ * kernels::sum_abs(c);
    }
  }
  return 0.0;
}

double PriorModel::lipschitz() const { return kind_ == PriorKind::GaussianL2 ? 2.0 * mu_ : 0.0; }

Vec PriorModel::prox(std::span<const double> x, double lambda) const {
  detail::require(lambda > 0.0, "prior prox: lambda must be positive");
  detail::require(x.size() == dim_, "prior prox: dimension mismatch");
  Vec out(x.size());
  switch (kind_) {
    case PriorKind::Flat:
      kernels::clamp(x, 0.0, box_max_, out);
      break;
    case PriorKind::GaussianL2:
      kernels::axpby(1.0 / (1.0 + 2.0 * lambda * mu_), x, 0.0, x, out);
      break;
    case PriorKind::LaplaceL1:
      out = detail::prox_l1_synthesis_unchecked(x, lambda * mu_, *dict_);
      break;
  }
  return out;
}

double PriorModel::potential_and_gradient(std::span<const double> x, double lambda,
                                          std::span<double> grad) const {
  detail::require(x.size() == dim_ && grad.size() == dim_, "prior gradient: dimension mismatch");
  const auto& K = kernels::active_table();
  const std::size_t n = x.size();
  switch (kind_) {
    case PriorKind::Flat: {
      K.clamp(x.data(), 0.0, box_max_, grad.data(), n);
      const double inv = 1.0 / lambda;
      bool inside = true;
      for (std::size_t i = 0; i < n; ++i) inside = inside && grad[i] == x[i];
      K.axpby(inv, x.data(), -inv, grad.data(), grad.data(), n);
      return inside ? 0.0 : kInf;
    }
    case PriorKind::GaussianL2:
      K.axpby(2.0 * mu_, x.data(), 0.0, x.data(), grad.data(), n);
      return mu_ * K.squared_norm(x.data(), n);
    case PriorKind::LaplaceL1: {
      const double inv = 1.0 / lambda;
      if (dict_->is_identity()) {
        const double f = mu_ * K.sum_abs(x.data(), n);
        K.soft_threshold(x.data(), lambda * mu_, grad.data(), n);
        K.axpby(inv, x.data(), -inv, grad.data(), grad.data(), n);
        return f;
      }
      const Vec c = dict_->adjoint(x);
      const double f = mu_ * K.sum_abs(c.data(), n);
      Vec diff(n);
      K.soft_threshold(c.data(), lambda * mu_, diff.data(), n);
      // (x - prox(x))/lambda = Psi (c - soft(c)) / lambda
      K.axpby(inv, c.data(), -inv, diff.data(), diff.data(), n);
      dict_->forward(diff, grad);
      return f;
    }
  }
  return 0.0;
}

double PriorModel::log_normaliser() const {
  const double d = static_cast<double>(dim_);
  switch (kind_) {
    case PriorKind::Flat: return d * std::log(box_max_);
    case PriorKind::GaussianL2: return 0.5 * d * std::log(std::numbers::pi / mu_);
    case PriorKind::LaplaceL1: return d * std::log(2.0 / mu_);
  }
  return 0.0;
}

double PriorModel::marginal_std() const {
  switch (kind_) {
    case PriorKind::Flat: return box_max_ / std::sqrt(12.0);
    case PriorKind::GaussianL2: return 1.0 / std::sqrt(2.0 * mu_);
    case PriorKind::LaplaceL1: return std::sqrt(2.0) / mu_;
  }
  return 1.0;
}

std::string PriorModel::describe() const {
  std::ostringstream os;
  os << prior_kind_name(kind_);
  if (kind_ == PriorKind::Flat)
    os << "[0," << box_max_ << "]";
  else
    os << "(mu=" << mu_ << ", dict=" << dict_->name() << ")";
  return os.str();
}

GaussianLikelihood::GaussianLikelihood(Vec data, OperatorPtr op, double sigma)
    : y_(std::move(data)), op_(std::move(op)), sigma_(sigma) {
  detail::require(op_ != nullptr, "likelihood: missing operator");
  detail::require(sigma > 0.0 && std::isfinite(sigma), "likelihood: sigma must be positive");
  detail::require(y_.size() == op_->out_dim(), "likelihood: data length does not match operator");
  for (double v : y_) detail::require(std::isfinite(v), "likelihood: non-finite data");
}

double GaussianLikelihood::potential(std::span<const double> x) const {
  Vec phix(op_->out_dim());
  return potential(x, phix);
}

double GaussianLikelihood::potential(std::span<const double> x, std::span<double> phix) const {
  detail::require(x.size() == op_->in_dim(), "likelihood: dimension mismatch");
  if (op_->is_identity())
    std::copy(x.begin(), x.end(), phix.begin());
  else
    op_->forward(x, phix);
  return kernels::squared_distance(y_, phix) / (2.0 * sigma_ * sigma_);
}

Vec GaussianLikelihood::gradient(std::span<const double> x) const {
  Vec r = op_->forward(x);
  kernels::axpby(1.0, r, -1.0, y_, r);
  Vec g = op_->adjoint(r);
  const double s = 1.0 / (sigma_ * sigma_);
  for (double& v : g) v *= s;
  return g;
}

LikelihoodBall::LikelihoodBall(const GaussianLikelihood& lik, double tau) : lik_(&lik), tau_(tau) {
  detail::require(!std::isnan(tau), "likelihood ball: tau is NaN");
}

double LikelihoodBall::data_radius() const {
  detail::require(tau_ > 0.0, "likelihood ball: tau must be positive for a nonempty ball");
  const double s = lik_->sigma();
  return std::sqrt(2.0 * tau_ * s * s);
}

}  // namespace proxnest
