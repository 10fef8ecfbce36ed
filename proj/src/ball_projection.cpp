#include "proxnest/ball_projection.hpp"

#include <cmath>

#include "proxnest/convex.hpp"
#include "proxnest/error.hpp"
#include "proxnest/kernels.hpp"

namespace proxnest {

namespace {

double norm(std::span<const double> v) { return std::sqrt(kernels::squared_norm(v)); }

ProjectionResult unchanged(std::span<const double> x) {
  ProjectionResult r;
  r.x.assign(x.begin(), x.end());
  return r;
}

// Projection of v onto {u : ||u - y|| <= r}, in place.
void project_data_ball(std::span<double> v, std::span<const double> y, double r) {
  const double dist = std::sqrt(kernels::squared_distance(v, y));
  if (dist <= r) return;
  const double s = r / dist;
  kernels::axpby(s, v, 1.0 - s, y, v);
}

}  // namespace

void AdmmConfig::validate() const {
  detail::require(beta > 0.0 && max_iter > 0 && rel_tol > 0.0 && cg_tol > 0.0 && cg_max_iter > 0,
                  "admm config: all parameters must be positive");
}

void PdConfig::validate(double op_norm) const {
  detail::require(delta1 > 0.0 && delta2 > 0.0 && max_iter > 0 && rel_tol > 0.0,
                  "pd config: step sizes and tolerances must be positive");
  detail::require(delta3 >= 0.0 && delta3 <= 1.0, "pd config: delta3 must lie in [0, 1]");
  detail::require(delta1 * delta2 * op_norm * op_norm <= 1.0 + 1e-12,
                  "pd config: delta1*delta2*||Phi||^2 must not exceed 1");
}

ProjectionResult project_identity(const LikelihoodBall& ball, std::span<const double> x) {
  const auto& lik = ball.likelihood();
  detail::require_contract(lik.op().is_identity(), "project_identity: operator is not identity");
  if (std::isinf(ball.tau()) && ball.tau() > 0) return unchanged(x);
  ProjectionResult r;
  r.x = project_l2_ball(x, lik.data(), ball.data_radius());
  return r;
}

ProjectionResult admm_project(const LikelihoodBall& ball, std::span<const double> x_prime,
                              const AdmmConfig& cfg, const WarmStart* warm) {
  cfg.validate();
  const auto& lik = ball.likelihood();
  const auto& op = lik.op();
  detail::require(x_prime.size() == op.in_dim(), "admm_project: dimension mismatch");
  if (std::isinf(ball.tau()) && ball.tau() > 0) return unchanged(x_prime);
  const double radius = ball.data_radius();
  const auto& y = lik.data();

  const std::size_t m = op.out_dim(), d = op.in_dim();
  Vec x(x_prime.begin(), x_prime.end()), z(m, 0.0), u(m), phix(m), rhs(d), tmp(m);
  if (warm != nullptr) {
    if (warm->x.size() == d) x = warm->x;
    if (warm->dual.size() == m) z = warm->dual;
  }
  op.forward(x, phix);
  if (warm == nullptr && std::sqrt(kernels::squared_distance(phix, y)) <= radius)
    return unchanged(x_prime);

  ProjectionResult res;
  res.converged = false;
  const double scale_x = std::max(norm(x_prime), 1e-300);
  for (int it = 1; it <= cfg.max_iter; ++it) {
    // u = proj_B(Phi x - z)
    kernels::axpby(1.0, phix, -1.0, z, u);
    project_data_ball(u, y, radius);
    // (beta Phi^T Phi + I) x = x' + beta Phi^T (u + z)
    kernels::axpby(1.0, u, 1.0, z, tmp);
    op.adjoint(tmp, rhs);
    kernels::axpby(1.0, x_prime, cfg.beta, rhs, rhs);
    NormalSolveResult ns = solve_normal_system(op, cfg.beta, rhs, cfg.cg_tol, cfg.cg_max_iter);
    const double dx = std::sqrt(kernels::squared_distance(ns.x, x));
    x = std::move(ns.x);
    op.forward(x, phix);
    // z <- z + u - Phi x
    kernels::axpbypcz(1.0, z, 1.0, u, -1.0, phix, z);
    const double primal = std::sqrt(kernels::squared_distance(u, phix)) / std::max(norm(phix), 1e-300);
    res.iterations = it;
    res.residual = std::max(primal, dx / scale_x);
    if (res.residual < cfg.rel_tol) {
      res.converged = true;
      break;
    }
  }
  res.x = std::move(x);
  res.dual = std::move(z);
  return res;
}

ProjectionResult pd_project(const LikelihoodBall& ball, std::span<const double> x_prime,
                            const PdConfig& cfg, const WarmStart* warm, bool record_objective) {
  const auto& lik = ball.likelihood();
  const auto& op = lik.op();
  cfg.validate(op.norm_bound());
  detail::require(x_prime.size() == op.in_dim(), "pd_project: dimension mismatch");
  if (std::isinf(ball.tau()) && ball.tau() > 0) return unchanged(x_prime);
  const double radius = ball.data_radius();
  const auto& y = lik.data();

  const std::size_t m = op.out_dim(), d = op.in_dim();
  Vec x(x_prime.begin(), x_prime.end()), z(m, 0.0), v(m), w(m), phit(d), x_new(d), xbar(d);
  if (warm != nullptr) {
    if (warm->x.size() == d) x = warm->x;
    if (warm->dual.size() == m) z = warm->dual;
  }
  op.forward(x, v);
  if (warm == nullptr && std::sqrt(kernels::squared_distance(v, y)) <= radius)
    return unchanged(x_prime);

  ProjectionResult res;
  res.converged = false;
  xbar = x;
  const double d1 = cfg.delta1, d2 = cfg.delta2;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    // dual: z+ = v - d1 proj_B(v / d1), v = z + d1 Phi xbar (Moreau identity)
    op.forward(xbar, v);
    kernels::axpby(1.0, z, d1, v, v);
    kernels::axpby(1.0 / d1, v, 0.0, v, w);
    project_data_ball(w, y, radius);
    kernels::axpby(1.0, v, -d1, w, z);
    // primal: prox of d2 * ||. - x'||^2 / 2 at x - d2 Phi^T z
    op.adjoint(z, phit);
    const double inv = 1.0 / (1.0 + d2);
    kernels::axpbypcz(d2 * inv, x_prime, inv, x, -d2 * inv, phit, x_new);
    kernels::axpby(1.0 + cfg.delta3, x_new, -cfg.delta3, x, xbar);
    const double dx = std::sqrt(kernels::squared_distance(x_new, x));
    x.swap(x_new);
    if (record_objective) res.objective_trace.push_back(kernels::squared_distance(x, x_prime));
    res.iterations = it;
    res.residual = dx / std::max(norm(x), 1e-300);
    if (res.residual < cfg.rel_tol) {
      res.converged = true;
      break;
    }
  }
  res.x = std::move(x);
  res.dual = std::move(z);
  return res;
}

NormalSolveResult cg_normal_system(const LinearOperator& op, double beta,
                                   std::span<const double> rhs, double tol, int max_iter) {
  detail::require(beta >= 0.0, "normal solve: beta must be nonnegative");
  detail::require(rhs.size() == op.in_dim(), "normal solve: dimension mismatch");
  const std::size_t d = rhs.size();
  NormalSolveResult res;
  res.x.assign(d, 0.0);
  const double bnorm = norm(rhs);
  if (bnorm == 0.0) return res;
  Vec r(rhs.begin(), rhs.end()), p = r, ap(d), tmp(op.out_dim());
  double rr = kernels::squared_norm(r);
  res.converged = false;
  for (int it = 1; it <= max_iter; ++it) {
    op.forward(p, tmp);
    op.adjoint(tmp, ap);
    kernels::axpby(beta, ap, 1.0, p, ap);
    const double alpha = rr / kernels::dot(p, ap);
    kernels::axpby(1.0, res.x, alpha, p, res.x);
    kernels::axpby(1.0, r, -alpha, ap, r);
    const double rr_new = kernels::squared_norm(r);
    res.iterations = it;
    res.residual = std::sqrt(rr_new) / bnorm;
    if (res.residual < tol) {
      res.converged = true;
      break;
    }
    kernels::axpby(1.0, r, rr_new / rr, p, p);
    rr = rr_new;
  }
  return res;
}

NormalSolveResult solve_normal_system(const LinearOperator& op, double beta,
                                      std::span<const double> rhs, double tol, int max_iter) {
  detail::require(beta >= 0.0, "normal solve: beta must be nonnegative");
  detail::require(rhs.size() == op.in_dim(), "normal solve: dimension mismatch");
  if (beta == 0.0) return {Vec(rhs.begin(), rhs.end()), 0, 0.0, true};
  if (auto closed = op.solve_normal_closed_form(beta, rhs)) return {std::move(*closed), 0, 0.0, true};
  return cg_normal_system(op, beta, rhs, tol, max_iter);
}

ProjectionMethod parse_projection_method(const std::string& s) {
  if (s == "auto") return ProjectionMethod::Auto;
  if (s == "identity" || s == "closed-form") return ProjectionMethod::Identity;
  if (s == "admm") return ProjectionMethod::Admm;
  if (s == "pd" || s == "primal-dual") return ProjectionMethod::PrimalDual;
  throw DomainError("unknown projection method: " + s);
}

ProjectionResult project_to_ball(const LikelihoodBall& ball, std::span<const double> x,
                                 const ProjectorConfig& cfg, const WarmStart* warm) {
  ProjectionMethod m = cfg.method;
  if (m == ProjectionMethod::Auto)
    m = ball.likelihood().op().is_identity() ? ProjectionMethod::Identity
                                             : ProjectionMethod::PrimalDual;
  switch (m) {
    case ProjectionMethod::Identity: return project_identity(ball, x);
    case ProjectionMethod::Admm: return admm_project(ball, x, cfg.admm, warm);
    default: {
      // default steps assume ||Phi|| <= 1; repeated measurement positions break that
      const double nb = ball.likelihood().op().norm_bound();
      if (cfg.pd.delta1 * cfg.pd.delta2 * nb * nb <= 1.0) return pd_project(ball, x, cfg.pd, warm);
      PdConfig scaled = cfg.pd;
      scaled.delta1 /= nb;
      scaled.delta2 /= nb;
      return pd_project(ball, x, scaled, warm);
    }
  }
}

}  // namespace proxnest
