#include "proxnest/langevin.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "proxnest/error.hpp"
#include "proxnest/kernels.hpp"

namespace proxnest {

void ChainConfig::validate(double prior_lipschitz) const {
  detail::require(delta > 0.0 && std::isfinite(delta), "chain: delta must be positive");
  detail::require(lambda > 0.0 && std::isfinite(lambda), "chain: lambda must be positive");
  detail::require(lambda_ball >= 0.0, "chain: lambda_ball must be nonnegative");
  detail::require(k_burn >= 0 && k_gap >= 1 && max_steps >= 0, "chain: bad step counts");
  const double bound = 1.0 / (prior_lipschitz + 1.0 / lambda);
  detail::require(delta <= bound * (1.0 + 1e-12), "chain: delta exceeds 1/(L_f + 1/lambda)");
}

ChainConfig default_chain_config(const PriorModel& prior) {
  ChainConfig c;
  const double lf = prior.lipschitz();
  if (lf > 0.0) {
    c.lambda = 1.0 / lf;
    c.delta = 0.8 / (lf + 1.0 / c.lambda);
  } else {
    // MH acceptance of the non-smooth target decays with d; 1/sqrt(d) keeps it near 0.5
    const double s = prior.marginal_std();
    const double d = static_cast<double>(prior.dim());
    c.delta = std::min(0.25, 1.0 / std::sqrt(d)) * s * s;
    c.lambda = 5.0 * c.delta;
  }
  return c;
}

void ChainStats::merge(const ChainStats& o) {
  proposals += o.proposals;
  accepted += o.accepted;
  projections += o.projections;
  projection_failures += o.projection_failures;
  constraint_violations += o.constraint_violations;
}

LangevinKernel::LangevinKernel(const PriorModel& prior, const GaussianLikelihood* likelihood,
                               const ChainConfig& cfg)
    : prior_(&prior), lik_(likelihood), cfg_(cfg), tau_(kInf), noise_(prior.dim()) {
  cfg_.validate(prior.lipschitz());
  if (lik_ != nullptr)
    detail::require(lik_->dim() == prior.dim(), "kernel: prior and likelihood dimensions differ");
}

void LangevinKernel::set_tau(double tau) {
  detail::require(!std::isnan(tau), "kernel: tau is NaN");
  detail::require(tau == kInf || lik_ != nullptr, "kernel: a constraint needs a likelihood");
  tau_ = tau;
}

bool LangevinKernel::inside(double g) const {
  if (tau_ == kInf) return true;
  return g < tau_ && g <= tau_ - 1e-9 * std::fabs(tau_);
}

void LangevinKernel::fill_mean(ChainState& s) {
  const std::size_t d = s.x.size();
  s.mean.resize(d);
  s.f = prior_->potential_and_gradient(s.x, cfg_.lambda, s.mean);
  kernels::axpby(1.0, s.x, -0.5 * cfg_.delta, s.mean, s.mean);
  s.projection_ok = true;
  if (tau_ == kInf || s.g <= tau_) return;
  // Moreau term of the ball indicator: -(delta / 2 lambda_b)(x - proj(x))
  const LikelihoodBall ball(*lik_, tau_);
  ProjectionResult p =
      project_to_ball(ball, s.x, cfg_.projector, warm_.has_value() ? &*warm_ : nullptr);
  ++stats_.projections;
  if (!p.converged) {
    ++stats_.projection_failures;
    s.projection_ok = false;
  }
  const double c = 0.5 * cfg_.delta / cfg_.ball_lambda();
  kernels::axpbypcz(1.0, s.mean, -c, s.x, c, p.x, s.mean);
  warm_ = WarmStart{std::move(p.x), std::move(p.dual)};
}

double LangevinKernel::eval_g(std::span<const double> x) {
  if (lik_ == nullptr) return 0.0;
  if (lik_->op().is_identity()) {
    const double s = lik_->sigma();
    return kernels::squared_distance(lik_->data(), x) / (2.0 * s * s);
  }
  phix_.resize(lik_->op().out_dim());
  return lik_->potential(x, phix_);
}

ChainState LangevinKernel::make_state(std::span<const double> x) {
  detail::require(x.size() == prior_->dim(), "kernel: state dimension mismatch");
  ChainState s;
  s.x.assign(x.begin(), x.end());
  s.g = eval_g(s.x);
  fill_mean(s);
  return s;
}

Vec LangevinKernel::propose(const ChainState& s, std::span<const double> noise) const {
  detail::require(noise.size() == s.x.size(), "kernel: noise dimension mismatch");
  Vec out(s.x.size());
  kernels::axpby(1.0, s.mean, std::sqrt(cfg_.delta), noise, out);
  return out;
}

double LangevinKernel::log_q(std::span<const double> to, const ChainState& from) const {
  return -kernels::squared_distance(to, from.mean) / (2.0 * cfg_.delta);
}

bool LangevinKernel::mh_correct(ChainState& current, std::span<const double> proposal, Rng& rng) {
  detail::require(proposal.size() == current.x.size(), "kernel: proposal dimension mismatch");
  cand_.x.assign(proposal.begin(), proposal.end());
  return correct_candidate(current, rng);
}

bool LangevinKernel::correct_candidate(ChainState& current, Rng& rng) {
  // The current point may sit on the boundary (a copy of the discarded live
  // point); the closed ball is its support, candidates must be strictly inside.
  const bool was_inside = lik_ == nullptr || current.g <= tau_;
  cand_.g = eval_g(cand_.x);
  const bool cand_inside = lik_ == nullptr || inside(cand_.g);

  bool accept = false;
  if (was_inside && !cand_inside) {
    accept = false;  // zero target density at the candidate
  } else {
    fill_mean(cand_);
    if (!std::isfinite(cand_.f)) {
      accept = false;
    } else if (!was_inside || !std::isfinite(current.f)) {
      // current point has zero target density: any move is taken
      accept = true;
    } else {
      const double log_alpha =
          (current.f - cand_.f) + log_q(current.x, cand_) - log_q(cand_.x, current);
      accept = log_alpha >= 0.0 || std::log(rng.uniform()) < log_alpha;
    }
  }
  if (accept) {
    if (was_inside && lik_ != nullptr && !inside(cand_.g)) ++stats_.constraint_violations;
    std::swap(current, cand_);
    ++stats_.accepted;
  }
  return accept;
}

bool LangevinKernel::step(ChainState& s, Rng& rng) {
  rng.fill_normal(noise_);
  cand_.x.resize(s.x.size());
  kernels::axpby(1.0, s.mean, std::sqrt(cfg_.delta), noise_, cand_.x);
  ++stats_.proposals;
  bool accepted = true;
  if (cfg_.mh) {
    accepted = correct_candidate(s, rng);
  } else {
    cand_.g = eval_g(cand_.x);
    fill_mean(cand_);
    std::swap(s, cand_);
    ++stats_.accepted;
  }
  ++step_count_;
  if (trace_ != nullptr)
    *trace_ << "{\"step\":" << step_count_ << ",\"g\":" << s.g
            << ",\"accepted\":" << (accepted ? "true" : "false") << "}\n";
  return accepted;
}

ChainState prior_step(LangevinKernel& kernel, const ChainState& s, Rng& rng) {
  detail::require(kernel.tau() == kInf, "prior_step: kernel carries a likelihood constraint");
  ChainState next = s;
  kernel.step(next, rng);
  return next;
}

DrawResult draw_constrained_sample(LangevinKernel& kernel, std::span<const double> start, Rng& rng) {
  DrawResult r;
  r.state = kernel.make_state(start);
  const int k_gap = kernel.config().k_gap;
  const int budget = std::max(kernel.config().step_budget(), k_gap);
  for (int k = 1; k <= budget; ++k) {
    kernel.step(r.state, rng);
    r.steps = k;
    if (k >= k_gap && kernel.inside(r.state.g) && std::isfinite(r.state.f)) {
      r.ok = true;
      return r;
    }
  }
  return r;
}

Vec default_start(const PriorModel& prior, Rng& rng) {
  Vec x(prior.dim());
  switch (prior.kind()) {
    case PriorKind::Flat:
      for (double& v : x) v = prior.box_max() * rng.uniform();
      return x;
    case PriorKind::GaussianL2:
      for (double& v : x) v = prior.marginal_std() * rng.normal();
      return x;
    case PriorKind::LaplaceL1: {
      // Laplace coefficients mapped through the dictionary
      for (double& v : x) {
        const double u = rng.uniform() - 0.5;
        v = -std::copysign(1.0, u) * std::log1p(-2.0 * std::fabs(u)) / prior.mu();
      }
      return prior.dict()->forward(x);
    }
  }
  return x;
}

std::vector<Vec> draw_live_set(LangevinKernel& kernel, std::size_t n_live, Rng& rng,
                               std::span<const double> start) {
  detail::require(n_live >= 2, "draw_live_set: need at least two live samples");
  detail::require(kernel.tau() == kInf, "draw_live_set: kernel carries a likelihood constraint");
  ChainState s = kernel.make_state(
      start.empty() ? default_start(kernel.prior(), rng) : Vec(start.begin(), start.end()));
  for (int k = 0; k < kernel.config().k_burn; ++k) kernel.step(s, rng);
  std::vector<Vec> out;
  out.reserve(n_live);
  while (out.size() < n_live) {
    for (int k = 0; k < kernel.config().k_gap; ++k) kernel.step(s, rng);
    out.push_back(s.x);
  }
  return out;
}

}  // namespace proxnest
