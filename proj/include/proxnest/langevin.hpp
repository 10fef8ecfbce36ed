#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "proxnest/ball_projection.hpp"
#include "proxnest/numerics.hpp"
#include "proxnest/potentials.hpp"

namespace proxnest {

struct ChainConfig {
  double delta = 0.0;        // step size
  double lambda = 0.0;       // Moreau-Yosida scale of the prior envelope
  double lambda_ball = 0.0;  // scale of the likelihood-ball envelope; 0 means "same as lambda"
  int k_burn = 100;
  int k_gap = 10;
  bool mh = true;
  int max_steps = 0;  // per constrained draw; 0 means 200 * k_gap
  ProjectorConfig projector;

  double ball_lambda() const { return lambda_ball > 0.0 ? lambda_ball : lambda; }
  int step_budget() const { return max_steps > 0 ? max_steps : 200 * k_gap; }
  /// Checks delta in (0, 1/(L_f + 1/lambda)] and the integer fields.
  void validate(double prior_lipschitz) const;
};

/// lambda = 1/L_f and delta = 0.8/(L_f + 1/lambda) for a smooth prior. For
/// priors with L_f = 0 the step is min(1/4, 1/sqrt(d)) s^2 (s the prior
/// marginal std) and lambda = 5 delta.
ChainConfig default_chain_config(const PriorModel& prior);

struct ChainState {
  Vec x;
  double f = 0.0;  // prior potential at x (+inf outside a flat prior's box)
  double g = 0.0;  // likelihood potential at x (0 when there is no likelihood)
  Vec mean;        // proposal mean m(x) = x - (delta/2) * smoothed gradient
  bool projection_ok = true;
};

struct ChainStats {
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
  std::uint64_t projections = 0;
  std::uint64_t projection_failures = 0;
  // accepted moves from inside the ball to a point that is not strictly inside;
  // must stay zero when the MH correction is on
  std::uint64_t constraint_violations = 0;

  double acceptance_rate() const {
    return proposals == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
  }
  void merge(const ChainStats& o);
};

/// Langevin kernel targeting exp(-f) (ball == nullptr) or exp(-f) restricted
/// to a likelihood ball. Proposals follow the Moreau-Yosida regularised
/// drift; the optional MH step uses the exact (unsmoothed) target.
class LangevinKernel {
 public:
  LangevinKernel(const PriorModel& prior, const GaussianLikelihood* likelihood,
                 const ChainConfig& cfg);

  /// Sets the constraint g(x) < tau; +inf disables it.
  void set_tau(double tau);
  double tau() const { return tau_; }

  ChainState make_state(std::span<const double> x);
  /// Proposal m(x) + sqrt(delta) * noise, with caller-supplied noise.
  Vec propose(const ChainState& s, std::span<const double> noise) const;
  /// log q(to | from) up to a constant.
  double log_q(std::span<const double> to, const ChainState& from) const;
  /// MH accept/reject of a proposed point; updates `current` in place.
  bool mh_correct(ChainState& current, std::span<const double> proposal, Rng& rng);
  /// One full kernel step (propose then, if enabled, correct).
  bool step(ChainState& s, Rng& rng);

  bool inside(double g) const;
  const ChainConfig& config() const { return cfg_; }
  const PriorModel& prior() const { return *prior_; }
  const ChainStats& stats() const { return stats_; }
  void reset_stats() { stats_ = {}; }
  /// JSON-lines trace of (step, g, accepted).
  void set_trace(std::ostream* out) { trace_ = out; }

 private:
  const PriorModel* prior_;
  const GaussianLikelihood* lik_;
  ChainConfig cfg_;
  double tau_;
  ChainStats stats_;
  std::ostream* trace_ = nullptr;
  std::uint64_t step_count_ = 0;
  Vec noise_;
  Vec phix_;
  ChainState cand_;
  std::optional<WarmStart> warm_;

  void fill_mean(ChainState& s);
  double eval_g(std::span<const double> x);
  bool correct_candidate(ChainState& current, Rng& rng);
};

/// One unconstrained prior step.
ChainState prior_step(LangevinKernel& kernel, const ChainState& s, Rng& rng);

struct DrawResult {
  ChainState state;
  int steps = 0;
  bool ok = false;
};

/// Runs the constrained kernel from `start` until the state is strictly
/// inside the ball and at least k_gap steps were taken, or the budget runs out.
DrawResult draw_constrained_sample(LangevinKernel& kernel, std::span<const double> start, Rng& rng);

/// Burn-in then keep every k_gap-th state of an unconstrained chain.
std::vector<Vec> draw_live_set(LangevinKernel& kernel, std::size_t n_live, Rng& rng,
                               std::span<const double> start = {});

/// Random start in the typical set of the prior. A start at the mode is
/// rejected almost surely by the MH step in high dimension.
Vec default_start(const PriorModel& prior, Rng& rng);

}  // namespace proxnest
