#include "proxnest/nested.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <ostream>

#include "proxnest/error.hpp"
#include "proxnest/kernels.hpp"

namespace proxnest {

std::string run_status_name(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "converged";
    case RunStatus::MaxDead: return "max_dead";
    case RunStatus::Aborted: return "aborted";
  }
  return "?";
}

SampleStore::SampleStore(std::string path, std::size_t dim)
    : path_(std::move(path)), dim_(dim), out_(path_, std::ios::binary | std::ios::trunc) {
  static_assert(std::endian::native == std::endian::little, "sample store assumes little-endian");
  if (!out_) throw std::runtime_error("sample store: cannot open " + path_);
}

SampleStore::~SampleStore() {
  try {
    close();
  } catch (...) {
  }
}

void SampleStore::append(std::span<const double> x) {
  detail::require(x.size() == dim_, "sample store: dimension mismatch");
  out_.write(reinterpret_cast<const char*>(x.data()),
             static_cast<std::streamsize>(x.size() * sizeof(double)));
  ++count_;
}

void SampleStore::close() {
  if (closed_) return;
  closed_ = true;
  out_.close();
  std::ofstream side(path_ + ".json");
  side << nlohmann::json{{"dims", {dim_}}, {"count", count_}, {"dtype", "float64"},
                         {"byte_order", "little"}}
              .dump(2)
       << "\n";
}

std::vector<Vec> SampleStore::read(const std::string& path) {
  std::ifstream side(path + ".json");
  if (!side) throw std::runtime_error("sample store: missing sidecar for " + path);
  const auto j = nlohmann::json::parse(side);
  const auto dim = j.at("dims").at(0).get<std::size_t>();
  const auto count = j.at("count").get<std::size_t>();
  std::ifstream in(path, std::ios::binary);
  std::vector<Vec> out(count, Vec(dim));
  for (auto& v : out)
    if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(dim * sizeof(double))))
      throw std::runtime_error("sample store: truncated file " + path);
  return out;
}

void NestedConfig::validate() const {
  detail::require(n_live >= 2, "nested: n_live must be at least 2");
  detail::require(dlogz_tol > 0.0, "nested: dlogz_tol must be positive");
  detail::require(retries >= 0, "nested: retries must be nonnegative");
}

double log_quadrature_weight(std::uint64_t i, std::size_t n_live, WeightRule rule) {
  const double n = static_cast<double>(n_live);
  const double base = -static_cast<double>(i - 1) / n;  // log xi_{i-1}
  if (rule == WeightRule::Trapezium) return base + std::log(-std::expm1(-2.0 / n)) - std::log(2.0);
  return base + std::log(-std::expm1(-1.0 / n));
}

EntropyError entropy_error(const std::vector<DeadRecord>& records, double log_z, std::size_t n_live) {
  NeumaierSum h;
  for (const auto& r : records) {
    const double lp = r.log_like + r.log_weight - log_z;
    if (lp == kNegInf) continue;
    h.add(std::exp(lp) * (r.log_like - log_z));
  }
  EntropyError e;
  e.h = h.value();
  e.log_z_std = std::sqrt(std::max(e.h, 0.0) / static_cast<double>(n_live));
  return e;
}

std::vector<double> posterior_weights(const std::vector<DeadRecord>& records, double log_z) {
  std::vector<double> w;
  w.reserve(records.size());
  for (const auto& r : records) w.push_back(std::exp(r.log_like + r.log_weight - log_z));
  return w;
}

double sample_log_shrinkage(std::size_t n_live, Rng& rng) {
  double u = rng.uniform();
  while (u <= 0.0) u = rng.uniform();
  return std::log(u) / static_cast<double>(n_live);
}

namespace {

// Online weighted mean with weights supplied in the log domain.
class LogWeightedMean {
 public:
  explicit LogWeightedMean(std::size_t d) : mean_(d, 0.0) {}
  void add(std::span<const double> x, double log_w) {
    if (log_w == kNegInf) return;
    const double total = logaddexp(log_total_, log_w);
    const double frac = std::exp(log_w - total);
    kernels::axpby(1.0 - frac, mean_, frac, x, mean_);
    log_total_ = total;
  }
  const Vec& mean() const { return mean_; }

 private:
  Vec mean_;
  double log_total_ = kNegInf;
};

std::size_t lowest_index(const std::vector<double>& log_l) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < log_l.size(); ++k)
    if (log_l[k] < log_l[best]) best = k;
  return best;
}

}  // namespace

EvidenceResult run_nested(const PriorModel& prior, const GaussianLikelihood& likelihood,
                          const NestedConfig& cfg, const ReplacementObserver& observer) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t N = cfg.n_live;
  const double n = static_cast<double>(N);

  EvidenceResult res;
  res.n_live = N;
  res.log_normaliser = prior.log_normaliser();

  Rng rng(cfg.seed);
  LangevinKernel kernel(prior, &likelihood, cfg.chain);
  std::unique_ptr<SampleStore> store;
  if (!cfg.sample_store_path.empty())
    store = std::make_unique<SampleStore>(cfg.sample_store_path, prior.dim());
  LogWeightedMean mean(cfg.accumulate_mean ? prior.dim() : 0);

  std::vector<Vec> live = draw_live_set(kernel, N, rng);
  std::vector<double> log_l(N);
  for (std::size_t k = 0; k < N; ++k) log_l[k] = -likelihood.potential(live[k]);

  double log_z = kNegInf;
  std::uint64_t i = 0;
  std::vector<std::size_t> eligible;
  res.status = RunStatus::Converged;
  for (;;) {
    const double log_xi = prior_volume(i, N);
    const auto [lo_it, hi_it] = std::minmax_element(log_l.begin(), log_l.end());
    // flat likelihood over the live set: no point can beat the level, and the
    // live tail already integrates the remaining volume exactly
    if (*lo_it == *hi_it) break;
    if (log_z != kNegInf) {
      const double log_lmax = *hi_it;
      const double remaining = log_lmax + log_xi - log_z;
      if (std::log1p(std::exp(remaining)) < cfg.dlogz_tol) break;
    }
    if (cfg.max_dead != 0 && i >= cfg.max_dead) {
      res.status = RunStatus::MaxDead;
      break;
    }

    ++i;
    const std::size_t worst = lowest_index(log_l);
    DeadRecord rec{i, log_l[worst], prior_volume(i, N), log_quadrature_weight(i, N, cfg.weight_rule)};
    log_z = logaddexp(log_z, rec.log_like + rec.log_weight);
    res.dead.push_back(rec);
    if (cfg.accumulate_mean) mean.add(live[worst], rec.log_like + rec.log_weight);
    if (store) store->append(live[worst]);

    const double tau = level_to_tau(rec.log_like);
    kernel.set_tau(tau);
    // start from a live point strictly inside the new ball; clones of the
    // dead point sit exactly on its boundary
    eligible.clear();
    for (std::size_t k = 0; k < N; ++k)
      if (k != worst && kernel.inside(-log_l[k])) eligible.push_back(k);
    if (eligible.empty())
      for (std::size_t k = 0; k < N; ++k)
        if (k != worst) eligible.push_back(k);
    DrawResult draw;
    for (int attempt = 0; attempt <= cfg.retries && !draw.ok; ++attempt) {
      const std::size_t start = eligible[rng.below(eligible.size())];
      draw = draw_constrained_sample(kernel, live[start], rng);
    }
    if (!draw.ok) {
      res.status = RunStatus::Aborted;
      res.message = "replacement draw failed at iteration " + std::to_string(i);
      live.erase(live.begin() + static_cast<std::ptrdiff_t>(worst));
      log_l.erase(log_l.begin() + static_cast<std::ptrdiff_t>(worst));
      break;
    }
    if (observer) observer(i, tau, draw.state);
    live[worst] = std::move(draw.state.x);
    log_l[worst] = -draw.state.g;

    if (cfg.progress != nullptr && cfg.progress_every != 0 && i % cfg.progress_every == 0)
      *cfg.progress << "iter " << i << " logL " << rec.log_like << " logZ " << log_z
                    << " accept " << kernel.stats().acceptance_rate() << "\n";
  }

  // live-set tail
  const std::uint64_t n_dead = i;
  const double tail_log_w =
      cfg.tail_rule == LiveTailRule::RemainingVolume
          ? prior_volume(n_dead, N) - std::log(n)
          : log_quadrature_weight(n_dead + 1, N, cfg.weight_rule) - std::log(n);
  std::vector<std::size_t> order(live.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return log_l[a] < log_l[b]; });
  for (std::size_t k : order) {
    DeadRecord rec{n_dead + 1 + res.live_tail.size(), log_l[k], prior_volume(n_dead, N), tail_log_w};
    log_z = logaddexp(log_z, rec.log_like + rec.log_weight);
    res.live_tail.push_back(rec);
    if (cfg.accumulate_mean) mean.add(live[k], rec.log_like + rec.log_weight);
    if (store) store->append(live[k]);
  }
  if (store) store->close();

  res.log_z = log_z;
  res.log_vz = log_z + res.log_normaliser;
  std::vector<DeadRecord> all = res.dead;
  all.insert(all.end(), res.live_tail.begin(), res.live_tail.end());
  const EntropyError e = entropy_error(all, log_z, N);
  res.entropy_h = e.h;
  res.log_z_std = e.log_z_std;
  res.posterior_log_weights.reserve(all.size());
  for (const auto& r : all) res.posterior_log_weights.push_back(r.log_like + r.log_weight - log_z);
  if (cfg.accumulate_mean) res.posterior_mean = mean.mean();
  res.chain = kernel.stats();
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

nlohmann::json result_to_json(const EvidenceResult& r, bool include_trace, bool include_timing) {
  nlohmann::json j{{"status", run_status_name(r.status)},
                   {"log_z", r.log_z},
                   {"log_normaliser", r.log_normaliser},
                   {"log_vz", r.log_vz},
                   {"log_z_std", r.log_z_std},
                   {"log_z_std_convention", "sqrt(H/N_live)"},
                   {"H", r.entropy_h},
                   {"n_live", r.n_live},
                   {"n_dead", r.n_dead()},
                   {"acceptance_rate", r.chain.acceptance_rate()},
                   {"projections", r.chain.projections},
                   {"projection_failures", r.chain.projection_failures},
                   {"constraint_violations", r.chain.constraint_violations}};
  if (!r.message.empty()) j["message"] = r.message;
  if (include_trace) {
    nlohmann::json it = nlohmann::json::array(), ll = nlohmann::json::array(),
                   lx = nlohmann::json::array(), lw = nlohmann::json::array();
    for (const auto& d : r.dead) {
      it.push_back(d.iteration);
      ll.push_back(d.log_like);
      lx.push_back(d.log_xi);
      lw.push_back(d.log_weight);
    }
    j["dead"] = {{"iteration", it}, {"log_like", ll}, {"log_xi", lx}, {"log_weight", lw}};
    nlohmann::json tl = nlohmann::json::array();
    for (const auto& d : r.live_tail) tl.push_back(d.log_like);
    j["live_tail"] = {{"log_like", tl},
                      {"log_weight", r.live_tail.empty() ? 0.0 : r.live_tail.front().log_weight}};
  }
  if (include_timing) j["seconds"] = r.seconds;
  return j;
}

void write_dead_csv(const EvidenceResult& r, std::ostream& out) {
  out << "iteration,log_like,log_xi,log_weight,live\n";
  out.precision(17);
  for (const auto& d : r.dead)
    out << d.iteration << ',' << d.log_like << ',' << d.log_xi << ',' << d.log_weight << ",0\n";
  for (const auto& d : r.live_tail)
    out << d.iteration << ',' << d.log_like << ',' << d.log_xi << ',' << d.log_weight << ",1\n";
}

}  // namespace proxnest
