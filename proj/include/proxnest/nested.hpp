#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "proxnest/langevin.hpp"

namespace proxnest {

enum class WeightRule {
  Trapezium,  // w_i = (xi_{i-1} - xi_{i+1}) / 2
  Simple,     // w_i = xi_{i-1} - xi_i
};

enum class LiveTailRule {
  RemainingVolume,  // each live point carries xi_n / N_live
  Literal,          // each live point carries w_{n+1} / N_live
};

enum class RunStatus { Converged, MaxDead, Aborted };

std::string run_status_name(RunStatus s);

struct DeadRecord {
  std::uint64_t iteration = 0;
  double log_like = 0.0;
  double log_xi = 0.0;
  double log_weight = 0.0;
};

/// Raw little-endian float64 sample file plus a JSON sidecar header.
class SampleStore {
 public:
  SampleStore(std::string path, std::size_t dim);
  ~SampleStore();
  void append(std::span<const double> x);
  void close();
  std::size_t count() const { return count_; }
  const std::string& path() const { return path_; }
  /// Reads every stored sample back.
  static std::vector<Vec> read(const std::string& path);

 private:
  std::string path_;
  std::size_t dim_;
  std::size_t count_ = 0;
  std::ofstream out_;
  bool closed_ = false;
};

struct NestedConfig {
  std::size_t n_live = 200;
  std::size_t max_dead = 5000;  // 0 means no cap
  double dlogz_tol = 0.01;
  WeightRule weight_rule = WeightRule::Trapezium;
  LiveTailRule tail_rule = LiveTailRule::RemainingVolume;
  ChainConfig chain;
  std::uint64_t seed = 1;
  int retries = 3;
  bool accumulate_mean = true;
  std::string sample_store_path;  // empty: samples are not persisted
  std::size_t progress_every = 0;  // 0: silent
  std::ostream* progress = nullptr;
  void validate() const;
};

struct EvidenceResult {
  RunStatus status = RunStatus::Converged;
  std::string message;
  double log_z = kNegInf;      // evidence w.r.t. the normalised prior
  double log_normaliser = 0.0; // log V
  double log_vz = kNegInf;     // log(V Z)
  double entropy_h = 0.0;
  double log_z_std = 0.0;      // sqrt(H / N_live)
  std::size_t n_live = 0;
  std::vector<DeadRecord> dead;
  std::vector<DeadRecord> live_tail;
  std::vector<double> posterior_log_weights;  // dead points then live tail
  Vec posterior_mean;
  ChainStats chain;
  double seconds = 0.0;

  std::size_t n_dead() const { return dead.size(); }
};

inline double prior_volume(std::uint64_t i, std::size_t n_live) {
  return -static_cast<double>(i) / static_cast<double>(n_live);
}

/// log w_i for dead point i >= 1 under deterministic volumes.
double log_quadrature_weight(std::uint64_t i, std::size_t n_live, WeightRule rule);

struct EntropyError {
  double h = 0.0;
  double log_z_std = 0.0;
};

EntropyError entropy_error(const std::vector<DeadRecord>& records, double log_z, std::size_t n_live);
std::vector<double> posterior_weights(const std::vector<DeadRecord>& records, double log_z);

/// log t for t ~ N t^(N-1) on (0,1).
double sample_log_shrinkage(std::size_t n_live, Rng& rng);

/// Hook for the replacement step: (iteration, tau, drawn state). Used by
/// the hard-constraint checks.
using ReplacementObserver = std::function<void(std::uint64_t, double, const ChainState&)>;

EvidenceResult run_nested(const PriorModel& prior, const GaussianLikelihood& likelihood,
                          const NestedConfig& cfg, const ReplacementObserver& observer = {});

nlohmann::json result_to_json(const EvidenceResult& r, bool include_trace, bool include_timing);
void write_dead_csv(const EvidenceResult& r, std::ostream& out);

}  // namespace proxnest
