#pragma once

// Experiment drivers behind the command-line tool: synthetic images, data
// simulation for the denoising / reconstruction / misspecification studies,
// model comparison and the Gaussian validation sweep.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "proxnest/analytic.hpp"
#include "proxnest/fourier.hpp"
#include "proxnest/nested.hpp"
#include "proxnest/wavelet.hpp"

namespace proxnest {

/// Raised for malformed or inconsistent experiment configs (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ImageBuffer {
  std::size_t height = 0;
  std::size_t width = 0;
  Vec pixels;  // row-major
  double range_lo = 0.0;
  double range_hi = 255.0;

  ImageBuffer() = default;
  ImageBuffer(std::size_t h, std::size_t w, double fill = 0.0)
      : height(h), width(w), pixels(h * w, fill) {}

  std::size_t size() const { return pixels.size(); }
  double& at(std::size_t r, std::size_t c) { return pixels[r * width + c]; }
  double at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }
  double max_abs() const;
  /// Throws DomainError on a size mismatch or a non-finite pixel.
  void validate() const;
};

enum class Phantom { Shapes, Blobs, Sources };

Phantom parse_phantom(const std::string& s);
std::string phantom_name(Phantom p);

/// Deterministic synthetic test image with intensities in [0, 255].
/// Shapes: piecewise-constant ellipses and bars on a smooth background.
/// Blobs: sum of Gaussian bumps. Sources: compact discs and a faint ring on
/// a zero background.
ImageBuffer make_phantom(Phantom kind, std::size_t height, std::size_t width);

/// Binary (P5) or ASCII (P2) greymap; values scaled to [0, maxval] on write.
ImageBuffer read_pgm(const std::string& path);
void write_pgm(const ImageBuffer& img, const std::string& path);
/// Exact float64 little-endian dump with a JSON sidecar (path + ".json").
void write_raw(const ImageBuffer& img, const std::string& path);

double rmse(const ImageBuffer& a, const ImageBuffer& b);

/// sigma = ||x||_inf 10^(-snr/20).
double noise_sigma(const ImageBuffer& truth, double snr_db);

struct DenoiseData {
  Vec y;
  double sigma = 0.0;
};

DenoiseData simulate_denoise(const ImageBuffer& truth, double snr_db, std::uint64_t seed);

struct ReconstructData {
  SamplingMask mask;
  Vec y;  // interleaved complex, one pair per mask index
  double sigma = 0.0;
};

/// Variable-density mask, y = M F x + n. The complex noise has standard
/// deviation sigma/sqrt(2) per real component, so E|n_j|^2 = sigma^2.
ReconstructData simulate_reconstruct(const ImageBuffer& truth, double coverage, double snr_db,
                                     std::uint64_t seed);

/// Weighted mean of the stored dead + live-tail samples. Throws
/// std::runtime_error when the run kept no samples.
ImageBuffer posterior_mean_image(const EvidenceResult& result, const std::string& store_path,
                                 std::size_t height, std::size_t width);

enum class ExperimentKind { ValidateGaussian, Denoise, Reconstruct, Misspecify };

ExperimentKind parse_experiment_kind(const std::string& s);
std::string experiment_kind_name(ExperimentKind k);

/// Prior dictionary: "identity", "db2" or "db8".
struct ModelSpec {
  std::string label;
  PriorKind prior = PriorKind::LaplaceL1;
  double mu = 1.0;
  std::string dictionary = "db8";
  int levels = 4;
  double gamma = 0.0;  // measurement-position misspecification
};

struct SamplerSpec {
  std::size_t n_live = 200;
  std::size_t max_dead = 5000;
  double dlogz_tol = 0.01;
  int k_burn = 100;
  int k_gap = 10;
  double delta = 0.0;         // 0: derived from the data noise (see make_nested_config)
  double delta_scale = 1.0;   // multiplies the derived step
  double lambda = 0.0;        // 0: default for the prior
  bool mh = true;
  int retries = 3;
  std::string projection = "auto";
};

struct ExperimentConfig {
  int schema_version = 1;
  ExperimentKind kind = ExperimentKind::Denoise;
  std::uint64_t seed = 1;
  // image
  std::string phantom = "shapes";
  std::string image_path;  // PGM; overrides the phantom when set
  std::size_t height = 64;
  std::size_t width = 64;
  // data
  double snr_db = 20.0;
  double coverage = 0.3;
  std::vector<ModelSpec> models;
  SamplerSpec sampler;
  // io
  std::string output_dir;  // empty: nothing is written
  bool store_samples = true;
  int threads = 1;
  // validate-gaussian
  std::vector<std::size_t> dims{2, 10, 100, 1000};
  int runs = 10;
  double mc_samples = 1e5;

  void validate() const;
};

/// Desk-scale defaults for each experiment family.
ExperimentConfig default_experiment_config(ExperimentKind kind);

/// Missing fields take the defaults of the named experiment. Throws
/// ConfigError on unknown keys, bad types or a schema mismatch.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json experiment_config_to_json(const ExperimentConfig& c);
ExperimentConfig load_experiment_config(const std::string& path);

ImageBuffer load_truth_image(const ExperimentConfig& c);

/// Measurement data shared by every model of a comparison.
struct ExperimentData {
  ImageBuffer truth;
  Vec y;
  double sigma = 0.0;
  std::optional<SamplingMask> mask;  // Fourier experiments only
};

ExperimentData simulate_experiment_data(const ExperimentConfig& c);

struct BuiltModel {
  PriorModel prior;
  GaussianLikelihood likelihood;
};

BuiltModel build_model(const ExperimentConfig& c, const ModelSpec& m, const ExperimentData& data);

/// Step size: delta_scale * min(prior default, 2 sigma^2 / m_eff) unless set
/// explicitly, where m_eff is the number of real measurements. The second
/// term keeps the constrained chain moving once the likelihood shell is thin.
NestedConfig make_nested_config(const SamplerSpec& s, const PriorModel& prior,
                                const GaussianLikelihood& lik, std::uint64_t seed);

struct ComparisonRow {
  std::string label;
  double log_z = kNegInf;
  double log_z_std = 0.0;
  double log_vz = kNegInf;
  std::optional<double> rmse;
  double seconds = 0.0;
  std::string status;
  std::string message;
  bool ok = false;
  std::size_t n_dead = 0;
  double acceptance = 0.0;
};

struct ComparisonReport {
  ExperimentKind kind = ExperimentKind::Denoise;
  std::uint64_t seed = 0;
  double sigma = 0.0;
  std::vector<ComparisonRow> rows;  // sorted by log_z, largest first
  bool all_ok() const;
};

/// Runs every model of `c` on one simulated data set. A failed model is
/// flagged in its row and the others still run.
ComparisonReport run_comparison(const ExperimentConfig& c);
/// Merges the model lists of several configs that describe the same data.
ComparisonReport run_comparison(const std::vector<ExperimentConfig>& configs);

nlohmann::json report_to_json(const ComparisonReport& r, bool include_timing);
void write_report_csv(const ComparisonReport& r, std::ostream& out);

// Gaussian validation

/// Step and thinning used by the validation sweep. The prior default step is
/// scaled by min(1, 20/d) so that the constrained chain still accepts once
/// the likelihood shell is thin; thinning is 20 from d = 100 on.
NestedConfig validation_nested_config(std::size_t d, std::size_t n_live, std::uint64_t seed);

struct ValidationRow {
  std::size_t dim = 0;
  int run = 0;
  std::uint64_t seed = 0;
  double truth = 0.0;
  double estimate = 0.0;
  double log_z_std = 0.0;
  double z_score = 0.0;
  bool within_3sigma = false;
  std::string status;
  std::size_t n_dead = 0;
  double seconds = 0.0;
  std::optional<McEstimate> mc;
};

/// One run per (dimension, repeat). Data and sampler seeds are derived from
/// `seed`, d and the repeat index, so rows do not depend on the sweep order.
std::vector<ValidationRow> run_gaussian_validation(const std::vector<std::size_t>& dims, int runs,
                                                   std::uint64_t seed, std::size_t n_live,
                                                   std::size_t mc_samples);

nlohmann::json validation_to_json(const std::vector<ValidationRow>& rows, bool include_timing);
void write_validation_csv(const std::vector<ValidationRow>& rows, std::ostream& out);

/// Box used by the MC baseline: the data range widened by four prior/noise
/// standard deviations.
std::pair<double, double> mc_box(const Vec& y, double mu, double sigma);

/// splitmix64 of (base, stream); independent seeds for sub-runs.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace proxnest
