// proxnest: command-line driver for the evidence experiments.
//
// Exit codes: 0 success, 2 config or usage error, 3 run failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "proxnest/error.hpp"
#include "proxnest/experiments.hpp"

namespace {

using namespace proxnest;

constexpr int kExitConfig = 2;
constexpr int kExitRun = 3;

// Flags shared by the imaging subcommands; unset flags leave the config alone.
struct ImagingFlags {
  std::string config;
  std::optional<std::string> image, phantom, output;
  std::optional<std::size_t> size, n_live, max_dead;
  std::optional<double> snr, coverage, delta, delta_scale, dlogz;
  std::optional<int> k_gap, threads;
  std::vector<double> mu, gamma;
};

void add_imaging_flags(CLI::App* sub, ImagingFlags& f) {
  sub->add_option("--config", f.config, "JSON experiment config");
  sub->add_option("--image", f.image, "PGM test image (overrides the phantom)");
  sub->add_option("--phantom", f.phantom, "synthetic image: shapes | blobs | sources");
  sub->add_option("--size", f.size, "phantom side length");
  sub->add_option("--snr", f.snr, "SNR in dB");
  sub->add_option("--n-live", f.n_live);
  sub->add_option("--max-dead", f.max_dead, "0 for no cap");
  sub->add_option("--dlogz", f.dlogz, "stopping tolerance on the remaining evidence");
  sub->add_option("--k-gap", f.k_gap, "thinning of the constrained chain");
  sub->add_option("--delta", f.delta, "Langevin step (0: derived)");
  sub->add_option("--delta-scale", f.delta_scale);
  sub->add_option("--threads", f.threads, "models run concurrently");
  sub->add_option("--output", f.output, "directory for report, images and traces");
}

void apply(const ImagingFlags& f, ExperimentConfig& c) {
  if (f.image) c.image_path = *f.image;
  if (f.phantom) c.phantom = *f.phantom;
  if (f.size) c.height = c.width = *f.size;
  if (f.snr) c.snr_db = *f.snr;
  if (f.coverage) c.coverage = *f.coverage;
  if (f.n_live) c.sampler.n_live = *f.n_live;
  if (f.max_dead) c.sampler.max_dead = *f.max_dead;
  if (f.dlogz) c.sampler.dlogz_tol = *f.dlogz;
  if (f.k_gap) c.sampler.k_gap = *f.k_gap;
  if (f.delta) c.sampler.delta = *f.delta;
  if (f.delta_scale) c.sampler.delta_scale = *f.delta_scale;
  if (f.threads) c.threads = *f.threads;
  if (f.output) c.output_dir = *f.output;
}

void print_report(const ComparisonReport& r) {
  std::cout << experiment_kind_name(r.kind) << "  seed " << r.seed << "  sigma " << r.sigma
            << "  (error bar sqrt(H/N_live))\n";
  std::cout << std::left << std::setw(16) << "model" << std::right << std::setw(16) << "log Z"
            << std::setw(12) << "+-" << std::setw(12) << "RMSE" << std::setw(10) << "n_dead"
            << std::setw(9) << "accept" << std::setw(10) << "sec" << "  status\n";
  for (const auto& row : r.rows) {
    std::cout << std::left << std::setw(16) << row.label << std::right << std::fixed
              << std::setprecision(2) << std::setw(16) << row.log_z << std::setw(12)
              << row.log_z_std << std::setw(12);
    if (row.rmse)
      std::cout << *row.rmse;
    else
      std::cout << "-";
    std::cout << std::setw(10) << row.n_dead << std::setw(9) << std::setprecision(3)
              << row.acceptance << std::setw(10) << std::setprecision(1) << row.seconds << "  "
              << row.status;
    if (!row.message.empty()) std::cout << " (" << row.message << ")";
    std::cout << "\n";
  }
}

int run_imaging(ExperimentConfig c) {
  c.validate();
  const ComparisonReport rep = run_comparison(c);
  print_report(rep);
  return rep.all_ok() ? 0 : kExitRun;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proximal nested sampling: Bayesian evidence for log-concave imaging models"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 1;
  auto* seed_opt = app.add_option("--seed", seed, "master seed")->capture_default_str();

  // validate-gaussian
  auto* val = app.add_subcommand("validate-gaussian",
                                 "closed-form check on the conjugate Gaussian model");
  std::vector<std::size_t> dims{2, 10, 100, 1000};
  int runs = 10;
  std::size_t val_live = 200;
  double mc_samples = 1e5;
  std::string val_out;
  val->add_option("--dims", dims, "comma-separated dimensions")->delimiter(',');
  val->add_option("--runs", runs, "repeats per dimension");
  val->add_option("--n-live", val_live);
  val->add_option("--mc-samples", mc_samples, "uniform draws for the MC baseline (0: skip)");
  val->add_option("--output", val_out, "directory for validation.json / .csv");

  ImagingFlags den_f, rec_f, mis_f;
  auto* den = app.add_subcommand("denoise", "dictionary selection on y = x + n");
  add_imaging_flags(den, den_f);
  auto* rec = app.add_subcommand("reconstruct", "regularisation selection on masked Fourier data");
  add_imaging_flags(rec, rec_f);
  rec->add_option("--coverage", rec_f.coverage, "fraction of Fourier coefficients measured");
  rec->add_option("--mu", rec_f.mu, "comma-separated mu values")->delimiter(',');
  auto* mis = app.add_subcommand("misspecify", "measurement-position misspecification");
  add_imaging_flags(mis, mis_f);
  mis->add_option("--coverage", mis_f.coverage);
  mis->add_option("--gamma", mis_f.gamma, "comma-separated gamma values")->delimiter(',');

  auto* cmp = app.add_subcommand("compare", "one comparison over the models of several configs");
  std::vector<std::string> configs;
  std::string cmp_out;
  int cmp_threads = 0;
  cmp->add_option("--configs", configs, "config files sharing one data block")
      ->delimiter(',')
      ->required();
  cmp->add_option("--output", cmp_out);
  cmp->add_option("--threads", cmp_threads);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  const bool seed_given = seed_opt->count() > 0;
  try {
    if (val->parsed()) {
      ExperimentConfig c = default_experiment_config(ExperimentKind::ValidateGaussian);
      c.dims = dims;
      c.runs = runs;
      c.sampler.n_live = val_live;
      c.validate();
      const auto rows = run_gaussian_validation(dims, runs, seed, val_live,
                                                static_cast<std::size_t>(mc_samples));
      std::cout << "dim run        truth     NS log(VZ)      +-   z      MC log(VZ)      +-\n";
      int bad = 0;
      for (const auto& r : rows) {
        std::printf("%4zu %3d %12.4f %14.4f %7.4f %5.2f", r.dim, r.run, r.truth, r.estimate,
                    r.log_z_std, r.z_score);
        if (r.mc) std::printf(" %14.4f %9.4f", r.mc->log_vz, r.mc->std_err);
        std::printf("  %s\n", r.status.c_str());
        bad += r.status == "aborted";
      }
      if (!val_out.empty()) {
        std::filesystem::create_directories(val_out);
        std::ofstream(std::filesystem::path(val_out) / "validation.json")
            << validation_to_json(rows, true).dump(2) << "\n";
        std::ofstream csv(std::filesystem::path(val_out) / "validation.csv");
        write_validation_csv(rows, csv);
      }
      return bad == 0 ? 0 : kExitRun;
    }
    auto imaging = [&](ExperimentKind kind, const ImagingFlags& f) {
      ExperimentConfig c =
          f.config.empty() ? default_experiment_config(kind) : load_experiment_config(f.config);
      if (c.kind != kind)
        throw ConfigError("config is for '" + experiment_kind_name(c.kind) + "', not '" +
                          experiment_kind_name(kind) + "'");
      if (seed_given || f.config.empty()) c.seed = seed;
      apply(f, c);
      if (!f.mu.empty()) {
        const ModelSpec base = c.models.front();
        c.models.clear();
        for (double m : f.mu) {
          ModelSpec s = base;
          s.mu = m;
          s.label = "mu=" + CLI::detail::to_string(m);
          c.models.push_back(s);
        }
      }
      if (!f.gamma.empty()) {
        const ModelSpec base = c.models.front();
        c.models.clear();
        for (double g : f.gamma) {
          ModelSpec s = base;
          s.gamma = g;
          s.label = "gamma=" + CLI::detail::to_string(g);
          c.models.push_back(s);
        }
      }
      return run_imaging(c);
    };
    if (den->parsed()) return imaging(ExperimentKind::Denoise, den_f);
    if (rec->parsed()) return imaging(ExperimentKind::Reconstruct, rec_f);
    if (mis->parsed()) return imaging(ExperimentKind::Misspecify, mis_f);
    if (cmp->parsed()) {
      std::vector<ExperimentConfig> cs;
      for (const auto& p : configs) {
        cs.push_back(load_experiment_config(p));
        if (seed_given) cs.back().seed = seed;
        if (!cmp_out.empty()) cs.back().output_dir = cmp_out;
        if (cmp_threads > 0) cs.back().threads = cmp_threads;
      }
      const ComparisonReport rep = run_comparison(cs);
      print_report(rep);
      return rep.all_ok() ? 0 : kExitRun;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kExitRun;
  }
  return 0;
}
