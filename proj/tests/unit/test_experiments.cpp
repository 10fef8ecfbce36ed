#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "../oracles.hpp"
#include "proxnest/error.hpp"
#include "proxnest/experiments.hpp"

using namespace proxnest;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("proxnest_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentConfig tiny_denoise() {
  ExperimentConfig c = default_experiment_config(ExperimentKind::Denoise);
  c.height = c.width = 16;
  c.phantom = "blobs";
  c.sampler.n_live = 8;
  c.sampler.max_dead = 400;
  c.sampler.k_burn = 10;
  c.sampler.k_gap = 2;
  for (auto& m : c.models) m.levels = 2;
  return c;
}

}  // namespace

TEST_CASE("phantoms: deterministic and within [0, 255]") {
  for (auto kind : {Phantom::Shapes, Phantom::Blobs, Phantom::Sources}) {
    const ImageBuffer a = make_phantom(kind, 24, 40);
    CHECK(a.height == 24u);
    CHECK(a.width == 40u);
    CHECK(a.pixels == make_phantom(kind, 24, 40).pixels);
    CHECK(*std::min_element(a.pixels.begin(), a.pixels.end()) >= 0.0);
    CHECK(*std::max_element(a.pixels.begin(), a.pixels.end()) <= 255.0);
    CHECK(a.max_abs() > 0.0);
    CHECK(parse_phantom(phantom_name(kind)) == kind);
  }
  CHECK_THROWS(parse_phantom("lena"));
}

TEST_CASE("image io round trips") {
  const fs::path dir = scratch_dir("io");
  ImageBuffer img = make_phantom(Phantom::Shapes, 12, 10);
  write_pgm(img, (dir / "a.pgm").string());
  const ImageBuffer back = read_pgm((dir / "a.pgm").string());
  CHECK(back.height == 12u);
  CHECK(back.width == 10u);
  // quantisation to 8 bits
  CHECK(oracle::max_abs_diff(back.pixels, img.pixels) <= 0.5 + 1e-12);

  {
    std::ofstream p2(dir / "b.pgm");
    p2 << "P2\n# comment\n3 2\n7\n0 1 2\n3 4 7\n";
  }
  const ImageBuffer ascii = read_pgm((dir / "b.pgm").string());
  CHECK(ascii.pixels == Vec{0, 1, 2, 3, 4, 7});
  CHECK(ascii.range_hi == 7.0);
  {
    std::ofstream bad(dir / "c.pgm");
    bad << "P5\n4 4\n255\nxx";
  }
  CHECK_THROWS(read_pgm((dir / "c.pgm").string()));
  CHECK_THROWS(read_pgm((dir / "missing.pgm").string()));

  write_raw(img, (dir / "a.f64").string());
  std::ifstream raw(dir / "a.f64", std::ios::binary);
  Vec data(img.size());
  raw.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * 8));
  CHECK(data == img.pixels);
  std::ifstream side(dir / "a.f64.json");
  const json j = json::parse(side);
  CHECK(j["dims"] == json::array({12, 10}));
  CHECK(j["dtype"] == "float64");
  fs::remove_all(dir);
}

TEST_CASE("rmse and noise level") {
  ImageBuffer a(2, 2, 1.0), b(2, 2, 1.0);
  CHECK(rmse(a, b) == 0.0);
  b.pixels = {1.0, 1.0, 1.0, 5.0};
  CHECK(rmse(a, b) == doctest::Approx(2.0));
  CHECK_THROWS_AS(rmse(a, ImageBuffer(1, 4)), DomainError);
  ImageBuffer t(1, 3);
  t.pixels = {-4.0, 2.0, 1.0};
  CHECK(noise_sigma(t, 20.0) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(noise_sigma(t, kInf) == 0.0);
}

TEST_CASE("simulated denoising noise has the requested level") {
  const ImageBuffer truth = make_phantom(Phantom::Blobs, 64, 64);
  const DenoiseData d = simulate_denoise(truth, 10.0, 3);
  Vec resid(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) resid[i] = d.y[i] - truth.pixels[i];
  const double var = oracle::dot(resid, resid) / static_cast<double>(resid.size());
  // var of the sample variance is 2 sigma^4 / n
  const double s2 = d.sigma * d.sigma;
  CHECK(std::fabs(var - s2) <= 4 * s2 * std::sqrt(2.0 / static_cast<double>(resid.size())));
  CHECK(simulate_denoise(truth, kInf, 3).y == truth.pixels);
}

TEST_CASE("simulated Fourier data: noise per real component is sigma / sqrt 2") {
  const ImageBuffer truth = make_phantom(Phantom::Sources, 64, 64);
  const ReconstructData d = simulate_reconstruct(truth, 0.3, 10.0, 4);
  FourierOperator phi(d.mask);
  const Vec clean = phi.forward(truth.pixels);
  CHECK(d.y.size() == clean.size());
  Vec resid(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) resid[i] = d.y[i] - clean[i];
  const double var = oracle::dot(resid, resid) / static_cast<double>(resid.size());
  const double s2 = d.sigma * d.sigma / 2;
  CHECK(std::fabs(var - s2) <= 4 * s2 * std::sqrt(2.0 / static_cast<double>(resid.size())));
  CHECK_THROWS_AS(simulate_reconstruct(truth, 0.0, 10.0, 4), DomainError);
}

TEST_CASE("config: JSON round trip, defaults and errors") {
  for (auto kind : {ExperimentKind::ValidateGaussian, ExperimentKind::Denoise, ExperimentKind::Reconstruct,
                    ExperimentKind::Misspecify}) {
    const ExperimentConfig c = default_experiment_config(kind);
    const json j = experiment_config_to_json(c);
    CHECK(experiment_config_to_json(experiment_config_from_json(j)) == j);
    CHECK(parse_experiment_kind(experiment_kind_name(kind)) == kind);
  }
  const json minimal = {{"schema_version", 1}, {"experiment", "misspecify"}};
  const ExperimentConfig m = experiment_config_from_json(minimal);
  CHECK(m.models.size() == 5u);
  CHECK(m.models.back().gamma == doctest::Approx(0.12));

  CHECK_THROWS_AS(experiment_config_from_json({{"experiment", "denoise"}}), ConfigError);
  CHECK_THROWS_AS(experiment_config_from_json({{"schema_version", 2}, {"experiment", "denoise"}}),
                  ConfigError);
  CHECK_THROWS_AS(
      experiment_config_from_json({{"schema_version", 1}, {"experiment", "denoise"}, {"colour", 1}}),
      ConfigError);
  CHECK_THROWS_AS(experiment_config_from_json(
                      {{"schema_version", 1}, {"experiment", "denoise"}, {"sampler", {{"n_live", "many"}}}}),
                  ConfigError);
  CHECK_THROWS_AS(experiment_config_from_json({{"schema_version", 1},
                                               {"experiment", "denoise"},
                                               {"models", {{{"label", "x"}, {"gamma", 0.1}}}}}),
                  ConfigError);
  CHECK_THROWS_AS(experiment_config_from_json({{"schema_version", 1},
                                               {"experiment", "reconstruct"},
                                               {"models", {{{"label", "x"}, {"dictionary", "haar"}}}}}),
                  ConfigError);
}

TEST_CASE("build_model and step rule") {
  ExperimentConfig c = default_experiment_config(ExperimentKind::Reconstruct);
  c.height = c.width = 16;
  c.coverage = 0.25;
  const ExperimentData data = simulate_experiment_data(c);
  REQUIRE(data.mask.has_value());
  ModelSpec m{"m", PriorKind::LaplaceL1, 0.5, "db2", 2, 0.0};
  const BuiltModel b = build_model(c, m, data);
  CHECK(b.likelihood.op().out_dim() == data.y.size());
  CHECK(b.prior.dim() == 256u);

  const NestedConfig n = make_nested_config(c.sampler, b.prior, b.likelihood, 1);
  const double limit = 2 * data.sigma * data.sigma / static_cast<double>(data.y.size());
  CHECK(n.chain.delta <= limit * (1 + 1e-15));
  SamplerSpec s = c.sampler;
  s.delta = 0.01;
  s.delta_scale = 0.5;
  CHECK(make_nested_config(s, b.prior, b.likelihood, 1).chain.delta == doctest::Approx(0.005));

  m.levels = 5;  // 16 is not divisible by 32
  CHECK_THROWS_AS(build_model(c, m, data), ConfigError);
}

TEST_CASE("run_comparison: small denoising study with outputs") {
  ExperimentConfig c = tiny_denoise();
  const fs::path dir = scratch_dir("cmp");
  c.output_dir = dir.string();
  const ComparisonReport r = run_comparison(c);
  REQUIRE(r.rows.size() == 3u);
  CHECK(r.all_ok());
  for (std::size_t i = 1; i < r.rows.size(); ++i) CHECK(r.rows[i - 1].log_z >= r.rows[i].log_z);
  for (const auto& row : r.rows) {
    CHECK(row.rmse.has_value());
    CHECK(std::isfinite(row.log_z));
  }
  for (const char* f : {"truth.pgm", "truth.f64", "report.json", "report.csv", "DB2.mean.pgm",
                        "DB2.dead.csv", "DB2.samples.f64"})
    CHECK_MESSAGE(fs::exists(dir / f), f);

  std::ostringstream csv;
  write_report_csv(r, csv);
  const std::string text = csv.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);

  // same config without outputs reproduces the numbers
  c.output_dir.clear();
  const ComparisonReport again = run_comparison(c);
  CHECK(report_to_json(again, false) == report_to_json(r, false));

  // merging configs that share data
  ExperimentConfig a = tiny_denoise(), b = tiny_denoise();
  a.models.resize(1);
  b.models.erase(b.models.begin());
  CHECK(report_to_json(run_comparison(std::vector<ExperimentConfig>{a, b}), false) ==
        report_to_json(again, false));
  b.seed = 99;
  CHECK_THROWS_AS(run_comparison(std::vector<ExperimentConfig>{a, b}), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("Gaussian validation sweep helpers") {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 1000; ++s) seeds.insert(derive_seed(7, s));
  CHECK(seeds.size() == 1000u);
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));

  // the MC box covers the posterior mass of every coordinate
  const Vec y{-1.0, 0.5, 2.0};
  const auto [lo, hi] = mc_box(y, 0.5, 1.0);
  for (double v : y) {
    const double mean = v / 2.0, sd = std::sqrt(0.5);
    CHECK(lo <= mean - 4 * sd + 1e-12);
    CHECK(hi >= mean + 4 * sd - 1e-12);
  }

  const auto rows = run_gaussian_validation({2, 5}, 2, 11, 50, 1000);
  REQUIRE(rows.size() == 4u);
  for (const auto& r : rows) {
    CHECK(r.status == "converged");
    CHECK(r.mc.has_value());
    CHECK(r.z_score == doctest::Approx((r.estimate - r.truth) / r.log_z_std));
  }
  // rows do not depend on the sweep order
  const auto only5 = run_gaussian_validation({5}, 2, 11, 50, 1000);
  CHECK(only5[1].estimate == rows[3].estimate);
  CHECK(validation_to_json(rows, false) == validation_to_json(run_gaussian_validation({2, 5}, 2, 11, 50, 1000), false));
}
