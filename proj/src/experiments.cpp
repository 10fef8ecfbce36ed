#include "proxnest/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

#include "proxnest/analytic.hpp"
#include "proxnest/error.hpp"

namespace proxnest {

using nlohmann::json;

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------- images

double ImageBuffer::max_abs() const {
  double m = 0.0;
  for (double v : pixels) m = std::max(m, std::fabs(v));
  return m;
}

void ImageBuffer::validate() const {
  detail::require(height > 0 && width > 0, "image: empty");
  detail::require(pixels.size() == height * width, "image: pixel count does not match dims");
  for (double v : pixels) detail::require(std::isfinite(v), "image: non-finite pixel");
}

Phantom parse_phantom(const std::string& s) {
  if (s == "shapes") return Phantom::Shapes;
  if (s == "blobs") return Phantom::Blobs;
  if (s == "sources") return Phantom::Sources;
  throw DomainError("unknown phantom '" + s + "'");
}

std::string phantom_name(Phantom p) {
  switch (p) {
    case Phantom::Shapes: return "shapes";
    case Phantom::Blobs: return "blobs";
    case Phantom::Sources: return "sources";
  }
  return "?";
}

ImageBuffer make_phantom(Phantom kind, std::size_t height, std::size_t width) {
  detail::require(height > 0 && width > 0, "phantom: empty dims");
  ImageBuffer img(height, width);
  const double h = static_cast<double>(height), w = static_cast<double>(width);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      // unit-square coordinates of the pixel centre
      const double u = (static_cast<double>(c) + 0.5) / w;
      const double v = (static_cast<double>(r) + 0.5) / h;
      double val = 0.0;
      if (kind == Phantom::Shapes) {
        val = 20.0 + 30.0 * v;
        auto in_ellipse = [&](double cu, double cv, double au, double av) {
          const double a = (u - cu) / au, b = (v - cv) / av;
          return a * a + b * b <= 1.0;
        };
        if (in_ellipse(0.5, 0.5, 0.42, 0.36)) val = 110.0;
        if (in_ellipse(0.36, 0.42, 0.14, 0.2)) val = 220.0;
        if (in_ellipse(0.68, 0.6, 0.12, 0.08)) val = 40.0;
        if (u > 0.55 && u < 0.8 && v > 0.22 && v < 0.34) val = 250.0;
        if (u > 0.2 && u < 0.75 && v > 0.74 && v < 0.79) val = 170.0;
        if (in_ellipse(0.3, 0.7, 0.05, 0.05)) val = 0.0;
      } else if (kind == Phantom::Sources) {
        // compact sources on a dark sky plus a faint elliptical ring
        struct Src { double u, v, r, a; };
        static constexpr Src srcs[] = {{0.22, 0.3, 0.035, 255.0}, {0.71, 0.24, 0.025, 200.0},
                                       {0.58, 0.66, 0.05, 150.0},  {0.3, 0.78, 0.02, 230.0},
                                       {0.83, 0.8, 0.03, 120.0},   {0.45, 0.45, 0.015, 255.0}};
        for (const auto& s : srcs) {
          const double du = (u - s.u) / s.r, dv = (v - s.v) / s.r;
          if (du * du + dv * dv <= 1.0) val = std::max(val, s.a);
        }
        const double eu = (u - 0.5) / 0.33, ev = (v - 0.52) / 0.22;
        const double rr = std::sqrt(eu * eu + ev * ev);
        if (rr > 0.85 && rr < 1.0) val = std::max(val, 60.0);
      } else {
        struct Bump { double u, v, s, a; };
        static constexpr Bump bumps[] = {{0.3, 0.3, 0.08, 200.0}, {0.7, 0.35, 0.12, 150.0},
                                         {0.45, 0.7, 0.06, 255.0}, {0.75, 0.75, 0.05, 120.0},
                                         {0.2, 0.75, 0.1, 90.0}};
        for (const auto& b : bumps) {
          const double du = u - b.u, dv = v - b.v;
          val += b.a * std::exp(-(du * du + dv * dv) / (2.0 * b.s * b.s));
        }
        val = std::min(val, 255.0);
      }
      img.at(r, c) = val;
    }
  }
  return img;
}

namespace {

std::string next_pgm_token(std::istream& in) {
  std::string tok;
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(ch);
  }
  if (tok.empty()) throw std::runtime_error("pgm: unexpected end of header");
  return tok;
}

void write_sidecar(const std::string& path, const json& j) {
  std::ofstream side(path + ".json");
  if (!side) throw std::runtime_error("cannot write " + path + ".json");
  side << j.dump(2) << "\n";
}

}  // namespace

ImageBuffer read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("pgm: cannot open " + path);
  const std::string magic = next_pgm_token(in);
  if (magic != "P5" && magic != "P2") throw std::runtime_error("pgm: unsupported magic " + magic);
  std::size_t w = 0, h = 0;
  int maxval = 0;
  try {
    w = std::stoul(next_pgm_token(in));
    h = std::stoul(next_pgm_token(in));
    maxval = std::stoi(next_pgm_token(in));
  } catch (const std::logic_error&) {
    throw std::runtime_error("pgm: malformed header in " + path);
  }
  if (w == 0 || h == 0 || maxval <= 0 || maxval > 65535)
    throw std::runtime_error("pgm: bad dims or maxval in " + path);
  ImageBuffer img(h, w);
  img.range_hi = maxval;
  if (magic == "P2") {
    for (double& v : img.pixels) {
      int x;
      if (!(in >> x)) throw std::runtime_error("pgm: truncated " + path);
      v = x;
    }
    return img;
  }
  const std::size_t bytes = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> buf(h * w * bytes);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size()))
    throw std::runtime_error("pgm: truncated " + path);
  for (std::size_t i = 0; i < h * w; ++i)
    img.pixels[i] = bytes == 1 ? buf[i] : (buf[2 * i] << 8) | buf[2 * i + 1];  // big-endian
  return img;
}

void write_pgm(const ImageBuffer& img, const std::string& path) {
  img.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("pgm: cannot write " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  const double span = img.range_hi > img.range_lo ? img.range_hi - img.range_lo : 1.0;
  std::vector<unsigned char> buf(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double t = std::clamp((img.pixels[i] - img.range_lo) / span, 0.0, 1.0);
    buf[i] = static_cast<unsigned char>(std::lround(255.0 * t));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

void write_raw(const ImageBuffer& img, const std::string& path) {
  static_assert(std::endian::native == std::endian::little, "raw output assumes little-endian");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("raw: cannot write " + path);
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.size() * sizeof(double)));
  write_sidecar(path, {{"dims", {img.height, img.width}},
                       {"count", 1},
                       {"dtype", "float64"},
                       {"byte_order", "little"}});
}

double rmse(const ImageBuffer& a, const ImageBuffer& b) {
  detail::require(a.height == b.height && a.width == b.width && a.size() == b.size(),
                  "rmse: dimension mismatch");
  detail::require(a.size() > 0, "rmse: empty images");
  NeumaierSum s;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    s.add(d * d);
  }
  return std::sqrt(s.value() / static_cast<double>(a.size()));
}

// ---------------------------------------------------------------- data

double noise_sigma(const ImageBuffer& truth, double snr_db) {
  detail::require(!std::isnan(snr_db), "snr_db must not be NaN");
  return truth.max_abs() * std::pow(10.0, -snr_db / 20.0);
}

DenoiseData simulate_denoise(const ImageBuffer& truth, double snr_db, std::uint64_t seed) {
  truth.validate();
  DenoiseData d;
  d.sigma = noise_sigma(truth, snr_db);
  d.y = truth.pixels;
  if (d.sigma == 0.0) return d;
  Rng rng(seed);
  for (double& v : d.y) v += d.sigma * rng.normal();
  return d;
}

ReconstructData simulate_reconstruct(const ImageBuffer& truth, double coverage, double snr_db,
                                     std::uint64_t seed) {
  truth.validate();
  detail::require(coverage > 0.0 && coverage <= 1.0, "coverage must lie in (0, 1]");
  ReconstructData d;
  d.mask = generate_vds_mask(truth.height, truth.width, coverage, derive_seed(seed, 1));
  d.sigma = noise_sigma(truth, snr_db);
  FourierOperator phi(d.mask);
  d.y = phi.forward(truth.pixels);
  if (d.sigma == 0.0) return d;
  Rng rng(derive_seed(seed, 2));
  const double s = d.sigma / std::numbers::sqrt2;
  for (double& v : d.y) v += s * rng.normal();
  return d;
}

ImageBuffer posterior_mean_image(const EvidenceResult& result, const std::string& store_path,
                                 std::size_t height, std::size_t width) {
  if (store_path.empty()) throw std::runtime_error("posterior mean: samples were not stored");
  const auto samples = SampleStore::read(store_path);
  if (samples.empty()) throw std::runtime_error("posterior mean: sample store is empty");
  if (samples.size() != result.posterior_log_weights.size())
    throw std::runtime_error("posterior mean: sample count does not match the weights");
  detail::require(samples.front().size() == height * width, "posterior mean: dims mismatch");
  const double top =
      *std::max_element(result.posterior_log_weights.begin(), result.posterior_log_weights.end());
  ImageBuffer img(height, width);
  std::vector<NeumaierSum> acc(img.size());
  NeumaierSum total;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const double w = std::exp(result.posterior_log_weights[s] - top);
    if (w == 0.0) continue;
    total.add(w);
    for (std::size_t i = 0; i < img.size(); ++i) acc[i].add(w * samples[s][i]);
  }
  for (std::size_t i = 0; i < img.size(); ++i) img.pixels[i] = acc[i].value() / total.value();
  return img;
}

// ---------------------------------------------------------------- config

ExperimentKind parse_experiment_kind(const std::string& s) {
  if (s == "validate-gaussian") return ExperimentKind::ValidateGaussian;
  if (s == "denoise") return ExperimentKind::Denoise;
  if (s == "reconstruct") return ExperimentKind::Reconstruct;
  if (s == "misspecify") return ExperimentKind::Misspecify;
  throw ConfigError("unknown experiment '" + s + "'");
}

std::string experiment_kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::ValidateGaussian: return "validate-gaussian";
    case ExperimentKind::Denoise: return "denoise";
    case ExperimentKind::Reconstruct: return "reconstruct";
    case ExperimentKind::Misspecify: return "misspecify";
  }
  return "?";
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (schema_version != 1) fail("unsupported schema_version " + std::to_string(schema_version));
  if (kind == ExperimentKind::ValidateGaussian) {
    if (dims.empty()) fail("validate-gaussian: no dimensions");
    for (auto d : dims)
      if (d == 0) fail("validate-gaussian: dimensions must be positive");
    if (runs < 1) fail("validate-gaussian: runs must be positive");
  } else {
    if (height == 0 || width == 0) fail("image dims must be positive");
    if (std::isnan(snr_db)) fail("snr_db must be a number");
    if (kind != ExperimentKind::Denoise && !(coverage > 0.0 && coverage <= 1.0))
      fail("coverage must lie in (0, 1]");
    if (models.empty()) fail("no models given");
    for (const auto& m : models) {
      if (m.label.empty()) fail("model without a label");
      if (!(m.mu > 0.0) && m.prior != PriorKind::Flat) fail("model " + m.label + ": mu must be > 0");
      if (m.dictionary != "identity" && m.dictionary != "db2" && m.dictionary != "db8")
        fail("model " + m.label + ": unknown dictionary " + m.dictionary);
      if (m.levels < 1) fail("model " + m.label + ": levels must be positive");
      if (!(m.gamma >= 0.0)) fail("model " + m.label + ": gamma must be >= 0");
      if (m.gamma > 0.0 && kind == ExperimentKind::Denoise)
        fail("model " + m.label + ": gamma needs a Fourier experiment");
    }
  }
  if (sampler.n_live < 2) fail("sampler.n_live must be at least 2");
  if (!(sampler.dlogz_tol > 0.0)) fail("sampler.dlogz_tol must be positive");
  if (sampler.k_gap < 1 || sampler.k_burn < 0) fail("sampler: bad k_gap / k_burn");
  if (sampler.delta < 0.0 || !(sampler.delta_scale > 0.0) || sampler.lambda < 0.0)
    fail("sampler: step parameters must be positive");
  if (sampler.retries < 0) fail("sampler.retries must be >= 0");
  if (threads < 1) fail("threads must be >= 1");
  try {
    parse_projection_method(sampler.projection);
  } catch (const DomainError& e) {
    fail(e.what());
  }
}

ExperimentConfig default_experiment_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  c.sampler.n_live = 200;
  c.sampler.max_dead = 5000;
  c.sampler.k_gap = 10;
  switch (kind) {
    case ExperimentKind::ValidateGaussian:
      c.models.clear();
      break;
    case ExperimentKind::Denoise:
      c.snr_db = 20.0;
      c.models = {{"I", PriorKind::LaplaceL1, 0.05, "identity", 4, 0.0},
                  {"DB2", PriorKind::LaplaceL1, 0.05, "db2", 4, 0.0},
                  {"DB8", PriorKind::LaplaceL1, 0.05, "db8", 4, 0.0}};
      break;
    case ExperimentKind::Reconstruct:
      c.snr_db = 30.0;
      c.coverage = 0.3;
      c.models = {{"mu=0.05", PriorKind::LaplaceL1, 0.05, "db8", 4, 0.0},
                  {"mu=0.5", PriorKind::LaplaceL1, 0.5, "db8", 4, 0.0},
                  {"mu=5", PriorKind::LaplaceL1, 5.0, "db8", 4, 0.0}};
      break;
    case ExperimentKind::Misspecify:
      c.snr_db = 30.0;
      c.coverage = 0.1;
      for (double g : {0.0, 0.03, 0.06, 0.09, 0.12}) {
        std::ostringstream label;
        label << "gamma=" << g;
        c.models.push_back({label.str(), PriorKind::LaplaceL1, 0.05, "db8", 4, g});
      }
      break;
  }
  return c;
}

namespace {

template <class T>
void take(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw ConfigError(std::string(where) + ": unknown field '" + it.key() + "'");
  }
}

}  // namespace

ExperimentConfig experiment_config_from_json(const json& j) {
  reject_unknown(j,
                 {"schema_version", "experiment", "seed", "image", "data", "models", "sampler",
                  "io", "validation"},
                 "config");
  if (!j.contains("experiment")) throw ConfigError("config: missing 'experiment'");
  std::string kind_name;
  take(j, "experiment", kind_name);
  ExperimentConfig c = default_experiment_config(parse_experiment_kind(kind_name));
  if (!j.contains("schema_version")) throw ConfigError("config: missing 'schema_version'");
  take(j, "schema_version", c.schema_version);
  take(j, "seed", c.seed);
  if (j.contains("image")) {
    const auto& im = j["image"];
    reject_unknown(im, {"phantom", "path", "height", "width"}, "image");
    take(im, "phantom", c.phantom);
    take(im, "path", c.image_path);
    take(im, "height", c.height);
    take(im, "width", c.width);
  }
  if (j.contains("data")) {
    const auto& d = j["data"];
    reject_unknown(d, {"snr_db", "coverage"}, "data");
    take(d, "snr_db", c.snr_db);
    take(d, "coverage", c.coverage);
  }
  if (j.contains("models")) {
    if (!j["models"].is_array()) throw ConfigError("models must be an array");
    c.models.clear();
    for (const auto& mj : j["models"]) {
      reject_unknown(mj, {"label", "prior", "mu", "dictionary", "levels", "gamma"}, "model");
      ModelSpec m;
      std::string prior = "laplace";
      take(mj, "label", m.label);
      take(mj, "prior", prior);
      take(mj, "mu", m.mu);
      take(mj, "dictionary", m.dictionary);
      take(mj, "levels", m.levels);
      take(mj, "gamma", m.gamma);
      try {
        m.prior = parse_prior_kind(prior);
      } catch (const DomainError& e) {
        throw ConfigError(e.what());
      }
      c.models.push_back(m);
    }
  }
  if (j.contains("sampler")) {
    const auto& s = j["sampler"];
    reject_unknown(s,
                   {"n_live", "max_dead", "dlogz_tol", "k_burn", "k_gap", "delta", "delta_scale",
                    "lambda", "mh", "retries", "projection"},
                   "sampler");
    take(s, "n_live", c.sampler.n_live);
    take(s, "max_dead", c.sampler.max_dead);
    take(s, "dlogz_tol", c.sampler.dlogz_tol);
    take(s, "k_burn", c.sampler.k_burn);
    take(s, "k_gap", c.sampler.k_gap);
    take(s, "delta", c.sampler.delta);
    take(s, "delta_scale", c.sampler.delta_scale);
    take(s, "lambda", c.sampler.lambda);
    take(s, "mh", c.sampler.mh);
    take(s, "retries", c.sampler.retries);
    take(s, "projection", c.sampler.projection);
  }
  if (j.contains("io")) {
    const auto& io = j["io"];
    reject_unknown(io, {"output_dir", "store_samples", "threads"}, "io");
    take(io, "output_dir", c.output_dir);
    take(io, "store_samples", c.store_samples);
    take(io, "threads", c.threads);
  }
  if (j.contains("validation")) {
    const auto& v = j["validation"];
    reject_unknown(v, {"dims", "runs", "mc_samples"}, "validation");
    take(v, "dims", c.dims);
    take(v, "runs", c.runs);
    take(v, "mc_samples", c.mc_samples);
  }
  c.validate();
  return c;
}

json experiment_config_to_json(const ExperimentConfig& c) {
  json models = json::array();
  for (const auto& m : c.models)
    models.push_back({{"label", m.label},
                      {"prior", prior_kind_name(m.prior)},
                      {"mu", m.mu},
                      {"dictionary", m.dictionary},
                      {"levels", m.levels},
                      {"gamma", m.gamma}});
  const auto& s = c.sampler;
  return {{"schema_version", c.schema_version},
          {"experiment", experiment_kind_name(c.kind)},
          {"seed", c.seed},
          {"image", {{"phantom", c.phantom}, {"path", c.image_path}, {"height", c.height},
                     {"width", c.width}}},
          {"data", {{"snr_db", c.snr_db}, {"coverage", c.coverage}}},
          {"models", models},
          {"sampler", {{"n_live", s.n_live}, {"max_dead", s.max_dead}, {"dlogz_tol", s.dlogz_tol},
                       {"k_burn", s.k_burn}, {"k_gap", s.k_gap}, {"delta", s.delta},
                       {"delta_scale", s.delta_scale}, {"lambda", s.lambda}, {"mh", s.mh},
                       {"retries", s.retries}, {"projection", s.projection}}},
          {"io", {{"output_dir", c.output_dir}, {"store_samples", c.store_samples},
                  {"threads", c.threads}}},
          {"validation", {{"dims", c.dims}, {"runs", c.runs}, {"mc_samples", c.mc_samples}}}};
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return experiment_config_from_json(j);
}

// ---------------------------------------------------------------- models

ImageBuffer load_truth_image(const ExperimentConfig& c) {
  if (!c.image_path.empty()) return read_pgm(c.image_path);
  try {
    return make_phantom(parse_phantom(c.phantom), c.height, c.width);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

ExperimentData simulate_experiment_data(const ExperimentConfig& c) {
  ExperimentData d;
  d.truth = load_truth_image(c);
  if (c.kind == ExperimentKind::Denoise) {
    auto s = simulate_denoise(d.truth, c.snr_db, c.seed);
    d.y = std::move(s.y);
    d.sigma = s.sigma;
  } else {
    auto s = simulate_reconstruct(d.truth, c.coverage, c.snr_db, c.seed);
    d.y = std::move(s.y);
    d.sigma = s.sigma;
    d.mask = std::move(s.mask);
  }
  return d;
}

BuiltModel build_model(const ExperimentConfig& c, const ModelSpec& m, const ExperimentData& data) {
  const std::size_t h = data.truth.height, w = data.truth.width, d = h * w;
  OperatorPtr dict;
  if (m.dictionary == "identity") {
    dict = std::make_shared<IdentityOperator>(d);
  } else {
    if (h % (std::size_t{1} << m.levels) != 0 || w % (std::size_t{1} << m.levels) != 0)
      throw ConfigError("model " + m.label + ": image dims not divisible by 2^levels");
    dict = std::make_shared<WaveletOperator>(
        WaveletSpec{parse_wavelet_family(m.dictionary), m.levels}, h, w);
  }
  PriorModel prior = m.prior == PriorKind::Flat       ? PriorModel::flat(d, data.truth.range_hi)
                     : m.prior == PriorKind::GaussianL2 ? PriorModel::gaussian(m.mu, dict)
                                                        : PriorModel::laplace(m.mu, dict);
  OperatorPtr phi;
  if (c.kind == ExperimentKind::Denoise) {
    phi = std::make_shared<IdentityOperator>(d);
  } else {
    if (!data.mask) throw ConfigError("Fourier experiment without a mask");
    if (m.gamma == 0.0)
      phi = std::make_shared<FourierOperator>(*data.mask);
    else
      phi = std::make_shared<FourierOperator>(h, w, misspecify_mask(*data.mask, m.gamma).positions);
  }
  return {std::move(prior), GaussianLikelihood(data.y, phi, data.sigma)};
}

NestedConfig make_nested_config(const SamplerSpec& s, const PriorModel& prior,
                                const GaussianLikelihood& lik, std::uint64_t seed) {
  NestedConfig n;
  n.n_live = s.n_live;
  n.max_dead = s.max_dead;
  n.dlogz_tol = s.dlogz_tol;
  n.seed = seed;
  n.retries = s.retries;
  n.chain = default_chain_config(prior);
  double delta = s.delta;
  if (delta == 0.0) {
    const double m_eff = static_cast<double>(lik.op().out_dim());
    delta = std::min(n.chain.delta, 2.0 * lik.sigma() * lik.sigma() / m_eff);
  }
  delta *= s.delta_scale;
  const double lf = prior.lipschitz();
  n.chain.delta = delta;
  if (s.lambda > 0.0)
    n.chain.lambda = s.lambda;
  else if (lf == 0.0)
    n.chain.lambda = 5.0 * delta;
  n.chain.k_burn = s.k_burn;
  n.chain.k_gap = s.k_gap;
  n.chain.mh = s.mh;
  n.chain.projector.method = parse_projection_method(s.projection);
  n.chain.validate(lf);
  n.validate();
  return n;
}

// ---------------------------------------------------------------- comparison

bool ComparisonReport::all_ok() const {
  return std::all_of(rows.begin(), rows.end(), [](const ComparisonRow& r) { return r.ok; });
}

namespace {

std::string file_label(const std::string& label) {
  std::string out;
  for (char ch : label) out.push_back(std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_');
  return out;
}

ComparisonRow run_one(const ExperimentConfig& c, const ModelSpec& m, std::size_t index,
                      const ExperimentData& data) {
  ComparisonRow row;
  row.label = m.label;
  try {
    BuiltModel model = build_model(c, m, data);
    NestedConfig n = make_nested_config(c.sampler, model.prior, model.likelihood,
                                        derive_seed(c.seed, 1000 + index));
    std::string store;
    if (!c.output_dir.empty() && c.store_samples) {
      store = (std::filesystem::path(c.output_dir) / (file_label(m.label) + ".samples.f64")).string();
      n.sample_store_path = store;
    }
    const EvidenceResult res = run_nested(model.prior, model.likelihood, n);
    row.log_z = res.log_z;
    row.log_z_std = res.log_z_std;
    row.log_vz = res.log_vz;
    row.seconds = res.seconds;
    row.status = run_status_name(res.status);
    row.message = res.message;
    row.ok = res.status != RunStatus::Aborted;
    row.n_dead = res.n_dead();
    row.acceptance = res.chain.acceptance_rate();
    if (!res.posterior_mean.empty()) {
      ImageBuffer mean(data.truth.height, data.truth.width);
      mean.pixels = res.posterior_mean;
      row.rmse = rmse(mean, data.truth);
      if (!c.output_dir.empty()) {
        const auto base = std::filesystem::path(c.output_dir) / file_label(m.label);
        mean.range_hi = data.truth.range_hi;
        write_pgm(mean, base.string() + ".mean.pgm");
        write_raw(mean, base.string() + ".mean.f64");
        std::ofstream csv(base.string() + ".dead.csv");
        write_dead_csv(res, csv);
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    row.ok = false;
    row.status = "failed";
    row.message = e.what();
  }
  return row;
}

}  // namespace

ComparisonReport run_comparison(const ExperimentConfig& c) {
  c.validate();
  if (c.kind == ExperimentKind::ValidateGaussian)
    throw ConfigError("run_comparison: validate-gaussian has its own driver");
  if (!c.output_dir.empty()) std::filesystem::create_directories(c.output_dir);
  const ExperimentData data = simulate_experiment_data(c);
  // config errors surface before any sampling starts
  for (const auto& m : c.models) build_model(c, m, data);

  std::vector<ComparisonRow> rows(c.models.size());
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(c.threads), c.models.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < c.models.size(); ++i) rows[i] = run_one(c, c.models[i], i, data);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < c.models.size(); i = next++)
          rows[i] = run_one(c, c.models[i], i, data);
      });
    for (auto& th : pool) th.join();
  }

  ComparisonReport rep;
  rep.kind = c.kind;
  rep.seed = c.seed;
  rep.sigma = data.sigma;
  rep.rows = std::move(rows);
  std::stable_sort(rep.rows.begin(), rep.rows.end(),
                   [](const ComparisonRow& a, const ComparisonRow& b) { return a.log_z > b.log_z; });
  if (!c.output_dir.empty()) {
    const std::filesystem::path dir(c.output_dir);
    ImageBuffer truth = data.truth;
    write_pgm(truth, (dir / "truth.pgm").string());
    write_raw(truth, (dir / "truth.f64").string());
    if (data.mask) {
      std::ofstream mj(dir / "mask.json");
      mj << mask_to_json(*data.mask).dump() << "\n";
    }
    std::ofstream rj(dir / "report.json");
    rj << report_to_json(rep, true).dump(2) << "\n";
    std::ofstream rc(dir / "report.csv");
    write_report_csv(rep, rc);
  }
  return rep;
}

ComparisonReport run_comparison(const std::vector<ExperimentConfig>& configs) {
  if (configs.empty()) throw ConfigError("compare: no configs");
  ExperimentConfig merged = configs.front();
  const json data_block = [](const ExperimentConfig& c) {
    json j = experiment_config_to_json(c);
    return json{j["experiment"], j["seed"], j["image"], j["data"]};
  }(merged);
  for (std::size_t i = 1; i < configs.size(); ++i) {
    json j = experiment_config_to_json(configs[i]);
    if (json{j["experiment"], j["seed"], j["image"], j["data"]} != data_block)
      throw ConfigError("compare: configs describe different data");
    merged.models.insert(merged.models.end(), configs[i].models.begin(), configs[i].models.end());
  }
  return run_comparison(merged);
}

json report_to_json(const ComparisonReport& r, bool include_timing) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    json jr = {{"label", row.label},
               {"log_z", row.ok ? json(row.log_z) : json(nullptr)},
               {"log_z_std", row.log_z_std},
               {"log_vz", row.ok ? json(row.log_vz) : json(nullptr)},
               {"rmse", row.rmse ? json(*row.rmse) : json(nullptr)},
               {"status", row.status},
               {"message", row.message},
               {"ok", row.ok},
               {"n_dead", row.n_dead},
               {"acceptance", row.acceptance}};
    if (include_timing) jr["seconds"] = row.seconds;
    rows.push_back(jr);
  }
  return {{"schema_version", 1},
          {"experiment", experiment_kind_name(r.kind)},
          {"seed", r.seed},
          {"sigma", r.sigma},
          {"error_bar", "sqrt(H/N_live)"},
          {"rows", rows}};
}

void write_report_csv(const ComparisonReport& r, std::ostream& out) {
  out << "label,log_z,log_z_std,rmse,status,n_dead,acceptance,seconds\n";
  out.precision(17);
  for (const auto& row : r.rows) {
    out << row.label << "," << row.log_z << "," << row.log_z_std << ",";
    if (row.rmse) out << *row.rmse;
    out << "," << row.status << "," << row.n_dead << "," << row.acceptance << "," << row.seconds
        << "\n";
  }
}

// ---------------------------------------------------------------- validation

NestedConfig validation_nested_config(std::size_t d, std::size_t n_live, std::uint64_t seed) {
  const auto prior = PriorModel::gaussian(0.5, std::make_shared<IdentityOperator>(d));
  NestedConfig n;
  n.n_live = n_live;
  n.max_dead = 0;
  n.seed = seed;
  n.chain = default_chain_config(prior);
  n.chain.delta *= std::min(1.0, 20.0 / static_cast<double>(d));
  n.chain.k_gap = d >= 100 ? 20 : 10;
  n.accumulate_mean = false;
  return n;
}

std::pair<double, double> mc_box(const Vec& y, double mu, double sigma) {
  detail::require(!y.empty(), "mc_box: empty data");
  const double prec = 2.0 * mu + 1.0 / (sigma * sigma);
  const double shrink = 1.0 / (sigma * sigma * prec);
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double s = 1.0 / std::sqrt(prec);
  return {shrink * *lo - 4.0 * s, shrink * *hi + 4.0 * s};
}

std::vector<ValidationRow> run_gaussian_validation(const std::vector<std::size_t>& dims, int runs,
                                                   std::uint64_t seed, std::size_t n_live,
                                                   std::size_t mc_samples) {
  std::vector<ValidationRow> out;
  for (std::size_t d : dims) {
    for (int r = 0; r < runs; ++r) {
      ValidationRow row;
      row.dim = d;
      row.run = r;
      row.seed = derive_seed(seed, (static_cast<std::uint64_t>(d) << 16) + r);
      GaussianConjugateSpec spec{0.5, 1.0, simulate_validation_data(d, 1.0, row.seed)};
      row.truth = gaussian_log_evidence(spec);
      auto op = std::make_shared<IdentityOperator>(d);
      const auto prior = PriorModel::gaussian(0.5, op);
      const GaussianLikelihood lik(spec.y, op, 1.0);
      const EvidenceResult res =
          run_nested(prior, lik, validation_nested_config(d, n_live, derive_seed(row.seed, 1)));
      row.estimate = res.log_vz;
      row.log_z_std = res.log_z_std;
      row.z_score = (row.estimate - row.truth) / row.log_z_std;
      row.within_3sigma = res.status != RunStatus::Aborted && std::fabs(row.z_score) <= 3.0;
      row.status = run_status_name(res.status);
      row.n_dead = res.n_dead();
      row.seconds = res.seconds;
      if (mc_samples > 0) {
        const auto [lo, hi] = mc_box(spec.y, spec.mu, spec.sigma);
        row.mc = mc_integration(spec, mc_samples, derive_seed(row.seed, 2), lo, hi);
      }
      out.push_back(row);
    }
  }
  return out;
}

json validation_to_json(const std::vector<ValidationRow>& rows, bool include_timing) {
  json arr = json::array();
  for (const auto& r : rows) {
    json j = {{"dim", r.dim},       {"run", r.run},
              {"seed", r.seed},     {"truth_log_vz", r.truth},
              {"ns_log_vz", r.estimate}, {"ns_std", r.log_z_std},
              {"z_score", r.z_score}, {"within_3sigma", r.within_3sigma},
              {"status", r.status}, {"n_dead", r.n_dead}};
    if (r.mc) {
      j["mc_log_vz"] = r.mc->log_vz;
      j["mc_std_err"] = r.mc->std_err;
    }
    if (include_timing) j["seconds"] = r.seconds;
    arr.push_back(j);
  }
  return {{"schema_version", 1}, {"experiment", "validate-gaussian"},
          {"error_bar", "sqrt(H/N_live)"}, {"rows", arr}};
}

void write_validation_csv(const std::vector<ValidationRow>& rows, std::ostream& out) {
  out << "dim,run,truth_log_vz,ns_log_vz,ns_std,z_score,within_3sigma,mc_log_vz,mc_std_err,status,"
         "n_dead,seconds\n";
  out.precision(17);
  for (const auto& r : rows) {
    out << r.dim << "," << r.run << "," << r.truth << "," << r.estimate << "," << r.log_z_std
        << "," << r.z_score << "," << (r.within_3sigma ? 1 : 0) << ",";
    if (r.mc) out << r.mc->log_vz << "," << r.mc->std_err;
    else out << ",";
    out << "," << r.status << "," << r.n_dead << "," << r.seconds << "\n";
  }
}

}  // namespace proxnest
