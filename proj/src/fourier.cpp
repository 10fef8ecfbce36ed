#include "proxnest/fourier.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "proxnest/error.hpp"
#include "proxnest/numerics.hpp"

namespace proxnest {

namespace {

// FFTW's planner is not re-entrant; execution with new-array calls is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

int lo_bound(std::size_t n) { return -static_cast<int>(n / 2); }
int hi_bound(std::size_t n) { return static_cast<int>(n - n / 2) - 1; }

std::size_t wrap(int k, std::size_t n) {
  const int sn = static_cast<int>(n);
  return static_cast<std::size_t>(((k % sn) + sn) % sn);
}

std::size_t target_count(std::size_t d, double coverage) {
  detail::require(coverage > 0.0 && coverage <= 1.0, "mask coverage must lie in (0, 1]");
  const auto m = static_cast<std::size_t>(std::llround(coverage * static_cast<double>(d)));
  return std::max<std::size_t>(m, 1);
}

std::vector<FreqIndex> all_indices(std::size_t h, std::size_t w) {
  std::vector<FreqIndex> out;
  out.reserve(h * w);
  for (int ky = lo_bound(h); ky <= hi_bound(h); ++ky)
    for (int kx = lo_bound(w); kx <= hi_bound(w); ++kx) out.push_back({ky, kx});
  return out;
}

SamplingMask select_by_keys(std::size_t h, std::size_t w, double coverage, std::uint64_t seed,
                            const std::vector<double>& weights) {
  const auto grid = all_indices(h, w);
  const std::size_t m = target_count(h * w, coverage);
  Rng rng(seed);
  // Efraimidis-Spirakis: the m largest log(u)/w_i form a weighted sample
  // without replacement.
  std::vector<std::pair<double, std::size_t>> keys(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    keys[i] = {std::log(u) / weights[i], i};
  }
  std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(m), keys.end(),
                    [](const auto& a, const auto& b) {
                      return a.first > b.first || (a.first == b.first && a.second < b.second);
                    });
  SamplingMask mask{h, w, {}, seed};
  for (std::size_t i = 0; i < m; ++i) mask.selected.push_back(grid[keys[i].second]);
  std::sort(mask.selected.begin(), mask.selected.end());
  return mask;
}

}  // namespace

bool SamplingMask::in_grid(FreqIndex k) const {
  return k.ky >= lo_bound(height) && k.ky <= hi_bound(height) && k.kx >= lo_bound(width) &&
         k.kx <= hi_bound(width);
}

void SamplingMask::validate() const {
  detail::require(height > 0 && width > 0, "mask: empty grid");
  detail::require(!selected.empty(), "mask: no selected frequencies");
  for (const auto& k : selected) detail::require(in_grid(k), "mask: index outside grid");
  auto sorted = selected;
  std::sort(sorted.begin(), sorted.end());
  detail::require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
                  "mask: duplicate index");
}

SamplingMask generate_vds_mask(std::size_t height, std::size_t width, double coverage,
                               std::uint64_t seed, double exponent) {
  detail::require(height > 0 && width > 0, "mask: empty grid");
  detail::require(exponent >= 0.0, "mask: negative density exponent");
  const auto grid = all_indices(height, width);
  double r_max = 0.0;
  for (const auto& k : grid) r_max = std::max(r_max, std::hypot(double(k.ky), double(k.kx)));
  // one grid step of padding keeps the corner frequencies at nonzero density
  r_max += 1.0;
  std::vector<double> weights(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    weights[i] = std::pow(1.0 - std::hypot(double(grid[i].ky), double(grid[i].kx)) / r_max,
                          exponent);
  return select_by_keys(height, width, coverage, seed, weights);
}

SamplingMask generate_uniform_mask(std::size_t height, std::size_t width, double coverage,
                                   std::uint64_t seed) {
  detail::require(height > 0 && width > 0, "mask: empty grid");
  return select_by_keys(height, width, coverage, seed, std::vector<double>(height * width, 1.0));
}

MisspecifiedMask misspecify_mask(const SamplingMask& mask, double gamma) {
  detail::require(gamma >= 0.0 && std::isfinite(gamma), "misspecify: gamma must be >= 0");
  MisspecifiedMask out{mask, mask.selected, 0};
  if (gamma == 0.0) return out;
  out.mask.selected.clear();
  out.positions.clear();
  for (const auto& k : mask.selected) {
    long ky = std::lround((1.0 + gamma) * k.ky);
    long kx = std::lround((1.0 + gamma) * k.kx);
    const long cy = std::clamp<long>(ky, lo_bound(mask.height), hi_bound(mask.height));
    const long cx = std::clamp<long>(kx, lo_bound(mask.width), hi_bound(mask.width));
    if (cy != ky || cx != kx) ++out.clamped;
    out.positions.push_back({static_cast<int>(cy), static_cast<int>(cx)});
  }
  out.mask.selected = out.positions;
  auto& s = out.mask.selected;
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return out;
}

double mean_radius(const SamplingMask& mask) {
  NeumaierSum s;
  for (const auto& k : mask.selected) s.add(std::hypot(double(k.ky), double(k.kx)));
  return s.value() / static_cast<double>(mask.selected.size());
}

nlohmann::json mask_to_json(const SamplingMask& mask) {
  nlohmann::json idx = nlohmann::json::array();
  for (const auto& k : mask.selected) idx.push_back({k.ky, k.kx});
  return {{"schema_version", 1},
          {"dims", {mask.height, mask.width}},
          {"coverage", mask.coverage()},
          {"seed", mask.seed},
          {"indices", idx}};
}

SamplingMask mask_from_json(const nlohmann::json& j) {
  try {
    detail::require(j.at("schema_version").get<int>() == 1, "mask json: unsupported schema");
    SamplingMask mask;
    mask.height = j.at("dims").at(0).get<std::size_t>();
    mask.width = j.at("dims").at(1).get<std::size_t>();
    mask.seed = j.value("seed", std::uint64_t{0});
    for (const auto& p : j.at("indices")) mask.selected.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
    std::sort(mask.selected.begin(), mask.selected.end());
    mask.validate();
    return mask;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("mask json: ") + e.what());
  }
}

struct FourierOperator::Plans {
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
};

FourierOperator::FourierOperator(SamplingMask mask) : mask_(std::move(mask)), plans_(new Plans) {
  mask_.validate();
  init(mask_.selected);
}

FourierOperator::FourierOperator(std::size_t height, std::size_t width,
                                 std::vector<FreqIndex> positions)
    : plans_(new Plans) {
  mask_.height = height;
  mask_.width = width;
  mask_.selected = positions;
  std::sort(mask_.selected.begin(), mask_.selected.end());
  mask_.selected.erase(std::unique(mask_.selected.begin(), mask_.selected.end()),
                       mask_.selected.end());
  mask_.validate();
  init(positions);
}

void FourierOperator::init(const std::vector<FreqIndex>& positions) {
  const std::size_t h = mask_.height, w = mask_.width;
  std::vector<double> picked(h * w, 0.0);
  for (const auto& k : positions) {
    const std::size_t f = wrap(k.ky, h) * w + wrap(k.kx, w);
    flat_.push_back(f);
    picked[f] += 1.0;
  }
  sym_weight_.assign(h * w, 0.0);
  double wmax = 0.0;
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t f = r * w + c;
      const std::size_t neg = ((h - r) % h) * w + (w - c) % w;
      sym_weight_[f] = 0.5 * (picked[f] + picked[neg]);
      wmax = std::max(wmax, sym_weight_[f]);
    }
  norm_ = std::sqrt(wmax);

  std::vector<std::complex<double>> a(h * w), b(h * w);
  auto* pa = reinterpret_cast<fftw_complex*>(a.data());
  auto* pb = reinterpret_cast<fftw_complex*>(b.data());
  std::lock_guard<std::mutex> lock(planner_mutex());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  plans_->fwd = fftw_plan_dft_2d(int(h), int(w), pa, pb, FFTW_FORWARD, flags);
  plans_->inv = fftw_plan_dft_2d(int(h), int(w), pa, pb, FFTW_BACKWARD, flags);
  if (plans_->fwd == nullptr || plans_->inv == nullptr)
    throw std::runtime_error("fftw: plan creation failed");
}

FourierOperator::~FourierOperator() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (plans_->fwd) fftw_destroy_plan(plans_->fwd);
  if (plans_->inv) fftw_destroy_plan(plans_->inv);
}

void FourierOperator::fft(const std::vector<std::complex<double>>& in,
                          std::vector<std::complex<double>>& out, bool inverse) const {
  detail::require(in.size() == in_dim(), "fft: size mismatch");
  out.resize(in.size());
  // FFTW may not write to its input for out-of-place c2c, but the signature is non-const.
  auto* pi = const_cast<fftw_complex*>(reinterpret_cast<const fftw_complex*>(in.data()));
  fftw_execute_dft(inverse ? plans_->inv : plans_->fwd, pi,
                   reinterpret_cast<fftw_complex*>(out.data()));
  const double s = 1.0 / std::sqrt(static_cast<double>(in.size()));
  for (auto& v : out) v *= s;
}

void FourierOperator::forward(std::span<const double> x, std::span<double> out) const {
  check_forward_dims(x, out);
  std::vector<std::complex<double>> grid(x.begin(), x.end()), spec;
  fft(grid, spec, false);
  for (std::size_t j = 0; j < flat_.size(); ++j) {
    out[2 * j] = spec[flat_[j]].real();
    out[2 * j + 1] = spec[flat_[j]].imag();
  }
}

void FourierOperator::adjoint(std::span<const double> y, std::span<double> out) const {
  check_adjoint_dims(y, out);
  std::vector<std::complex<double>> spec(in_dim()), grid;
  for (std::size_t j = 0; j < flat_.size(); ++j) spec[flat_[j]] += std::complex<double>(y[2 * j], y[2 * j + 1]);
  fft(spec, grid, true);
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = grid[i].real();
}

std::optional<Vec> FourierOperator::solve_normal_closed_form(double beta,
                                                             std::span<const double> rhs) const {
  detail::require(rhs.size() == in_dim(), "normal solve: dimension mismatch");
  // For real x, Phi^T Phi is diagonal in frequency with entries (c(k) + c(-k))/2.
  std::vector<std::complex<double>> grid(rhs.begin(), rhs.end()), spec;
  fft(grid, spec, false);
  for (std::size_t f = 0; f < spec.size(); ++f) spec[f] /= 1.0 + beta * sym_weight_[f];
  fft(spec, grid, true);
  Vec x(rhs.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = grid[i].real();
  return x;
}

}  // namespace proxnest
