#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "proxnest/linear_operator.hpp"

namespace proxnest {

/// Signed frequency offset from the (centred) DC term. For an n-point axis
/// the valid range is [-n/2, n - n/2 - 1].
struct FreqIndex {
  int ky = 0;
  int kx = 0;
  auto operator<=>(const FreqIndex&) const = default;
};

struct SamplingMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<FreqIndex> selected;  // sorted, unique
  std::uint64_t seed = 0;

  std::size_t grid_size() const { return height * width; }
  double coverage() const {
    return static_cast<double>(selected.size()) / static_cast<double>(grid_size());
  }
  bool in_grid(FreqIndex k) const;
  /// Throws DomainError if indices are out of range or repeated.
  void validate() const;
};

/// Variable-density random mask: selection probability proportional to
/// (1 - r/r_max)^exponent, with exactly round(coverage * h * w) indices drawn
/// without replacement (weighted reservoir keys).
SamplingMask generate_vds_mask(std::size_t height, std::size_t width, double coverage,
                               std::uint64_t seed, double exponent = 3.0);

/// Uniform random mask with the same count rule; used as a reference.
SamplingMask generate_uniform_mask(std::size_t height, std::size_t width, double coverage,
                                   std::uint64_t seed);

struct MisspecifiedMask {
  SamplingMask mask;
  // moved index of each input index, in input order and with repeats kept, so
  // that data recorded on the input mask lines up with the assumed positions
  std::vector<FreqIndex> positions;
  std::size_t clamped = 0;  // indices pushed back onto the grid boundary
};

/// Moves every index radially to round((1 + gamma) k), clamps to the grid and
/// drops duplicates from `mask`.
MisspecifiedMask misspecify_mask(const SamplingMask& mask, double gamma);

double mean_radius(const SamplingMask& mask);

nlohmann::json mask_to_json(const SamplingMask& mask);
SamplingMask mask_from_json(const nlohmann::json& j);

/// Phi = M F: unitary 2-D DFT of a real h x w image followed by selection of
/// the masked frequencies. Output is interleaved complex (out_dim = 2m). The
/// adjoint zero-fills, applies the inverse unitary DFT and keeps the real part.
class FourierOperator final : public LinearOperator {
 public:
  explicit FourierOperator(SamplingMask mask);
  /// Measurement j reads frequency positions[j]; repeats are allowed.
  FourierOperator(std::size_t height, std::size_t width, std::vector<FreqIndex> positions);
  ~FourierOperator() override;
  FourierOperator(const FourierOperator&) = delete;
  FourierOperator& operator=(const FourierOperator&) = delete;

  std::size_t in_dim() const override { return mask_.grid_size(); }
  std::size_t out_dim() const override { return 2 * flat_.size(); }
  void forward(std::span<const double> x, std::span<double> out) const override;
  void adjoint(std::span<const double> y, std::span<double> out) const override;
  std::string name() const override { return "masked-fft"; }
  double norm_bound() const override { return norm_; }
  std::optional<Vec> solve_normal_closed_form(double beta,
                                              std::span<const double> rhs) const override;

  /// Distinct measured frequencies.
  const SamplingMask& mask() const { return mask_; }

  /// Unitary 2-D DFT helpers on full complex grids (row-major, FFT order).
  void fft(const std::vector<std::complex<double>>& in, std::vector<std::complex<double>>& out,
           bool inverse) const;

  using LinearOperator::adjoint;
  using LinearOperator::forward;

 private:
  SamplingMask mask_;
  std::vector<std::size_t> flat_;   // FFT-order flat index of each selected frequency
  std::vector<double> sym_weight_;  // (c(k) + c(-k)) / 2, c = times k is read
  void init(const std::vector<FreqIndex>& positions);
  double norm_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

}  // namespace proxnest
