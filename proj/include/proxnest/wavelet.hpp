#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "proxnest/linear_operator.hpp"

namespace proxnest {

enum class WaveletFamily { DB2, DB8 };

struct WaveletSpec {
  WaveletFamily family = WaveletFamily::DB2;
  int levels = 4;
};

WaveletFamily parse_wavelet_family(const std::string& s);
std::string wavelet_family_name(WaveletFamily f);

/// Low-pass synthesis filter (orthonormal Daubechies, sum = sqrt 2).
const std::vector<double>& daubechies_lowpass(WaveletFamily f);
/// Quadrature-mirror high-pass partner g[k] = (-1)^k h[L-1-k].
std::vector<double> quadrature_mirror(const std::vector<double>& h);

/// 2-D separable orthonormal DWT with periodic boundaries on an h x w image
/// stored row-major. forward() is synthesis (coefficients -> image, Psi),
/// adjoint() is analysis (image -> coefficients, Psi^T). Coefficients use
/// the usual Mallat layout: the coarsest approximation sits in the top-left
/// (h >> levels) x (w >> levels) block.
class WaveletOperator final : public LinearOperator {
 public:
  WaveletOperator(WaveletSpec spec, std::size_t height, std::size_t width);

  std::size_t in_dim() const override { return h_ * w_; }
  std::size_t out_dim() const override { return h_ * w_; }
  void forward(std::span<const double> coeffs, std::span<double> image) const override;
  void adjoint(std::span<const double> image, std::span<double> coeffs) const override;
  std::string name() const override;
  double norm_bound() const override { return 1.0; }
  std::optional<Vec> solve_normal_closed_form(double beta,
                                              std::span<const double> rhs) const override;

  Vec analysis(std::span<const double> image) const { return LinearOperator::adjoint(image); }
  Vec synthesis(std::span<const double> coeffs) const { return LinearOperator::forward(coeffs); }

  const WaveletSpec& spec() const { return spec_; }
  std::size_t height() const { return h_; }
  std::size_t width() const { return w_; }

  using LinearOperator::adjoint;
  using LinearOperator::forward;

 private:
  WaveletSpec spec_;
  std::size_t h_, w_;
  std::vector<double> h_even_, h_odd_, g_even_, g_odd_;      // analysis polyphase taps
  std::vector<double> hs_even_, hs_odd_, gs_even_, gs_odd_;  // synthesis polyphase taps

  void analyse_1d(const double* in, std::size_t n, double* lo, double* hi,
                  std::vector<double>& scratch) const;
  void synthesise_1d(const double* lo, const double* hi, std::size_t n, double* out,
                     std::vector<double>& scratch) const;
};

}  // namespace proxnest
