#include "proxnest/wavelet.hpp"

#include <algorithm>

#include "proxnest/error.hpp"
#include "proxnest/kernels.hpp"

namespace proxnest {

namespace {

// Decomposition low-pass filters as tabulated by PyWavelets; the synthesis
// low-pass is the reversal.
constexpr double kDb2Dec[] = {-0.12940952255126037, 0.2241438680420134, 0.8365163037378079,
                              0.48296291314453416};
constexpr double kDb8Dec[] = {
    -0.00011747678412476953, 0.0006754494064505693, -0.00039174037337694705,
    -0.004870352993451574,   0.008746094047405777,  0.013981027917398282,
    -0.044088253930794755,   -0.017369301001807547, 0.12874742662047847,
    0.0004724845739132828,   -0.2840155429615469,   -0.015829105256349306,
    0.5853546836542067,      0.6756307362972898,    0.31287159091429995,
    0.05441584224310401};

std::vector<double> reversed(const double* b, const double* e) {
  std::vector<double> v(b, e);
  std::reverse(v.begin(), v.end());
  return v;
}

// Periodic extension: ext[q] = src[(q + shift) mod n] for q < n + extra.
void periodic_extend(const double* src, std::size_t n, std::ptrdiff_t shift, std::size_t extra,
                     std::vector<double>& ext) {
  ext.resize(n + extra);
  const auto sn = static_cast<std::ptrdiff_t>(n);
  for (std::size_t q = 0; q < ext.size(); ++q) {
    std::ptrdiff_t i = (static_cast<std::ptrdiff_t>(q) + shift) % sn;
    if (i < 0) i += sn;
    ext[q] = src[i];
  }
}

}  // namespace

WaveletFamily parse_wavelet_family(const std::string& s) {
  if (s == "db2" || s == "DB2") return WaveletFamily::DB2;
  if (s == "db8" || s == "DB8") return WaveletFamily::DB8;
  throw DomainError("unknown wavelet family: " + s);
}

std::string wavelet_family_name(WaveletFamily f) {
  return f == WaveletFamily::DB2 ? "db2" : "db8";
}

const std::vector<double>& daubechies_lowpass(WaveletFamily f) {
  static const std::vector<double> db2 = reversed(std::begin(kDb2Dec), std::end(kDb2Dec));
  static const std::vector<double> db8 = reversed(std::begin(kDb8Dec), std::end(kDb8Dec));
  return f == WaveletFamily::DB2 ? db2 : db8;
}

std::vector<double> quadrature_mirror(const std::vector<double>& h) {
  const std::size_t L = h.size();
  std::vector<double> g(L);
  for (std::size_t k = 0; k < L; ++k) g[k] = (k % 2 == 0 ? 1.0 : -1.0) * h[L - 1 - k];
  return g;
}

WaveletOperator::WaveletOperator(WaveletSpec spec, std::size_t height, std::size_t width)
    : spec_(spec), h_(height), w_(width) {
  detail::require(spec.levels >= 1, "wavelet: levels must be positive");
  detail::require(height > 0 && width > 0, "wavelet: empty image");
  const std::size_t block = std::size_t{1} << spec.levels;
  detail::require(height % block == 0 && width % block == 0,
                  "wavelet: image dims must be divisible by 2^levels");

  const auto& h = daubechies_lowpass(spec.family);
  const auto g = quadrature_mirror(h);
  const std::size_t M = h.size() / 2;
  for (std::size_t r = 0; r < M; ++r) {
    h_even_.push_back(h[2 * r]);
    h_odd_.push_back(h[2 * r + 1]);
    g_even_.push_back(g[2 * r]);
    g_odd_.push_back(g[2 * r + 1]);
  }
  for (std::size_t s = 0; s < M; ++s) {
    hs_even_.push_back(h[2 * (M - 1 - s)]);
    hs_odd_.push_back(h[2 * (M - 1 - s) + 1]);
    gs_even_.push_back(g[2 * (M - 1 - s)]);
    gs_odd_.push_back(g[2 * (M - 1 - s) + 1]);
  }
}

std::string WaveletOperator::name() const {
  return wavelet_family_name(spec_.family) + "/L" + std::to_string(spec_.levels);
}

// a[k] = sum_j h[j] x[(2k+j) mod n], split into even and odd phases.
void WaveletOperator::analyse_1d(const double* in, std::size_t n, double* lo, double* hi,
                                 std::vector<double>& scratch) const {
  const std::size_t n2 = n / 2;
  const std::size_t M = h_even_.size();
  scratch.resize(n);
  for (std::size_t q = 0; q < n2; ++q) {
    scratch[q] = in[2 * q];
    scratch[n2 + q] = in[2 * q + 1];
  }
  std::vector<double> ext_e, ext_o;
  periodic_extend(scratch.data(), n2, 0, M - 1, ext_e);
  periodic_extend(scratch.data() + n2, n2, 0, M - 1, ext_o);
  const auto& K = kernels::active_table();
  K.fir_correlate(ext_e.data(), h_even_.data(), M, lo, n2, false);
  K.fir_correlate(ext_o.data(), h_odd_.data(), M, lo, n2, true);
  K.fir_correlate(ext_e.data(), g_even_.data(), M, hi, n2, false);
  K.fir_correlate(ext_o.data(), g_odd_.data(), M, hi, n2, true);
}

void WaveletOperator::synthesise_1d(const double* lo, const double* hi, std::size_t n, double* out,
                                    std::vector<double>& scratch) const {
  const std::size_t n2 = n / 2;
  const std::size_t M = h_even_.size();
  const auto shift = -static_cast<std::ptrdiff_t>(M - 1);
  std::vector<double> ext_a, ext_d;
  periodic_extend(lo, n2, shift, M - 1, ext_a);
  periodic_extend(hi, n2, shift, M - 1, ext_d);
  scratch.resize(n);
  double* even = scratch.data();
  double* odd = scratch.data() + n2;
  const auto& K = kernels::active_table();
  K.fir_correlate(ext_a.data(), hs_even_.data(), M, even, n2, false);
  K.fir_correlate(ext_d.data(), gs_even_.data(), M, even, n2, true);
  K.fir_correlate(ext_a.data(), hs_odd_.data(), M, odd, n2, false);
  K.fir_correlate(ext_d.data(), gs_odd_.data(), M, odd, n2, true);
  for (std::size_t p = 0; p < n2; ++p) {
    out[2 * p] = even[p];
    out[2 * p + 1] = odd[p];
  }
}

void WaveletOperator::adjoint(std::span<const double> image, std::span<double> coeffs) const {
  check_adjoint_dims(image, coeffs);
  std::copy(image.begin(), image.end(), coeffs.begin());
  std::vector<double> line, lo, hi, scratch;
  std::size_t hh = h_, ww = w_;
  for (int level = 0; level < spec_.levels; ++level) {
    lo.resize(std::max(hh, ww) / 2);
    hi.resize(std::max(hh, ww) / 2);
    for (std::size_t r = 0; r < hh; ++r) {
      double* row = coeffs.data() + r * w_;
      line.assign(row, row + ww);
      analyse_1d(line.data(), ww, lo.data(), hi.data(), scratch);
      std::copy_n(lo.data(), ww / 2, row);
      std::copy_n(hi.data(), ww / 2, row + ww / 2);
    }
    line.resize(hh);
    for (std::size_t c = 0; c < ww; ++c) {
      for (std::size_t r = 0; r < hh; ++r) line[r] = coeffs[r * w_ + c];
      analyse_1d(line.data(), hh, lo.data(), hi.data(), scratch);
      for (std::size_t r = 0; r < hh / 2; ++r) {
        coeffs[r * w_ + c] = lo[r];
        coeffs[(r + hh / 2) * w_ + c] = hi[r];
      }
    }
    hh /= 2;
    ww /= 2;
  }
}

void WaveletOperator::forward(std::span<const double> coeffs, std::span<double> image) const {
  check_forward_dims(coeffs, image);
  std::copy(coeffs.begin(), coeffs.end(), image.begin());
  std::vector<double> line, lo, hi, scratch;
  for (int level = spec_.levels - 1; level >= 0; --level) {
    const std::size_t hh = h_ >> level;
    const std::size_t ww = w_ >> level;
    lo.resize(hh / 2);
    hi.resize(hh / 2);
    line.resize(hh);
    for (std::size_t c = 0; c < ww; ++c) {
      for (std::size_t r = 0; r < hh / 2; ++r) {
        lo[r] = image[r * w_ + c];
        hi[r] = image[(r + hh / 2) * w_ + c];
      }
      synthesise_1d(lo.data(), hi.data(), hh, line.data(), scratch);
      for (std::size_t r = 0; r < hh; ++r) image[r * w_ + c] = line[r];
    }
    line.resize(ww);
    for (std::size_t r = 0; r < hh; ++r) {
      double* row = image.data() + r * w_;
      synthesise_1d(row, row + ww / 2, ww, line.data(), scratch);
      std::copy_n(line.data(), ww, row);
    }
  }
}

std::optional<Vec> WaveletOperator::solve_normal_closed_form(double beta,
                                                             std::span<const double> rhs) const {
  Vec x(rhs.begin(), rhs.end());
  const double s = 1.0 / (1.0 + beta);
  for (double& v : x) v *= s;
  return x;
}

}  // namespace proxnest
