#include <cmath>

#include "proxnest/kernels.hpp"

namespace proxnest::kernels::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double squared_norm_scalar(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
  return s;
}

double squared_distance_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double sum_abs_scalar(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::fabs(a[i]);
  return s;
}

void axpby_scalar(double alpha, const double* x, double beta, const double* y, double* out,
                  std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = alpha * x[i] + beta * y[i];
}

void axpbypcz_scalar(double a, const double* x, double b, const double* y, double c,
                     const double* z, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i] + c * z[i];
}

void soft_threshold_scalar(const double* in, double theta, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double v = in[i];
    const double mag = std::fabs(v) - theta;
    out[i] = mag > 0.0 ? std::copysign(mag, v) : 0.0;
  }
}

void clamp_scalar(const double* in, double lo, double hi, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double v = in[i];
    out[i] = v < lo ? lo : (v > hi ? hi : v);
  }
}

void fir_correlate_scalar(const double* in, const double* taps, std::size_t n_taps, double* out,
                          std::size_t n_out, bool accumulate) {
  for (std::size_t k = 0; k < n_out; ++k) {
    double s = accumulate ? out[k] : 0.0;
    for (std::size_t m = 0; m < n_taps; ++m) s += taps[m] * in[k + m];
    out[k] = s;
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{dot_scalar,           squared_norm_scalar, squared_distance_scalar,
                             sum_abs_scalar,       axpby_scalar,        axpbypcz_scalar,
                             soft_threshold_scalar, clamp_scalar,        fir_correlate_scalar};
  return t;
}

}  // namespace proxnest::kernels::detail
