// AArch64 Advanced SIMD variants. Only built on aarch64 targets.
#include <arm_neon.h>

#include <cmath>

#include "proxnest/kernels.hpp"

namespace proxnest::kernels::detail {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double squared_norm_neon(const double* a, std::size_t n) { return dot_neon(a, a, n); }

double squared_distance_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float64x2_t d0 = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    const float64x2_t d1 = vsubq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    acc0 = vfmaq_f64(acc0, d0, d0);
    acc1 = vfmaq_f64(acc1, d1, d1);
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double sum_abs_neon(const double* a, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vabsq_f64(vld1q_f64(a + i)));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += std::fabs(a[i]);
  return s;
}

void axpby_neon(double alpha, const double* x, double beta, const double* y, double* out,
                std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t r = vfmaq_n_f64(vmulq_n_f64(vld1q_f64(y + i), beta), vld1q_f64(x + i), alpha);
    vst1q_f64(out + i, r);
  }
  for (; i < n; ++i) out[i] = alpha * x[i] + beta * y[i];
}

void axpbypcz_neon(double a, const double* x, double b, const double* y, double c,
                   const double* z, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t r = vmulq_n_f64(vld1q_f64(x + i), a);
    r = vfmaq_n_f64(r, vld1q_f64(y + i), b);
    r = vfmaq_n_f64(r, vld1q_f64(z + i), c);
    vst1q_f64(out + i, r);
  }
  for (; i < n; ++i) out[i] = a * x[i] + b * y[i] + c * z[i];
}

void soft_threshold_neon(const double* in, double theta, double* out, std::size_t n) {
  const float64x2_t vt = vdupq_n_f64(theta);
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t v = vld1q_f64(in + i);
    const float64x2_t mag = vmaxq_f64(vsubq_f64(vabsq_f64(v), vt), zero);
    const uint64x2_t keep_sign = vcgtq_f64(mag, zero);
    const uint64x2_t sign = vandq_u64(vandq_u64(vreinterpretq_u64_f64(v),
                                                vdupq_n_u64(0x8000000000000000ULL)),
                                      keep_sign);
    vst1q_f64(out + i, vreinterpretq_f64_u64(vorrq_u64(vreinterpretq_u64_f64(mag), sign)));
  }
  for (; i < n; ++i) {
    const double v = in[i];
    const double mag = std::fabs(v) - theta;
    out[i] = mag > 0.0 ? std::copysign(mag, v) : 0.0;
  }
}

void clamp_neon(const double* in, double lo, double hi, double* out, std::size_t n) {
  const float64x2_t vlo = vdupq_n_f64(lo);
  const float64x2_t vhi = vdupq_n_f64(hi);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vminq_f64(vmaxq_f64(vld1q_f64(in + i), vlo), vhi));
  for (; i < n; ++i) {
    const double v = in[i];
    out[i] = v < lo ? lo : (v > hi ? hi : v);
  }
}

void fir_correlate_neon(const double* in, const double* taps, std::size_t n_taps, double* out,
                        std::size_t n_out, bool accumulate) {
  std::size_t k = 0;
  for (; k + 2 <= n_out; k += 2) {
    float64x2_t acc = accumulate ? vld1q_f64(out + k) : vdupq_n_f64(0.0);
    for (std::size_t m = 0; m < n_taps; ++m) acc = vfmaq_n_f64(acc, vld1q_f64(in + k + m), taps[m]);
    vst1q_f64(out + k, acc);
  }
  for (; k < n_out; ++k) {
    double s = accumulate ? out[k] : 0.0;
    for (std::size_t m = 0; m < n_taps; ++m) s += taps[m] * in[k + m];
    out[k] = s;
  }
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable t{dot_neon,           squared_norm_neon, squared_distance_neon,
                             sum_abs_neon,       axpby_neon,        axpbypcz_neon,
                             soft_threshold_neon, clamp_neon,        fir_correlate_neon};
  return t;
}

}  // namespace proxnest::kernels::detail
