// Compiled with -mavx2 -mfma. Only reached after a CPUID check.
#include <immintrin.h>

#include <cmath>

#include "proxnest/kernels.hpp"

namespace proxnest::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline __m256d abs_pd(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double squared_norm_avx2(const double* a, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d v0 = _mm256_loadu_pd(a + i);
    const __m256d v1 = _mm256_loadu_pd(a + i + 4);
    acc0 = _mm256_fmadd_pd(v0, v0, acc0);
    acc1 = _mm256_fmadd_pd(v1, v1, acc1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(a + i);
    acc0 = _mm256_fmadd_pd(v, v, acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * a[i];
  return s;
}

double squared_distance_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc0 = _mm256_fmadd_pd(d, d, acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double sum_abs_avx2(const double* a, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, abs_pd(_mm256_loadu_pd(a + i)));
    acc1 = _mm256_add_pd(acc1, abs_pd(_mm256_loadu_pd(a + i + 4)));
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, abs_pd(_mm256_loadu_pd(a + i)));
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += std::fabs(a[i]);
  return s;
}

void axpby_avx2(double alpha, const double* x, double beta, const double* y, double* out,
                std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  const __m256d vb = _mm256_set1_pd(beta);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                      _mm256_mul_pd(vb, _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < n; ++i) out[i] = alpha * x[i] + beta * y[i];
}

void axpbypcz_avx2(double a, const double* x, double b, const double* y, double c,
                   const double* z, double* out, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  const __m256d vc = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    r = _mm256_fmadd_pd(vb, _mm256_loadu_pd(y + i), r);
    r = _mm256_fmadd_pd(vc, _mm256_loadu_pd(z + i), r);
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < n; ++i) out[i] = a * x[i] + b * y[i] + c * z[i];
}

void soft_threshold_avx2(const double* in, double theta, double* out, std::size_t n) {
  const __m256d vt = _mm256_set1_pd(theta);
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(in + i);
    const __m256d mag = _mm256_max_pd(_mm256_sub_pd(abs_pd(v), vt), zero);
    // sign only on survivors so that zeroed entries are +0.0 as in the scalar path
    const __m256d sign = _mm256_and_pd(_mm256_and_pd(v, sign_mask),
                                       _mm256_cmp_pd(mag, zero, _CMP_GT_OQ));
    _mm256_storeu_pd(out + i, _mm256_or_pd(mag, sign));
  }
  for (; i < n; ++i) {
    const double v = in[i];
    const double mag = std::fabs(v) - theta;
    out[i] = mag > 0.0 ? std::copysign(mag, v) : 0.0;
  }
}

void clamp_avx2(const double* in, double lo, double hi, double* out, std::size_t n) {
  const __m256d vlo = _mm256_set1_pd(lo);
  const __m256d vhi = _mm256_set1_pd(hi);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_min_pd(_mm256_max_pd(_mm256_loadu_pd(in + i), vlo), vhi));
  for (; i < n; ++i) {
    const double v = in[i];
    out[i] = v < lo ? lo : (v > hi ? hi : v);
  }
}

void fir_correlate_avx2(const double* in, const double* taps, std::size_t n_taps, double* out,
                        std::size_t n_out, bool accumulate) {
  std::size_t k = 0;
  for (; k + 8 <= n_out; k += 8) {
    __m256d acc0 = accumulate ? _mm256_loadu_pd(out + k) : _mm256_setzero_pd();
    __m256d acc1 = accumulate ? _mm256_loadu_pd(out + k + 4) : _mm256_setzero_pd();
    for (std::size_t m = 0; m < n_taps; ++m) {
      const __m256d t = _mm256_set1_pd(taps[m]);
      acc0 = _mm256_fmadd_pd(t, _mm256_loadu_pd(in + k + m), acc0);
      acc1 = _mm256_fmadd_pd(t, _mm256_loadu_pd(in + k + m + 4), acc1);
    }
    _mm256_storeu_pd(out + k, acc0);
    _mm256_storeu_pd(out + k + 4, acc1);
  }
  for (; k + 4 <= n_out; k += 4) {
    __m256d acc = accumulate ? _mm256_loadu_pd(out + k) : _mm256_setzero_pd();
    for (std::size_t m = 0; m < n_taps; ++m)
      acc = _mm256_fmadd_pd(_mm256_set1_pd(taps[m]), _mm256_loadu_pd(in + k + m), acc);
    _mm256_storeu_pd(out + k, acc);
  }
  for (; k < n_out; ++k) {
    double s = accumulate ? out[k] : 0.0;
    for (std::size_t m = 0; m < n_taps; ++m) s += taps[m] * in[k + m];
    out[k] = s;
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable t{dot_avx2,           squared_norm_avx2, squared_distance_avx2,
                             sum_abs_avx2,       axpby_avx2,        axpbypcz_avx2,
                             soft_threshold_avx2, clamp_avx2,        fir_correlate_avx2};
  return t;
}

}  // namespace proxnest::kernels::detail
