#pragma once

// Data-parallel inner loops shared by the samplers, the projection solvers and
// the wavelet transform. Every kernel has a portable scalar reference version
// and, where the target supports it, a vectorised variant (AVX2+FMA on x86-64,
// NEON on AArch64). The variant is picked once at start-up from CPUID; the
// PROXNEST_SIMD environment variable ("scalar", "avx2", "neon") overrides it.
//
// Elementwise kernels agree with the scalar reference to a few ulps (FMA
// contraction); reductions agree to rounding since the summation order
// differs. A given backend is deterministic run-to-run.

#include <cstddef>
#include <span>

namespace proxnest::kernels {

enum class Backend { Scalar, Avx2, Neon };

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*squared_norm)(const double* a, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  double (*sum_abs)(const double* a, std::size_t n);
  // out = alpha*x + beta*y
  void (*axpby)(double alpha, const double* x, double beta, const double* y, double* out,
                std::size_t n);
  // out = a*x + b*y + c*z
  void (*axpbypcz)(double a, const double* x, double b, const double* y, double c,
                   const double* z, double* out, std::size_t n);
  void (*soft_threshold)(const double* in, double theta, double* out, std::size_t n);
  void (*clamp)(const double* in, double lo, double hi, double* out, std::size_t n);
  // out[k] (+)= sum_m taps[m] * in[k + m],  k < n_out; `in` holds n_out + n_taps - 1 values.
  void (*fir_correlate)(const double* in, const double* taps, std::size_t n_taps, double* out,
                        std::size_t n_out, bool accumulate);
};

bool backend_supported(Backend b);
const char* backend_name(Backend b);

/// Table for a specific backend; throws DomainError if the backend is not
/// compiled in or not supported by this CPU.
const KernelTable& table(Backend b);

Backend active_backend();
const KernelTable& active_table();
void set_backend(Backend b);

// Convenience wrappers over the active table.

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);
double squared_distance(std::span<const double> a, std::span<const double> b);
double sum_abs(std::span<const double> a);
void axpby(double alpha, std::span<const double> x, double beta, std::span<const double> y,
           std::span<double> out);
void axpbypcz(double a, std::span<const double> x, double b, std::span<const double> y, double c,
              std::span<const double> z, std::span<double> out);
void soft_threshold(std::span<const double> in, double theta, std::span<double> out);
void clamp(std::span<const double> in, double lo, double hi, std::span<double> out);
void fir_correlate(std::span<const double> in, std::span<const double> taps, std::span<double> out,
                   bool accumulate);

namespace detail {
const KernelTable& scalar_table();
#if defined(PROXNEST_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(PROXNEST_HAVE_NEON)
const KernelTable& neon_table();
#endif
}  // namespace detail

}  // namespace proxnest::kernels
