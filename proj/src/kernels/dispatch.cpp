#include <atomic>
#include <cstdlib>
#include <string_view>

#include "proxnest/error.hpp"
#include "proxnest/kernels.hpp"

namespace proxnest::kernels {
namespace {

Backend detect() {
#if defined(PROXNEST_HAVE_AVX2)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Backend::Avx2;
#endif
#if defined(PROXNEST_HAVE_NEON)
  return Backend::Neon;
#endif
  return Backend::Scalar;
}

Backend initial_backend() {
  const char* env = std::getenv("PROXNEST_SIMD");
  if (env != nullptr) {
    const std::string_view s(env);
    Backend wanted = detect();
    if (s == "scalar") wanted = Backend::Scalar;
    else if (s == "avx2") wanted = Backend::Avx2;
    else if (s == "neon") wanted = Backend::Neon;
    // an unavailable request silently falls back to detection
    if (backend_supported(wanted)) return wanted;
  }
  return detect();
}

std::atomic<const KernelTable*>& active_ptr() {
  static std::atomic<const KernelTable*> p{&table(initial_backend())};
  return p;
}

std::atomic<Backend>& active_tag() {
  static std::atomic<Backend> b{initial_backend()};
  return b;
}

const KernelTable& active() { return *active_ptr().load(std::memory_order_relaxed); }

void same_size(std::size_t a, std::size_t b) {
  proxnest::detail::require(a == b, "kernels: length mismatch");
}

}  // namespace

bool backend_supported(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
#if defined(PROXNEST_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::Neon:
#if defined(PROXNEST_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "unknown";
}

const KernelTable& table(Backend b) {
  if (!backend_supported(b))
    throw DomainError(std::string("kernel backend not available: ") + backend_name(b));
  switch (b) {
#if defined(PROXNEST_HAVE_AVX2)
    case Backend::Avx2: return detail::avx2_table();
#endif
#if defined(PROXNEST_HAVE_NEON)
    case Backend::Neon: return detail::neon_table();
#endif
    default: return detail::scalar_table();
  }
}

const KernelTable& active_table() { return active(); }

Backend active_backend() { return active_tag().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  const KernelTable& t = table(b);
  active_ptr().store(&t, std::memory_order_relaxed);
  active_tag().store(b, std::memory_order_relaxed);
}

double dot(std::span<const double> a, std::span<const double> b) {
  same_size(a.size(), b.size());
  return active().dot(a.data(), b.data(), a.size());
}

double squared_norm(std::span<const double> a) { return active().squared_norm(a.data(), a.size()); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
  same_size(a.size(), b.size());
  return active().squared_distance(a.data(), b.data(), a.size());
}

double sum_abs(std::span<const double> a) { return active().sum_abs(a.data(), a.size()); }

void axpby(double alpha, std::span<const double> x, double beta, std::span<const double> y,
           std::span<double> out) {
  same_size(x.size(), y.size());
  same_size(x.size(), out.size());
  active().axpby(alpha, x.data(), beta, y.data(), out.data(), x.size());
}

void axpbypcz(double a, std::span<const double> x, double b, std::span<const double> y, double c,
              std::span<const double> z, std::span<double> out) {
  same_size(x.size(), y.size());
  same_size(x.size(), z.size());
  same_size(x.size(), out.size());
  active().axpbypcz(a, x.data(), b, y.data(), c, z.data(), out.data(), x.size());
}

void soft_threshold(std::span<const double> in, double theta, std::span<double> out) {
  same_size(in.size(), out.size());
  active().soft_threshold(in.data(), theta, out.data(), in.size());
}

void clamp(std::span<const double> in, double lo, double hi, std::span<double> out) {
  same_size(in.size(), out.size());
  active().clamp(in.data(), lo, hi, out.data(), in.size());
}

void fir_correlate(std::span<const double> in, std::span<const double> taps, std::span<double> out,
                   bool accumulate) {
  proxnest::detail::require(!taps.empty(), "fir_correlate: empty filter");
  proxnest::detail::require(in.size() == out.size() + taps.size() - 1, "fir_correlate: input length");
  active().fir_correlate(in.data(), taps.data(), taps.size(), out.data(), out.size(), accumulate);
}

}  // namespace proxnest::kernels
