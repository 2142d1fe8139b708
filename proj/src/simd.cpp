#include "jtsmc/simd.hpp"

#include <algorithm>
#include <atomic>
#include <limits>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define JTSMC_X86 1
#endif

namespace jtsmc::simd {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double max_value(const double* x, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, x[i]);
  return m;
}

void accumulate_keys(std::uint32_t* keys, const std::uint32_t* col, std::uint32_t stride, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) keys[i] += col[i] * stride;
}

}  // namespace scalar

#ifdef JTSMC_X86
namespace avx2 {

__attribute__((target("avx2,fma"))) double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  acc0 = _mm256_add_pd(acc0, acc1);
  __m128d lo = _mm256_castpd256_pd128(acc0);
  __m128d hi = _mm256_extractf128_pd(acc0, 1);
  lo = _mm_add_pd(lo, hi);
  double s = _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

__attribute__((target("avx2"))) double max_value(const double* x, std::size_t n) {
  const double ninf = -std::numeric_limits<double>::infinity();
  __m256d m = _mm256_set1_pd(ninf);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) m = _mm256_max_pd(m, _mm256_loadu_pd(x + i));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, m);
  double r = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
  for (; i < n; ++i) r = std::max(r, x[i]);
  return r;
}

__attribute__((target("avx2"))) void accumulate_keys(std::uint32_t* keys, const std::uint32_t* col,
                                                     std::uint32_t stride, std::size_t n) {
  const __m256i s = _mm256_set1_epi32(static_cast<int>(stride));
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    auto* kp = reinterpret_cast<__m256i*>(keys + i);
    const __m256i c = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(col + i));
    _mm256_storeu_si256(kp, _mm256_add_epi32(_mm256_loadu_si256(kp), _mm256_mullo_epi32(c, s)));
  }
  for (; i < n; ++i) keys[i] += col[i] * stride;
}

}  // namespace avx2
#endif

namespace {

Isa detect() {
#ifdef JTSMC_X86
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::avx2;
#endif
  return Isa::scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) {
  if (isa == Isa::scalar) return true;
  return detect() == Isa::avx2;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void force_isa(Isa isa) { current().store(isa_supported(isa) ? isa : Isa::scalar); }

void reset_isa() { current().store(detect()); }

double dot(const double* a, const double* b, std::size_t n) {
#ifdef JTSMC_X86
  if (active_isa() == Isa::avx2) return avx2::dot(a, b, n);
#endif
  return scalar::dot(a, b, n);
}

double max_value(const double* x, std::size_t n) {
#ifdef JTSMC_X86
  if (active_isa() == Isa::avx2) return avx2::max_value(x, n);
#endif
  return scalar::max_value(x, n);
}

void accumulate_keys(std::uint32_t* keys, const std::uint32_t* col, std::uint32_t stride, std::size_t n) {
#ifdef JTSMC_X86
  if (active_isa() == Isa::avx2) return avx2::accumulate_keys(keys, col, stride, n);
#endif
  scalar::accumulate_keys(keys, col, stride, n);
}

}  // namespace jtsmc::simd
