#pragma once

#include <cstddef>
#include <cstdint>

// Small numeric kernels with a scalar reference and an AVX2 variant picked at
// runtime. Every variant must agree with the scalar one (exactly for integer
// and max kernels, to rounding for the floating-point reductions).
namespace jtsmc::simd {

enum class Isa { scalar, avx2 };

const char* isa_name(Isa isa);
bool isa_supported(Isa isa);
// Best supported variant unless overridden by force_isa.
Isa active_isa();
// Pin the dispatch target; used by equivalence tests and benchmarks.
void force_isa(Isa isa);
void reset_isa();

double dot(const double* a, const double* b, std::size_t n);
double max_value(const double* x, std::size_t n);
// keys[i] += col[i] * stride
void accumulate_keys(std::uint32_t* keys, const std::uint32_t* col, std::uint32_t stride, std::size_t n);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double max_value(const double* x, std::size_t n);
void accumulate_keys(std::uint32_t* keys, const std::uint32_t* col, std::uint32_t stride, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(__i386__)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double max_value(const double* x, std::size_t n);
void accumulate_keys(std::uint32_t* keys, const std::uint32_t* col, std::uint32_t stride, std::size_t n);
}  // namespace avx2
#endif

}  // namespace jtsmc::simd
