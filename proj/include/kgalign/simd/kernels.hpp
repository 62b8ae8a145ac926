#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Dot-product kernels behind cosine retrieval.
//
// Every variant reproduces the scalar reference's reduction order exactly:
// four striped partial sums (lane j takes elements i with i % 4 == j over the
// largest multiple-of-4 prefix), combined as (s0 + s2) + (s1 + s3), then the
// remaining tail elements are added one at a time. No fused multiply-add.
// The variants are therefore bit-identical, not merely close.

namespace kgalign::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);

using DotFn = double (*)(const double* x, const double* y, std::size_t n);
/// out[r] = dot(query, rows + r * dim) for r in [0, count).
using DotManyFn = void (*)(const double* query, const double* rows, std::size_t dim,
                           std::size_t count, double* out);

double dot_scalar(const double* x, const double* y, std::size_t n);
void dot_many_scalar(const double* query, const double* rows, std::size_t dim,
                     std::size_t count, double* out);

#if defined(__x86_64__) || defined(_M_X64)
double dot_avx2(const double* x, const double* y, std::size_t n);
void dot_many_avx2(const double* query, const double* rows, std::size_t dim, std::size_t count,
                   double* out);
#endif

#if defined(__aarch64__) || defined(__ARM_NEON)
double dot_neon(const double* x, const double* y, std::size_t n);
void dot_many_neon(const double* query, const double* rows, std::size_t dim, std::size_t count,
                   double* out);
#endif

/// True when the variant is compiled in and the running CPU supports it.
bool isa_available(Isa isa);

/// Best available ISA, unless KGALIGN_ISA=scalar|avx2|neon pins one.
/// Resolved once on first use.
Isa active_isa();

DotFn dot_for(Isa isa);
DotManyFn dot_many_for(Isa isa);

inline double dot(std::span<const double> x, std::span<const double> y) {
  return dot_for(active_isa())(x.data(), y.data(), x.size());
}

}  // namespace kgalign::simd
