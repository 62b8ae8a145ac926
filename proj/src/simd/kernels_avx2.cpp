#include "kgalign/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace kgalign::simd {

__attribute__((target("avx2"))) double dot_avx2(const double* x, const double* y,
                                                std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mx = _mm256_loadu_pd(x + i);
    const __m256d my = _mm256_loadu_pd(y + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(mx, my));
  }
  // (s0 + s2, s1 + s3)
  const __m128d pair = _mm_add_pd(_mm256_castpd256_pd128(acc), _mm256_extractf128_pd(acc, 1));
  double sum = _mm_cvtsd_f64(pair) + _mm_cvtsd_f64(_mm_unpackhi_pd(pair, pair));
  for (; i < n; ++i) sum = sum + x[i] * y[i];
  return sum;
}

__attribute__((target("avx2"))) void dot_many_avx2(const double* query, const double* rows,
                                                   std::size_t dim, std::size_t count,
                                                   double* out) {
  for (std::size_t r = 0; r < count; ++r) out[r] = dot_avx2(query, rows + r * dim, dim);
}

}  // namespace kgalign::simd

#endif
