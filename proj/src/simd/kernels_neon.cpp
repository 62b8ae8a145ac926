#include "kgalign/simd/kernels.hpp"

#if defined(__aarch64__) || defined(__ARM_NEON)

#include <arm_neon.h>

namespace kgalign::simd {

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc01 = vdupq_n_f64(0.0);
  float64x2_t acc23 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc01 = vaddq_f64(acc01, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    acc23 = vaddq_f64(acc23, vmulq_f64(vld1q_f64(x + i + 2), vld1q_f64(y + i + 2)));
  }
  const float64x2_t pair = vaddq_f64(acc01, acc23);
  double sum = vgetq_lane_f64(pair, 0) + vgetq_lane_f64(pair, 1);
  for (; i < n; ++i) sum = sum + x[i] * y[i];
  return sum;
}

void dot_many_neon(const double* query, const double* rows, std::size_t dim, std::size_t count,
                   double* out) {
  for (std::size_t r = 0; r < count; ++r) out[r] = dot_neon(query, rows + r * dim, dim);
}

}  // namespace kgalign::simd

#endif
