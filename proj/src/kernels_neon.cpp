// NEON kernel variants (aarch64). Two 2-lane registers cover the same
// stride-4 blocks as the AVX2 path; vaddq_f64(acc01, acc23) yields
// [acc0+acc2, acc1+acc3], so the final combine matches the scalar reference
// bit for bit. Multiplies and adds stay separate (no vfma).

#include <arm_neon.h>

#include "flipbias/kernels.hpp"

namespace flipbias::kernels::detail {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc01 = vdupq_n_f64(0.0);
  float64x2_t acc23 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc01 = vaddq_f64(acc01, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    acc23 = vaddq_f64(acc23, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
  }
  const float64x2_t pair = vaddq_f64(acc01, acc23);  // [acc0+acc2, acc1+acc3]
  double sum = vgetq_lane_f64(pair, 0) + vgetq_lane_f64(pair, 1);
  for (; i < n; ++i) {
    sum += a[i] * b[i];
  }
  return sum;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t valpha = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(valpha, vld1q_f64(x + i))));
    vst1q_f64(y + i + 2,
              vaddq_f64(vld1q_f64(y + i + 2), vmulq_f64(valpha, vld1q_f64(x + i + 2))));
  }
  for (; i < n; ++i) {
    y[i] += alpha * x[i];
  }
}

}  // namespace flipbias::kernels::detail
