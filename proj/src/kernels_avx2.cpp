// AVX2 kernel variants. Compiled with -mavx2 only; callers reach these
// through the runtime dispatcher after a CPU check. Multiplies and adds stay
// separate (no FMA) and the reduction combines lanes as (acc0+acc2) +
// (acc1+acc3), matching the scalar reference bit for bit.

#include <immintrin.h>

#include "flipbias/kernels.hpp"

namespace flipbias::kernels::detail {

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va = _mm256_loadu_pd(a + i);
    const __m256d vb = _mm256_loadu_pd(b + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(va, vb));
  }
  const __m128d lo = _mm256_castpd256_pd128(acc);     // [acc0, acc1]
  const __m128d hi = _mm256_extractf128_pd(acc, 1);   // [acc2, acc3]
  const __m128d pair = _mm_add_pd(lo, hi);            // [acc0+acc2, acc1+acc3]
  double sum = _mm_cvtsd_f64(pair) + _mm_cvtsd_f64(_mm_unpackhi_pd(pair, pair));
  for (; i < n; ++i) {
    sum += a[i] * b[i];
  }
  return sum;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d valpha = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d vy = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(valpha, vx)));
  }
  for (; i < n; ++i) {
    y[i] += alpha * x[i];
  }
}

}  // namespace flipbias::kernels::detail
