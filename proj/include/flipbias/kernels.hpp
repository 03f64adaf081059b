#pragma once

#include <cstddef>

// Data-parallel inner-loop kernels with a runtime-selected SIMD backend.
//
// Every backend evaluates the same blocked arithmetic order: four independent
// accumulators over stride-4 blocks, lanes combined as (acc0+acc2) +
// (acc1+acc3), a sequential scalar tail, and no fused multiply-add. Scalar,
// AVX2 and NEON therefore produce bit-identical results, and the backend in
// use never changes program output. The equivalence tests assert exact
// equality, not a tolerance.

namespace flipbias::kernels {

enum class Backend { scalar, avx2, neon };

/// Dot product of a[0..n) and b[0..n).
double dot(const double* a, const double* b, std::size_t n);

/// y[i] += alpha * x[i] for i in [0, n).
void axpy(double alpha, const double* x, double* y, std::size_t n);

Backend active_backend();
const char* backend_name(Backend backend);

/// Forces a backend: "scalar", "avx2", "neon" or "auto". Throws
/// std::invalid_argument for unknown names and std::runtime_error when the
/// backend is not available on this machine. Intended for startup or tests;
/// not synchronized against concurrent kernel calls.
void select_backend(const char* name);

namespace detail {
double dot_scalar(const double* a, const double* b, std::size_t n);
void axpy_scalar(double alpha, const double* x, double* y, std::size_t n);
#if defined(FLIPBIAS_HAVE_AVX2)
double dot_avx2(const double* a, const double* b, std::size_t n);
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n);
bool cpu_has_avx2();
#endif
#if defined(FLIPBIAS_HAVE_NEON)
double dot_neon(const double* a, const double* b, std::size_t n);
void axpy_neon(double alpha, const double* x, double* y, std::size_t n);
#endif
}  // namespace detail

}  // namespace flipbias::kernels
