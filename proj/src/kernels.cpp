#include "flipbias/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace flipbias::kernels {

namespace detail {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 += a[i] * b[i];
    acc1 += a[i + 1] * b[i + 1];
    acc2 += a[i + 2] * b[i + 2];
    acc3 += a[i + 3] * b[i + 3];
  }
  double sum = (acc0 + acc2) + (acc1 + acc3);
  for (; i < n; ++i) {
    sum += a[i] * b[i];
  }
  return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    y[i] += alpha * x[i];
  }
}

#if defined(FLIPBIAS_HAVE_AVX2)
bool cpu_has_avx2() { return __builtin_cpu_supports("avx2") != 0; }
#endif

}  // namespace detail

namespace {

struct Impl {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  Backend backend;
};

constexpr Impl kScalarImpl{detail::dot_scalar, detail::axpy_scalar,
                           Backend::scalar};

Impl pick(const std::string& name) {
  if (name == "scalar") {
    return kScalarImpl;
  }
#if defined(FLIPBIAS_HAVE_AVX2)
  if (name == "avx2") {
    if (!detail::cpu_has_avx2()) {
      throw std::runtime_error("kernels: avx2 requested but not supported by this CPU");
    }
    return Impl{detail::dot_avx2, detail::axpy_avx2, Backend::avx2};
  }
#endif
#if defined(FLIPBIAS_HAVE_NEON)
  if (name == "neon") {
    return Impl{detail::dot_neon, detail::axpy_neon, Backend::neon};
  }
#endif
  if (name == "auto") {
#if defined(FLIPBIAS_HAVE_AVX2)
    if (detail::cpu_has_avx2()) {
      return Impl{detail::dot_avx2, detail::axpy_avx2, Backend::avx2};
    }
#endif
#if defined(FLIPBIAS_HAVE_NEON)
    return Impl{detail::dot_neon, detail::axpy_neon, Backend::neon};
#endif
    return kScalarImpl;
  }
  if (name == "avx2" || name == "neon") {
    throw std::runtime_error("kernels: backend '" + name + "' not compiled into this build");
  }
  throw std::invalid_argument("kernels: unknown backend '" + name + "'");
}

Impl& impl() {
  static Impl current = [] {
    const char* env = std::getenv("FLIPBIAS_KERNELS");
    return pick(env != nullptr ? env : "auto");
  }();
  return current;
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  return impl().dot(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  impl().axpy(alpha, x, y, n);
}

Backend active_backend() { return impl().backend; }

const char* backend_name(Backend backend) {
  switch (backend) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
    case Backend::neon:
      return "neon";
  }
  return "unknown";
}

void select_backend(const char* name) { impl() = pick(name); }

}  // namespace flipbias::kernels
