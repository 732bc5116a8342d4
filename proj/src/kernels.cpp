#include "rlra/kernels.hpp"

#include <atomic>

namespace rlra {
namespace kernels {

namespace detail {

void colwise_product_scalar(const double* a, const double* b, double* c, Index n) {
  for (Index i = 0; i < n; ++i) c[i] = a[i] * b[i];
}

}  // namespace detail

bool avx2_supported() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

namespace {

std::atomic<Backend> g_backend{Backend::Auto};

Backend resolve(Backend b) {
  if (b == Backend::Auto) return avx2_supported() ? Backend::Avx2 : Backend::Scalar;
  return b;
}

}  // namespace

void set_backend(Backend backend) {
  if (backend == Backend::Avx2 && !avx2_supported())
    throw Error("AVX2 kernel backend requested but the CPU does not support AVX2");
  g_backend.store(backend);
}

Backend active_backend() { return resolve(g_backend.load()); }

void colwise_product(const double* a, const double* b, double* c, Index n) {
#if defined(__x86_64__) || defined(_M_X64)
  if (active_backend() == Backend::Avx2) {
    detail::colwise_product_avx2(a, b, c, n);
    return;
  }
#endif
  detail::colwise_product_scalar(a, b, c, n);
}

}  // namespace kernels

void kt_product_into(const Matrix& A, const Matrix& C, Matrix& out) {
  RLRA_REQUIRE(A.rows() == C.rows(), "kt_product: row counts differ");
  const Index m = A.rows();
  const Index r = A.cols();
  const Index s = C.cols();
  out.resize(m, r * s);
  for (Index a = 0; a < r; ++a)
    for (Index c = 0; c < s; ++c)
      kernels::colwise_product(A.col(a).data(), C.col(c).data(),
                               out.col(a * s + c).data(), m);
}

Matrix kt_product(const Matrix& A, const Matrix& C) {
  Matrix out;
  kt_product_into(A, C, out);
  return out;
}

}  // namespace rlra
