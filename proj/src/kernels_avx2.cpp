// AVX2 backend for the columnwise product kernel. This translation unit is
// the only one compiled with -mavx2; callers reach it through the runtime
// dispatch in kernels.cpp. Plain multiplies only (no FMA), so results match
// the scalar backend bitwise.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "rlra/kernels.hpp"

namespace rlra {
namespace kernels {
namespace detail {

void colwise_product_avx2(const double* a, const double* b, double* c, Index n) {
  Index i = 0;
  for (; i + 16 <= n; i += 16) {
    __m256d a0 = _mm256_loadu_pd(a + i);
    __m256d a1 = _mm256_loadu_pd(a + i + 4);
    __m256d a2 = _mm256_loadu_pd(a + i + 8);
    __m256d a3 = _mm256_loadu_pd(a + i + 12);
    __m256d b0 = _mm256_loadu_pd(b + i);
    __m256d b1 = _mm256_loadu_pd(b + i + 4);
    __m256d b2 = _mm256_loadu_pd(b + i + 8);
    __m256d b3 = _mm256_loadu_pd(b + i + 12);
    _mm256_storeu_pd(c + i, _mm256_mul_pd(a0, b0));
    _mm256_storeu_pd(c + i + 4, _mm256_mul_pd(a1, b1));
    _mm256_storeu_pd(c + i + 8, _mm256_mul_pd(a2, b2));
    _mm256_storeu_pd(c + i + 12, _mm256_mul_pd(a3, b3));
  }
  for (; i + 4 <= n; i += 4) {
    __m256d av = _mm256_loadu_pd(a + i);
    __m256d bv = _mm256_loadu_pd(b + i);
    _mm256_storeu_pd(c + i, _mm256_mul_pd(av, bv));
  }
  for (; i < n; ++i) c[i] = a[i] * b[i];  // scalar tail
}

}  // namespace detail
}  // namespace kernels
}  // namespace rlra

#endif  // x86_64
