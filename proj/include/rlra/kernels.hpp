#pragma once

#include "rlra/types.hpp"

namespace rlra {
namespace kernels {

// The transposed Khatri-Rao product reduces to elementwise products of
// column pairs (matrices are column-major, so each product streams over
// contiguous memory). A scalar reference backend and an AVX2 backend are
// provided; both evaluate c[i] = a[i] * b[i] with one multiply per entry and
// therefore produce bitwise identical results. The backend is picked at
// runtime from CPU capabilities unless overridden.
enum class Backend { Auto, Scalar, Avx2 };

bool avx2_supported();

// Override the dispatch. Selecting Avx2 on a host without AVX2 throws.
void set_backend(Backend backend);

// The backend that will actually execute (Auto resolved).
Backend active_backend();

// c[i] = a[i] * b[i] for i < n, dispatched per active_backend().
void colwise_product(const double* a, const double* b, double* c, Index n);

namespace detail {
void colwise_product_scalar(const double* a, const double* b, double* c, Index n);
#if defined(__x86_64__) || defined(_M_X64)
void colwise_product_avx2(const double* a, const double* b, double* c, Index n);
#endif
}  // namespace detail

}  // namespace kernels

// Transposed Khatri-Rao product: row i of the result is the Kronecker product
// of row i of A with row i of C, so out(i, a*s + c) = A(i, a) * C(i, c) for
// A m-by-r and C m-by-s.
Matrix kt_product(const Matrix& A, const Matrix& C);
void kt_product_into(const Matrix& A, const Matrix& C, Matrix& out);

}  // namespace rlra
