// slu/kernels.hpp

// Copyright 2026  SLU toolkit authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Dense inner loops used by the network and featurizer. Every kernel has a
// scalar reference implementation and, on x86, an AVX2+FMA variant; the
// active backend is picked once at startup (SLU_KERNELS=scalar|avx2
// overrides). All matrices are row-major with explicit leading dimensions.

#ifndef SLU_KERNELS_HPP_
#define SLU_KERNELS_HPP_

#include <cstddef>

namespace slu {
namespace kernels {

enum class Backend { kScalar, kAvx2 };

Backend active_backend();
const char *backend_name();
bool cpu_supports_avx2();

namespace scalar {
// c[m x n] += a[m x k] * b[k x n]
template <typename Real>
void gemm_nn(int m, int n, int k, const Real *a, int lda, const Real *b,
             int ldb, Real *c, int ldc);
// c[m x n] += a[k x m]^T * b[k x n]
template <typename Real>
void gemm_tn(int m, int n, int k, const Real *a, int lda, const Real *b,
             int ldb, Real *c, int ldc);
// c[m x n] += a[m x k] * b[n x k]^T
template <typename Real>
void gemm_nt(int m, int n, int k, const Real *a, int lda, const Real *b,
             int ldb, Real *c, int ldc);
template <typename Real>
Real dot(const Real *x, const Real *y, int n);
// y += alpha * x
template <typename Real>
void axpy(int n, Real alpha, const Real *x, Real *y);
template <typename Real>
double sum_squares(const Real *x, std::size_t n);
}  // namespace scalar

namespace avx2 {
template <typename Real>
void gemm_nn(int m, int n, int k, const Real *a, int lda, const Real *b,
             int ldb, Real *c, int ldc);
template <typename Real>
void gemm_tn(int m, int n, int k, const Real *a, int lda, const Real *b,
             int ldb, Real *c, int ldc);
template <typename Real>
void gemm_nt(int m, int n, int k, const Real *a, int lda, const Real *b,
             int ldb, Real *c, int ldc);
template <typename Real>
Real dot(const Real *x, const Real *y, int n);
template <typename Real>
void axpy(int n, Real alpha, const Real *x, Real *y);
template <typename Real>
double sum_squares(const Real *x, std::size_t n);
bool compiled_in();
}  // namespace avx2

template <typename Real>
void gemm_nn(int m, int n, int k, const Real *a, int lda, const Real *b,
             int ldb, Real *c, int ldc) {
  if (active_backend() == Backend::kAvx2)
    avx2::gemm_nn(m, n, k, a, lda, b, ldb, c, ldc);
  else
    scalar::gemm_nn(m, n, k, a, lda, b, ldb, c, ldc);
}

template <typename Real>
void gemm_tn(int m, int n, int k, const Real *a, int lda, const Real *b,
             int ldb, Real *c, int ldc) {
  if (active_backend() == Backend::kAvx2)
    avx2::gemm_tn(m, n, k, a, lda, b, ldb, c, ldc);
  else
    scalar::gemm_tn(m, n, k, a, lda, b, ldb, c, ldc);
}

template <typename Real>
void gemm_nt(int m, int n, int k, const Real *a, int lda, const Real *b,
             int ldb, Real *c, int ldc) {
  if (active_backend() == Backend::kAvx2)
    avx2::gemm_nt(m, n, k, a, lda, b, ldb, c, ldc);
  else
    scalar::gemm_nt(m, n, k, a, lda, b, ldb, c, ldc);
}

template <typename Real>
Real dot(const Real *x, const Real *y, int n) {
  return active_backend() == Backend::kAvx2 ? avx2::dot(x, y, n)
                                            : scalar::dot(x, y, n);
}

template <typename Real>
void axpy(int n, Real alpha, const Real *x, Real *y) {
  if (active_backend() == Backend::kAvx2)
    avx2::axpy(n, alpha, x, y);
  else
    scalar::axpy(n, alpha, x, y);
}

template <typename Real>
double sum_squares(const Real *x, std::size_t n) {
  return active_backend() == Backend::kAvx2 ? avx2::sum_squares(x, n)
                                            : scalar::sum_squares(x, n);
}

}  // namespace kernels
}  // namespace slu

#endif  // SLU_KERNELS_HPP_
