// slu/kernels_scalar.cpp

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

#include "slu/kernels.hpp"

namespace slu {
namespace kernels {
namespace scalar {

// Reference kernels. The i/k/j loop order matches the AVX2 variants so the
// two backends only differ by vectorization, not by accumulation structure.

template <typename Real>
void gemm_nn(int m, int n, int k, const Real *a, int lda, const Real *b,
             int ldb, Real *c, int ldc) {
  for (int i = 0; i < m; ++i) {
    Real *crow = c + static_cast<std::size_t>(i) * ldc;
    for (int p = 0; p < k; ++p) {
      Real aip = a[static_cast<std::size_t>(i) * lda + p];
      if (aip == Real(0)) continue;
      const Real *brow = b + static_cast<std::size_t>(p) * ldb;
      for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

template <typename Real>
void gemm_tn(int m, int n, int k, const Real *a, int lda, const Real *b,
             int ldb, Real *c, int ldc) {
  for (int p = 0; p < k; ++p) {
    const Real *arow = a + static_cast<std::size_t>(p) * lda;
    const Real *brow = b + static_cast<std::size_t>(p) * ldb;
    for (int i = 0; i < m; ++i) {
      Real api = arow[i];
      if (api == Real(0)) continue;
      Real *crow = c + static_cast<std::size_t>(i) * ldc;
      for (int j = 0; j < n; ++j) crow[j] += api * brow[j];
    }
  }
}

template <typename Real>
void gemm_nt(int m, int n, int k, const Real *a, int lda, const Real *b,
             int ldb, Real *c, int ldc) {
  for (int i = 0; i < m; ++i) {
    const Real *arow = a + static_cast<std::size_t>(i) * lda;
    Real *crow = c + static_cast<std::size_t>(i) * ldc;
    for (int j = 0; j < n; ++j) {
      const Real *brow = b + static_cast<std::size_t>(j) * ldb;
      Real acc = Real(0);
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

template <typename Real>
Real dot(const Real *x, const Real *y, int n) {
  Real acc = Real(0);
  for (int i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

template <typename Real>
void axpy(int n, Real alpha, const Real *x, Real *y) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename Real>
double sum_squares(const Real *x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    acc += static_cast<double>(x[i]) * static_cast<double>(x[i]);
  return acc;
}

template void gemm_nn<float>(int, int, int, const float *, int, const float *,
                             int, float *, int);
template void gemm_nn<double>(int, int, int, const double *, int,
                              const double *, int, double *, int);
template void gemm_tn<float>(int, int, int, const float *, int, const float *,
                             int, float *, int);
template void gemm_tn<double>(int, int, int, const double *, int,
                              const double *, int, double *, int);
template void gemm_nt<float>(int, int, int, const float *, int, const float *,
                             int, float *, int);
template void gemm_nt<double>(int, int, int, const double *, int,
                              const double *, int, double *, int);
template float dot<float>(const float *, const float *, int);
template double dot<double>(const double *, const double *, int);
template void axpy<float>(int, float, const float *, float *);
template void axpy<double>(int, double, const double *, double *);
template double sum_squares<float>(const float *, std::size_t);
template double sum_squares<double>(const double *, std::size_t);

}  // namespace scalar
}  // namespace kernels
}  // namespace slu
