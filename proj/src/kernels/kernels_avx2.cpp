// slu/kernels_avx2.cpp

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

#if defined(__x86_64__) || defined(__i386__)
#define SLU_X86 1
#include <immintrin.h>
#define SLU_TARGET_AVX2 __attribute__((target("avx2,fma")))
#else
#define SLU_X86 0
#endif

namespace slu {
namespace kernels {
namespace avx2 {

#if SLU_X86

bool compiled_in() { return true; }

// f32 ops use 8-lane FMA; f64 ops use 4-lane. Tails fall back to scalar
// arithmetic. FMA fuses the multiply-add, so results may differ from the
// scalar backend in the last ulps; equivalence tests bound that difference.

SLU_TARGET_AVX2 static void gemm_nn_f32(int m, int n, int k, const float *a,
                                        int lda, const float *b, int ldb,
                                        float *c, int ldc) {
  for (int i = 0; i < m; ++i) {
    float *crow = c + static_cast<std::size_t>(i) * ldc;
    for (int p = 0; p < k; ++p) {
      float aip = a[static_cast<std::size_t>(i) * lda + p];
      if (aip == 0.0f) continue;
      const float *brow = b + static_cast<std::size_t>(p) * ldb;
      __m256 va = _mm256_set1_ps(aip);
      int j = 0;
      for (; j + 8 <= n; j += 8) {
        __m256 vc = _mm256_loadu_ps(crow + j);
        vc = _mm256_fmadd_ps(va, _mm256_loadu_ps(brow + j), vc);
        _mm256_storeu_ps(crow + j, vc);
      }
      for (; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

SLU_TARGET_AVX2 static void gemm_nn_f64(int m, int n, int k, const double *a,
                                        int lda, const double *b, int ldb,
                                        double *c, int ldc) {
  for (int i = 0; i < m; ++i) {
    double *crow = c + static_cast<std::size_t>(i) * ldc;
    for (int p = 0; p < k; ++p) {
      double aip = a[static_cast<std::size_t>(i) * lda + p];
      if (aip == 0.0) continue;
      const double *brow = b + static_cast<std::size_t>(p) * ldb;
      __m256d va = _mm256_set1_pd(aip);
      int j = 0;
      for (; j + 4 <= n; j += 4) {
        __m256d vc = _mm256_loadu_pd(crow + j);
        vc = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j), vc);
        _mm256_storeu_pd(crow + j, vc);
      }
      for (; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

SLU_TARGET_AVX2 static void gemm_tn_f32(int m, int n, int k, const float *a,
                                        int lda, const float *b, int ldb,
                                        float *c, int ldc) {
  for (int p = 0; p < k; ++p) {
    const float *arow = a + static_cast<std::size_t>(p) * lda;
    const float *brow = b + static_cast<std::size_t>(p) * ldb;
    for (int i = 0; i < m; ++i) {
      float api = arow[i];
      if (api == 0.0f) continue;
      float *crow = c + static_cast<std::size_t>(i) * ldc;
      __m256 va = _mm256_set1_ps(api);
      int j = 0;
      for (; j + 8 <= n; j += 8) {
        __m256 vc = _mm256_loadu_ps(crow + j);
        vc = _mm256_fmadd_ps(va, _mm256_loadu_ps(brow + j), vc);
        _mm256_storeu_ps(crow + j, vc);
      }
      for (; j < n; ++j) crow[j] += api * brow[j];
    }
  }
}

SLU_TARGET_AVX2 static void gemm_tn_f64(int m, int n, int k, const double *a,
                                        int lda, const double *b, int ldb,
                                        double *c, int ldc) {
  for (int p = 0; p < k; ++p) {
    const double *arow = a + static_cast<std::size_t>(p) * lda;
    const double *brow = b + static_cast<std::size_t>(p) * ldb;
    for (int i = 0; i < m; ++i) {
      double api = arow[i];
      if (api == 0.0) continue;
      double *crow = c + static_cast<std::size_t>(i) * ldc;
      __m256d va = _mm256_set1_pd(api);
      int j = 0;
      for (; j + 4 <= n; j += 4) {
        __m256d vc = _mm256_loadu_pd(crow + j);
        vc = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j), vc);
        _mm256_storeu_pd(crow + j, vc);
      }
      for (; j < n; ++j) crow[j] += api * brow[j];
    }
  }
}

SLU_TARGET_AVX2 static float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_hadd_ps(lo, lo);
  lo = _mm_hadd_ps(lo, lo);
  return _mm_cvtss_f32(lo);
}

SLU_TARGET_AVX2 static double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

SLU_TARGET_AVX2 static void gemm_nt_f32(int m, int n, int k, const float *a,
                                        int lda, const float *b, int ldb,
                                        float *c, int ldc) {
  for (int i = 0; i < m; ++i) {
    const float *arow = a + static_cast<std::size_t>(i) * lda;
    float *crow = c + static_cast<std::size_t>(i) * ldc;
    for (int j = 0; j < n; ++j) {
      const float *brow = b + static_cast<std::size_t>(j) * ldb;
      __m256 vacc = _mm256_setzero_ps();
      int p = 0;
      for (; p + 8 <= k; p += 8)
        vacc = _mm256_fmadd_ps(_mm256_loadu_ps(arow + p),
                               _mm256_loadu_ps(brow + p), vacc);
      float acc = hsum(vacc);
      for (; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

SLU_TARGET_AVX2 static void gemm_nt_f64(int m, int n, int k, const double *a,
                                        int lda, const double *b, int ldb,
                                        double *c, int ldc) {
  for (int i = 0; i < m; ++i) {
    const double *arow = a + static_cast<std::size_t>(i) * lda;
    double *crow = c + static_cast<std::size_t>(i) * ldc;
    for (int j = 0; j < n; ++j) {
      const double *brow = b + static_cast<std::size_t>(j) * ldb;
      __m256d vacc = _mm256_setzero_pd();
      int p = 0;
      for (; p + 4 <= k; p += 4)
        vacc = _mm256_fmadd_pd(_mm256_loadu_pd(arow + p),
                               _mm256_loadu_pd(brow + p), vacc);
      double acc = hsum(vacc);
      for (; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

SLU_TARGET_AVX2 static float dot_f32(const float *x, const float *y, int n) {
  __m256 vacc = _mm256_setzero_ps();
  int i = 0;
  for (; i + 8 <= n; i += 8)
    vacc = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i),
                           vacc);
  float acc = hsum(vacc);
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

SLU_TARGET_AVX2 static double dot_f64(const double *x, const double *y,
                                      int n) {
  __m256d vacc = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4)
    vacc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i),
                           vacc);
  double acc = hsum(vacc);
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

SLU_TARGET_AVX2 static void axpy_f32(int n, float alpha, const float *x,
                                     float *y) {
  __m256 va = _mm256_set1_ps(alpha);
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 vy = _mm256_loadu_ps(y + i);
    vy = _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), vy);
    _mm256_storeu_ps(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

SLU_TARGET_AVX2 static void axpy_f64(int n, double alpha, const double *x,
                                     double *y) {
  __m256d va = _mm256_set1_pd(alpha);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

SLU_TARGET_AVX2 static double sum_squares_f32(const float *x, std::size_t n) {
  __m256d vacc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vx = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
    vacc = _mm256_fmadd_pd(vx, vx, vacc);
  }
  double acc = hsum(vacc);
  for (; i < n; ++i)
    acc += static_cast<double>(x[i]) * static_cast<double>(x[i]);
  return acc;
}

SLU_TARGET_AVX2 static double sum_squares_f64(const double *x, std::size_t n) {
  __m256d vacc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vx = _mm256_loadu_pd(x + i);
    vacc = _mm256_fmadd_pd(vx, vx, vacc);
  }
  double acc = hsum(vacc);
  for (; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

template <>
void gemm_nn<float>(int m, int n, int k, const float *a, int lda,
                    const float *b, int ldb, float *c, int ldc) {
  gemm_nn_f32(m, n, k, a, lda, b, ldb, c, ldc);
}
template <>
void gemm_nn<double>(int m, int n, int k, const double *a, int lda,
                     const double *b, int ldb, double *c, int ldc) {
  gemm_nn_f64(m, n, k, a, lda, b, ldb, c, ldc);
}
template <>
void gemm_tn<float>(int m, int n, int k, const float *a, int lda,
                    const float *b, int ldb, float *c, int ldc) {
  gemm_tn_f32(m, n, k, a, lda, b, ldb, c, ldc);
}
template <>
void gemm_tn<double>(int m, int n, int k, const double *a, int lda,
                     const double *b, int ldb, double *c, int ldc) {
  gemm_tn_f64(m, n, k, a, lda, b, ldb, c, ldc);
}
template <>
void gemm_nt<float>(int m, int n, int k, const float *a, int lda,
                    const float *b, int ldb, float *c, int ldc) {
  gemm_nt_f32(m, n, k, a, lda, b, ldb, c, ldc);
}
template <>
void gemm_nt<double>(int m, int n, int k, const double *a, int lda,
                     const double *b, int ldb, double *c, int ldc) {
  gemm_nt_f64(m, n, k, a, lda, b, ldb, c, ldc);
}
template <>
float dot<float>(const float *x, const float *y, int n) {
  return dot_f32(x, y, n);
}
template <>
double dot<double>(const double *x, const double *y, int n) {
  return dot_f64(x, y, n);
}
template <>
void axpy<float>(int n, float alpha, const float *x, float *y) {
  axpy_f32(n, alpha, x, y);
}
template <>
void axpy<double>(int n, double alpha, const double *x, double *y) {
  axpy_f64(n, alpha, x, y);
}
template <>
double sum_squares<float>(const float *x, std::size_t n) {
  return sum_squares_f32(x, n);
}
template <>
double sum_squares<double>(const double *x, std::size_t n) {
  return sum_squares_f64(x, n);
}

#else  // !SLU_X86

bool compiled_in() { return false; }

// Non-x86 builds route the avx2 namespace back to the reference kernels so
// the dispatcher stays branch-compatible.
template <typename Real>
void gemm_nn(int m, int n, int k, const Real *a, int lda, const Real *b,
             int ldb, Real *c, int ldc) {
  scalar::gemm_nn(m, n, k, a, lda, b, ldb, c, ldc);
}
template <typename Real>
void gemm_tn(int m, int n, int k, const Real *a, int lda, const Real *b,
             int ldb, Real *c, int ldc) {
  scalar::gemm_tn(m, n, k, a, lda, b, ldb, c, ldc);
}
template <typename Real>
void gemm_nt(int m, int n, int k, const Real *a, int lda, const Real *b,
             int ldb, Real *c, int ldc) {
  scalar::gemm_nt(m, n, k, a, lda, b, ldb, c, ldc);
}
template <typename Real>
Real dot(const Real *x, const Real *y, int n) {
  return scalar::dot(x, y, n);
}
template <typename Real>
void axpy(int n, Real alpha, const Real *x, Real *y) {
  scalar::axpy(n, alpha, x, y);
}
template <typename Real>
double sum_squares(const Real *x, std::size_t n) {
  return scalar::sum_squares(x, n);
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

#endif  // SLU_X86

}  // namespace avx2
}  // namespace kernels
}  // namespace slu
