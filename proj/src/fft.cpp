// slu/fft.cpp

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

#include "slu/fft.hpp"

#include <cmath>

#include "slu/common.hpp"

namespace slu {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

void fft_pow2(std::vector<std::complex<double>> &a, bool inverse) {
  const std::size_t n = a.size();
  SLU_CHECK(is_pow2(n), "fft_pow2 size must be a power of two, got ", n);
  // bit reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        std::complex<double> u = a[i + j];
        std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto &x : a) x /= static_cast<double>(n);
}

std::vector<std::complex<double>> dft(
    const std::vector<std::complex<double>> &x) {
  const std::size_t n = x.size();
  SLU_CHECK(n >= 1, "dft of empty signal");
  if (is_pow2(n)) {
    auto a = x;
    fft_pow2(a, false);
    return a;
  }
  // Bluestein: X[k] = conj(w[k]) * (a ⊛ b)[k], a[j] = x[j]*conj(w[j]),
  // b[j] = w[j], w[j] = exp(i*pi*j^2/n).
  const std::size_t m = next_pow2(2 * n - 1);
  std::vector<std::complex<double>> w(n);
  for (std::size_t j = 0; j < n; ++j) {
    // j^2 mod 2n keeps the argument small for long signals
    uint64_t jj = (static_cast<uint64_t>(j) * j) % (2 * n);
    double ang = M_PI * static_cast<double>(jj) / static_cast<double>(n);
    w[j] = std::complex<double>(std::cos(ang), std::sin(ang));
  }
  std::vector<std::complex<double>> a(m, {0.0, 0.0}), b(m, {0.0, 0.0});
  for (std::size_t j = 0; j < n; ++j) a[j] = x[j] * std::conj(w[j]);
  b[0] = w[0];
  for (std::size_t j = 1; j < n; ++j) b[j] = b[m - j] = w[j];
  fft_pow2(a, false);
  fft_pow2(b, false);
  for (std::size_t j = 0; j < m; ++j) a[j] *= b[j];
  fft_pow2(a, true);
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = std::conj(w[k]) * a[k];
  return out;
}

std::vector<std::complex<double>> rdft_onesided(const std::vector<double> &x) {
  std::vector<std::complex<double>> cx(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) cx[i] = {x[i], 0.0};
  auto full = dft(cx);
  full.resize(x.size() / 2 + 1);
  return full;
}

}  // namespace slu
