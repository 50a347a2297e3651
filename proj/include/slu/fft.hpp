// slu/fft.hpp

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

#ifndef SLU_FFT_HPP_
#define SLU_FFT_HPP_

#include <complex>
#include <vector>

namespace slu {

// In-place radix-2 FFT; size must be a power of two.
void fft_pow2(std::vector<std::complex<double>> &a, bool inverse);

// DFT of arbitrary length (Bluestein for non-power-of-two sizes).
std::vector<std::complex<double>> dft(const std::vector<std::complex<double>> &x);

// One-sided spectrum (bins 0..n/2) of a real signal.
std::vector<std::complex<double>> rdft_onesided(const std::vector<double> &x);

}  // namespace slu

#endif  // SLU_FFT_HPP_
