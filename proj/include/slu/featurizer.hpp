// slu/featurizer.hpp

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

// Waveform -> log-power spectrogram features. 20ms Hann windows with 10ms
// hop by default; per-utterance, per-bin mean/variance normalization.

#ifndef SLU_FEATURIZER_HPP_
#define SLU_FEATURIZER_HPP_

#include <string>
#include <vector>

#include "slu/tensor.hpp"

namespace slu {

struct AudioClip {
  std::vector<double> samples;  // amplitude, dimensionless
  int sample_rate = 0;          // Hz
  std::string id;
};

struct Spectrogram {
  Tensor<double> frames;  // T x F, log power
  double frame_ms = 20.0;
  double hop_ms = 10.0;
  std::string id;

  int num_frames() const { return frames.shape[0]; }
  int num_bins() const { return frames.shape[1]; }
};

// Closed-form frame count: 1 + floor((len - win) / hop). Throws
// "utterance too short" if len < win.
int stft_frame_count(std::size_t num_samples, int win, int hop);

Spectrogram compute_spectrogram(const AudioClip &clip, double frame_ms = 20.0,
                                double hop_ms = 10.0);

// Per-bin mean 0 / variance 1 over the utterance; zero-variance bins map
// to 0. Idempotent.
Spectrogram power_normalize(const Spectrogram &spec);

// 16-bit PCM mono WAV.
AudioClip read_wav(const std::string &path);
void write_wav(const std::string &path, const AudioClip &clip);

// "SLUF" binary feature matrix: magic, u32 T, u32 F (little endian), then
// T*F float32 row-major.
void write_features(const std::string &path, const Spectrogram &spec);
Spectrogram read_features(const std::string &path, const std::string &id = "");

constexpr double kLogPowerFloor = 1e-10;

}  // namespace slu

#endif  // SLU_FEATURIZER_HPP_
