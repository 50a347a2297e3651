// slu/featurizer.cpp

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

#include "slu/featurizer.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "slu/fft.hpp"

namespace slu {

int stft_frame_count(std::size_t num_samples, int win, int hop) {
  SLU_CHECK(win >= 1 && hop >= 1, "window and hop must be positive");
  SLU_CHECK(num_samples >= static_cast<std::size_t>(win),
            "utterance too short: ", num_samples, " samples < window ", win);
  return 1 + static_cast<int>((num_samples - win) / hop);
}

Spectrogram compute_spectrogram(const AudioClip &clip, double frame_ms,
                                double hop_ms) {
  SLU_CHECK(!clip.samples.empty(), "empty clip: ", clip.id);
  SLU_CHECK(clip.sample_rate > 0, "bad sample rate for clip: ", clip.id);
  const int win =
      static_cast<int>(std::lround(clip.sample_rate * frame_ms / 1000.0));
  const int hop =
      static_cast<int>(std::lround(clip.sample_rate * hop_ms / 1000.0));
  const int t_frames = stft_frame_count(clip.samples.size(), win, hop);
  const int f_bins = win / 2 + 1;

  std::vector<double> hann(win);
  for (int n = 0; n < win; ++n)
    hann[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * n / win);

  Spectrogram spec;
  spec.frames = Tensor<double>({t_frames, f_bins});
  spec.frame_ms = frame_ms;
  spec.hop_ms = hop_ms;
  spec.id = clip.id;

  std::vector<double> windowed(win);
  for (int t = 0; t < t_frames; ++t) {
    const double *frame = clip.samples.data() + static_cast<std::size_t>(t) * hop;
    for (int n = 0; n < win; ++n) windowed[n] = frame[n] * hann[n];
    auto bins = rdft_onesided(windowed);
    for (int f = 0; f < f_bins; ++f)
      spec.frames(t, f) = std::log(kLogPowerFloor + std::norm(bins[f]));
  }
  return spec;
}

Spectrogram power_normalize(const Spectrogram &spec) {
  const int t_frames = spec.num_frames();
  const int f_bins = spec.num_bins();
  Spectrogram out = spec;
  for (int f = 0; f < f_bins; ++f) {
    double mean = 0.0;
    for (int t = 0; t < t_frames; ++t) mean += spec.frames(t, f);
    mean /= t_frames;
    double var = 0.0;
    for (int t = 0; t < t_frames; ++t) {
      double d = spec.frames(t, f) - mean;
      var += d * d;
    }
    var /= t_frames;
    if (var <= 0.0) {
      for (int t = 0; t < t_frames; ++t) out.frames(t, f) = 0.0;
    } else {
      double inv = 1.0 / std::sqrt(var);
      for (int t = 0; t < t_frames; ++t)
        out.frames(t, f) = (spec.frames(t, f) - mean) * inv;
    }
  }
  return out;
}

namespace {

uint32_t read_u32le(std::istream &in, const std::string &path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char *>(b), 4);
  SLU_CHECK(in.gcount() == 4, "truncated file: ", path);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

void write_u32le(std::ostream &out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>((v >> 8) & 0xFF),
                        static_cast<unsigned char>((v >> 16) & 0xFF),
                        static_cast<unsigned char>((v >> 24) & 0xFF)};
  out.write(reinterpret_cast<char *>(b), 4);
}

uint16_t read_u16le(std::istream &in, const std::string &path) {
  unsigned char b[2];
  in.read(reinterpret_cast<char *>(b), 2);
  SLU_CHECK(in.gcount() == 2, "truncated file: ", path);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

void write_u16le(std::ostream &out, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>((v >> 8) & 0xFF)};
  out.write(reinterpret_cast<char *>(b), 2);
}

}  // namespace

AudioClip read_wav(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  SLU_CHECK(in.good(), "cannot open WAV: ", path);
  char magic[4];
  in.read(magic, 4);
  SLU_CHECK(in.gcount() == 4 && std::memcmp(magic, "RIFF", 4) == 0,
            "not a RIFF file: ", path);
  read_u32le(in, path);  // riff size
  in.read(magic, 4);
  SLU_CHECK(in.gcount() == 4 && std::memcmp(magic, "WAVE", 4) == 0,
            "not a WAVE file: ", path);

  AudioClip clip;
  bool have_fmt = false, have_data = false;
  uint16_t channels = 0, bits = 0;
  while (in.peek() != EOF && !(have_fmt && have_data)) {
    char ck[4];
    in.read(ck, 4);
    if (in.gcount() != 4) break;
    uint32_t size = read_u32le(in, path);
    if (std::memcmp(ck, "fmt ", 4) == 0) {
      SLU_CHECK(size >= 16, "malformed fmt chunk: ", path);
      uint16_t format = read_u16le(in, path);
      channels = read_u16le(in, path);
      uint32_t rate = read_u32le(in, path);
      read_u32le(in, path);  // byte rate
      read_u16le(in, path);  // block align
      bits = read_u16le(in, path);
      SLU_CHECK(format == 1, "unsupported WAV format ", format,
                " (want PCM): ", path);
      SLU_CHECK(channels == 1, "unsupported channel count ", channels,
                " (want mono): ", path);
      SLU_CHECK(bits == 16, "unsupported bit depth ", bits,
                " (want 16): ", path);
      clip.sample_rate = static_cast<int>(rate);
      in.seekg(size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(ck, "data", 4) == 0) {
      SLU_CHECK(have_fmt, "data chunk before fmt chunk: ", path);
      std::size_t n = size / 2;
      clip.samples.resize(n);
      std::vector<char> raw(size);
      in.read(raw.data(), size);
      SLU_CHECK(static_cast<uint32_t>(in.gcount()) == size,
                "truncated data chunk: ", path);
      for (std::size_t i = 0; i < n; ++i) {
        int16_t s = static_cast<int16_t>(
            static_cast<unsigned char>(raw[2 * i]) |
            (static_cast<unsigned char>(raw[2 * i + 1]) << 8));
        clip.samples[i] = static_cast<double>(s) / 32768.0;
      }
      have_data = true;
    } else {
      // skip unknown chunk (word aligned)
      in.seekg(size + (size & 1), std::ios::cur);
    }
  }
  SLU_CHECK(have_fmt && have_data, "missing fmt/data chunk: ", path);
  SLU_CHECK(!clip.samples.empty(), "WAV contains no samples: ", path);
  return clip;
}

void write_wav(const std::string &path, const AudioClip &clip) {
  SLU_CHECK(clip.sample_rate > 0, "bad sample rate");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  SLU_CHECK(out.good(), "cannot open for writing: ", path);
  uint32_t data_size = static_cast<uint32_t>(clip.samples.size() * 2);
  out.write("RIFF", 4);
  write_u32le(out, 36 + data_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_u32le(out, 16);
  write_u16le(out, 1);  // PCM
  write_u16le(out, 1);  // mono
  write_u32le(out, static_cast<uint32_t>(clip.sample_rate));
  write_u32le(out, static_cast<uint32_t>(clip.sample_rate * 2));
  write_u16le(out, 2);
  write_u16le(out, 16);
  out.write("data", 4);
  write_u32le(out, data_size);
  for (double s : clip.samples) {
    double clamped = std::max(-1.0, std::min(1.0, s));
    int16_t q = static_cast<int16_t>(std::lround(clamped * 32767.0));
    write_u16le(out, static_cast<uint16_t>(q));
  }
  SLU_CHECK(out.good(), "write failed: ", path);
}

void write_features(const std::string &path, const Spectrogram &spec) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  SLU_CHECK(out.good(), "cannot open for writing: ", path);
  out.write("SLUF", 4);
  write_u32le(out, static_cast<uint32_t>(spec.num_frames()));
  write_u32le(out, static_cast<uint32_t>(spec.num_bins()));
  for (double v : spec.frames.data) {
    float f = static_cast<float>(v);
    char b[4];
    std::memcpy(b, &f, 4);
    out.write(b, 4);
  }
  SLU_CHECK(out.good(), "write failed: ", path);
}

Spectrogram read_features(const std::string &path, const std::string &id) {
  std::ifstream in(path, std::ios::binary);
  SLU_CHECK(in.good(), "cannot open features: ", path);
  char magic[4];
  in.read(magic, 4);
  SLU_CHECK(in.gcount() == 4 && std::memcmp(magic, "SLUF", 4) == 0,
            "bad feature file magic: ", path);
  uint32_t t_frames = read_u32le(in, path);
  uint32_t f_bins = read_u32le(in, path);
  SLU_CHECK(t_frames >= 1 && f_bins >= 1, "degenerate feature shape in ", path);
  Spectrogram spec;
  spec.id = id.empty() ? path : id;
  spec.frames = Tensor<double>({static_cast<int>(t_frames),
                                static_cast<int>(f_bins)});
  std::vector<char> raw(static_cast<std::size_t>(t_frames) * f_bins * 4);
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  SLU_CHECK(static_cast<std::size_t>(in.gcount()) == raw.size(),
            "truncated feature file: ", path);
  for (std::size_t i = 0; i < spec.frames.size(); ++i) {
    float f;
    std::memcpy(&f, raw.data() + 4 * i, 4);
    spec.frames.data[i] = static_cast<double>(f);
  }
  return spec;
}

}  // namespace slu
