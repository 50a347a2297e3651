// slu/net.cpp

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

#include "slu/net.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "slu/kernels.hpp"

namespace slu {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_dbl(const std::string &s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  SLU_CHECK(res.ec == std::errc() && res.ptr == s.data() + s.size(),
            "bad float in config: ", s);
  return v;
}

int conv_out_dim(int in, int kernel, int stride) {
  int pad = (kernel - 1) / 2;
  return (in + 2 * pad - kernel) / stride + 1;
}

}  // namespace

ModelConfig ModelConfig::paper_default(int input_features, int alphabet_size) {
  ModelConfig cfg;
  cfg.input_features = input_features;
  cfg.convs = {{32, 11, 41, 2, 2}, {32, 11, 21, 1, 2}};
  cfg.rnn_layers = 5;
  cfg.rnn_hidden = 512;
  cfg.fc_size = 512;
  cfg.alphabet_size = alphabet_size;
  return cfg;
}

void ModelConfig::validate() const {
  SLU_CHECK(input_features >= 1, "input_features must be >= 1");
  SLU_CHECK(alphabet_size >= 2, "alphabet_size must be >= 2 (blank + symbol)");
  SLU_CHECK(rnn_layers >= 0 && rnn_hidden >= 1 && fc_size >= 1,
            "bad recurrent/fc sizes");
  int f = input_features;
  for (const auto &c : convs) {
    SLU_CHECK(c.out_channels >= 1 && c.kernel_t >= 1 && c.kernel_f >= 1 &&
                  c.stride_t >= 1 && c.stride_f >= 1,
              "bad conv spec");
    SLU_CHECK(c.kernel_t % 2 == 1 && c.kernel_f % 2 == 1,
              "conv kernels must be odd for same-style padding");
    f = conv_out_dim(f, c.kernel_f, c.stride_f);
    SLU_CHECK(f >= 1, "conv stack collapses the frequency axis");
  }
}

int ModelConfig::conv_out_time(int t_in) const {
  int t = t_in;
  for (const auto &c : convs) t = conv_out_dim(t, c.kernel_t, c.stride_t);
  return t;
}

int ModelConfig::conv_out_freq() const {
  int f = input_features;
  for (const auto &c : convs) f = conv_out_dim(f, c.kernel_f, c.stride_f);
  return f;
}

int ModelConfig::conv_out_features() const {
  if (convs.empty()) return input_features;
  return convs.back().out_channels * conv_out_freq();
}

int ModelConfig::rnn_input_size() const { return conv_out_features(); }

int ModelConfig::head_input_size() const { return fc_size; }

std::string ModelConfig::canonical() const {
  std::ostringstream os;
  os << "input_features=" << input_features << ";convs=";
  for (std::size_t i = 0; i < convs.size(); ++i) {
    if (i) os << ",";
    const auto &c = convs[i];
    os << c.out_channels << "x" << c.kernel_t << "x" << c.kernel_f << "x"
       << c.stride_t << "x" << c.stride_f;
  }
  os << ";rnn_layers=" << rnn_layers << ";rnn_hidden=" << rnn_hidden
     << ";fc_size=" << fc_size << ";alphabet_size=" << alphabet_size
     << ";batch_norm=" << (batch_norm ? 1 : 0)
     << ";act_clip=" << fmt_double(act_clip)
     << ";bn_momentum=" << fmt_double(bn_momentum)
     << ";bn_epsilon=" << fmt_double(bn_epsilon);
  return os.str();
}

uint64_t ModelConfig::digest() const { return fnv1a64(canonical()); }

ModelConfig ModelConfig::from_canonical(const std::string &text) {
  ModelConfig cfg;
  std::istringstream is(text);
  std::string field;
  while (std::getline(is, field, ';')) {
    auto eq = field.find('=');
    SLU_CHECK(eq != std::string::npos, "bad config field: ", field);
    std::string key = field.substr(0, eq), val = field.substr(eq + 1);
    if (key == "input_features") {
      cfg.input_features = std::stoi(val);
    } else if (key == "convs") {
      cfg.convs.clear();
      if (!val.empty()) {
        std::istringstream cs(val);
        std::string one;
        while (std::getline(cs, one, ',')) {
          ConvSpec spec;
          int got = std::sscanf(one.c_str(), "%dx%dx%dx%dx%d",
                                &spec.out_channels, &spec.kernel_t,
                                &spec.kernel_f, &spec.stride_t, &spec.stride_f);
          SLU_CHECK(got == 5, "bad conv spec: ", one);
          cfg.convs.push_back(spec);
        }
      }
    } else if (key == "rnn_layers") {
      cfg.rnn_layers = std::stoi(val);
    } else if (key == "rnn_hidden") {
      cfg.rnn_hidden = std::stoi(val);
    } else if (key == "fc_size") {
      cfg.fc_size = std::stoi(val);
    } else if (key == "alphabet_size") {
      cfg.alphabet_size = std::stoi(val);
    } else if (key == "batch_norm") {
      cfg.batch_norm = val == "1";
    } else if (key == "act_clip") {
      cfg.act_clip = parse_dbl(val);
    } else if (key == "bn_momentum") {
      cfg.bn_momentum = parse_dbl(val);
    } else if (key == "bn_epsilon") {
      cfg.bn_epsilon = parse_dbl(val);
    } else {
      throw Error(str_cat("unknown config key: ", key));
    }
  }
  cfg.validate();
  return cfg;
}

void for_each_param_spec(
    const ModelConfig &cfg,
    const std::function<void(const std::string &, const std::vector<int> &,
                             bool)> &fn) {
  int c_in = 1;
  for (std::size_t i = 0; i < cfg.convs.size(); ++i) {
    const auto &c = cfg.convs[i];
    std::string base = str_cat("conv", i);
    fn(base + ".w", {c.out_channels, c_in, c.kernel_t, c.kernel_f}, true);
    fn(base + ".b", {c.out_channels}, true);
    c_in = c.out_channels;
  }
  int d_in = cfg.rnn_input_size();
  const int h = cfg.rnn_hidden;
  for (int l = 0; l < cfg.rnn_layers; ++l) {
    for (const char *dir : {"fwd", "bwd"}) {
      std::string base = str_cat("rnn", l, ".", dir);
      fn(base + ".w_in", {4 * h, d_in}, true);
      fn(base + ".w_rec", {4 * h, h}, true);
      fn(base + ".bias", {4 * h}, true);
      if (cfg.batch_norm) {
        fn(base + ".bn.gamma", {4 * h}, true);
        fn(base + ".bn.beta", {4 * h}, true);
        fn(base + ".bn.run_mean", {4 * h}, false);
        fn(base + ".bn.run_var", {4 * h}, false);
      }
    }
    d_in = h;
  }
  int fc_in = cfg.rnn_layers > 0 ? h : cfg.rnn_input_size();
  fn("fc.w", {cfg.fc_size, fc_in}, true);
  fn("fc.b", {cfg.fc_size}, true);
  fn("head.w", {cfg.alphabet_size, cfg.fc_size}, true);
  fn("head.b", {cfg.alphabet_size}, true);
}

// ---------------------------------------------------------------------------
// Net

template <typename Real>
Net<Real>::Net(const ModelConfig &cfg, uint64_t seed) : cfg_(cfg), rng_(seed) {
  cfg_.validate();
  allocate();
  init_all();
}

template <typename Real>
void Net<Real>::allocate() {
  order_.clear();
  values_.clear();
  grads_.clear();
  trainable_.clear();
  for_each_param_spec(cfg_, [&](const std::string &name,
                                const std::vector<int> &shape, bool train) {
    order_.push_back(name);
    values_.emplace_back(shape);
    grads_.emplace_back(shape);
    trainable_.push_back(train);
  });
}

namespace {
template <typename Real>
void init_tensor(const std::string &name, Tensor<Real> &t, Rng &rng) {
  auto ends_with = [&](const char *suffix) {
    std::string s(suffix);
    return name.size() >= s.size() &&
           name.compare(name.size() - s.size(), s.size(), s) == 0;
  };
  if (ends_with(".w") || ends_with(".w_in") || ends_with(".w_rec")) {
    std::size_t fan_in = 1;
    for (std::size_t d = 1; d < t.shape.size(); ++d)
      fan_in *= static_cast<std::size_t>(t.shape[d]);
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto &v : t.data)
      v = static_cast<Real>(rng.uniform(-bound, bound));
  } else if (ends_with(".bn.gamma") || ends_with(".bn.run_var")) {
    t.fill(Real(1));
  } else {
    t.zero();  // biases, bn beta, running mean
  }
}
}  // namespace

template <typename Real>
void Net<Real>::init_all() {
  for (std::size_t i = 0; i < order_.size(); ++i)
    init_tensor(order_[i], values_[i], rng_);
}

template <typename Real>
std::vector<ParamRef<Real>> Net<Real>::params() {
  std::vector<ParamRef<Real>> out;
  out.reserve(order_.size());
  for (std::size_t i = 0; i < order_.size(); ++i)
    out.push_back({order_[i], &values_[i],
                   trainable_[i] ? &grads_[i] : nullptr, trainable_[i]});
  return out;
}

template <typename Real>
void Net<Real>::zero_grads() {
  for (auto &g : grads_) g.zero();
}

template <typename Real>
Tensor<Real> *Net<Real>::tensor_by_name(const std::string &name) {
  for (std::size_t i = 0; i < order_.size(); ++i)
    if (order_[i] == name) return &values_[i];
  return nullptr;
}

template <typename Real>
void Net<Real>::reinit_head(int new_alphabet_size) {
  SLU_CHECK(new_alphabet_size >= 2, "alphabet_size must be >= 2");
  cfg_.alphabet_size = new_alphabet_size;
  auto *w = tensor_by_name("head.w");
  auto *b = tensor_by_name("head.b");
  *w = Tensor<Real>({new_alphabet_size, cfg_.fc_size});
  *b = Tensor<Real>({new_alphabet_size});
  init_tensor("head.w", *w, rng_);
  init_tensor("head.b", *b, rng_);
  for (std::size_t i = 0; i < order_.size(); ++i) {
    if (order_[i] == "head.w" || order_[i] == "head.b")
      grads_[i] = Tensor<Real>(values_[i].shape);
  }
}

// ---------------------------------------------------------------------------
// forward

namespace {

template <typename Real>
Real clip_relu(Real x, Real ceil) {
  if (x < Real(0)) return Real(0);
  return x > ceil ? ceil : x;
}

template <typename Real>
Real sigmoid(Real x) {
  return Real(1) / (Real(1) + std::exp(-x));
}

}  // namespace

template <typename Real>
typename Net<Real>::Forward Net<Real>::forward(
    const std::vector<const Tensor<Real> *> &features, RunMode mode,
    bool update_running) {
  const int batch = static_cast<int>(features.size());
  SLU_CHECK(batch >= 1, "empty batch");
  Forward ws;
  ws.mode = mode;
  ws.batch = batch;
  int t_max = 0;
  for (const auto *f : features) {
    SLU_CHECK(f->shape.size() == 2, "feature tensor must be T x F");
    SLU_CHECK(f->shape[1] == cfg_.input_features, "dimension mismatch: got F=",
              f->shape[1], ", model expects F=", cfg_.input_features);
    ws.in_lengths.push_back(f->shape[0]);
    t_max = std::max(t_max, f->shape[0]);
  }

  // ---- convolution stack, maps [B][C][T][F] -> [B][C'][T'][F']
  int c_in = 1, t_in = t_max, f_in = cfg_.input_features;
  std::vector<int> lens = ws.in_lengths;
  std::vector<Real> x(static_cast<std::size_t>(batch) * c_in * t_in * f_in,
                      Real(0));
  for (int b = 0; b < batch; ++b)
    for (int t = 0; t < ws.in_lengths[b]; ++t)
      for (int f = 0; f < f_in; ++f)
        x[((static_cast<std::size_t>(b) * c_in + 0) * t_in + t) * f_in + f] =
            features[b]->operator()(t, f);

  for (std::size_t li = 0; li < cfg_.convs.size(); ++li) {
    const auto &spec = cfg_.convs[li];
    const int c_out = spec.out_channels;
    const int kt = spec.kernel_t, kf = spec.kernel_f;
    const int st = spec.stride_t, sf = spec.stride_f;
    const int pt = (kt - 1) / 2, pf = (kf - 1) / 2;
    const int t_out = conv_out_dim(t_in, kt, st);
    const int f_out = conv_out_dim(f_in, kf, sf);
    const int k_cols = c_in * kt * kf;
    const int positions = t_out * f_out;

    typename Forward::ConvCache cache;
    cache.c_in = c_in;
    cache.t_in = t_in;
    cache.f_in = f_in;
    cache.c_out = c_out;
    cache.t_out = t_out;
    cache.f_out = f_out;
    cache.in_lens = lens;
    cache.input = std::move(x);
    cache.cols.assign(
        static_cast<std::size_t>(batch) * positions * k_cols, Real(0));
    cache.preact.assign(
        static_cast<std::size_t>(batch) * c_out * positions, Real(0));

    std::vector<int> out_lens(batch);
    for (int b = 0; b < batch; ++b)
      out_lens[b] = conv_out_dim(lens[b], kt, st);
    cache.out_lens = out_lens;

    const Tensor<Real> &w = *tensor_by_name(str_cat("conv", li, ".w"));
    const Tensor<Real> &bias = *tensor_by_name(str_cat("conv", li, ".b"));

    std::vector<Real> y(static_cast<std::size_t>(batch) * c_out * positions,
                        Real(0));
    for (int b = 0; b < batch; ++b) {
      Real *cols =
          cache.cols.data() + static_cast<std::size_t>(b) * positions * k_cols;
      const Real *xin =
          cache.input.data() + static_cast<std::size_t>(b) * c_in * t_in * f_in;
      for (int to = 0; to < t_out; ++to) {
        for (int fo = 0; fo < f_out; ++fo) {
          Real *row = cols + (static_cast<std::size_t>(to) * f_out + fo) * k_cols;
          int col = 0;
          for (int c = 0; c < c_in; ++c) {
            for (int dt = 0; dt < kt; ++dt) {
              int ti = to * st - pt + dt;
              for (int df = 0; df < kf; ++df, ++col) {
                int fi = fo * sf - pf + df;
                if (ti >= 0 && ti < t_in && fi >= 0 && fi < f_in)
                  row[col] =
                      xin[(static_cast<std::size_t>(c) * t_in + ti) * f_in + fi];
              }
            }
          }
        }
      }
      Real *yb = y.data() + static_cast<std::size_t>(b) * c_out * positions;
      kernels::gemm_nt(c_out, positions, k_cols, w.ptr(), k_cols, cols, k_cols,
                       yb, positions);
      Real *pre =
          cache.preact.data() + static_cast<std::size_t>(b) * c_out * positions;
      const Real ceil = static_cast<Real>(cfg_.act_clip);
      for (int c = 0; c < c_out; ++c) {
        for (int p = 0; p < positions; ++p) {
          int to = p / f_out;
          std::size_t idx = static_cast<std::size_t>(c) * positions + p;
          if (to >= out_lens[b]) {
            pre[idx] = Real(0);
            yb[idx] = Real(0);
            continue;
          }
          Real z = yb[idx] + bias(c);
          pre[idx] = z;
          yb[idx] = clip_relu(z, ceil);
        }
      }
    }
    ws.conv.push_back(std::move(cache));
    x = std::move(y);
    c_in = c_out;
    t_in = t_out;
    f_in = f_out;
    lens = out_lens;
  }

  ws.t_out = t_in;
  ws.out_lengths = lens;
  const int t_len = ws.t_out;

  // ---- reshape [B][C][T][F] -> time-major [T][B][C*F]
  const int d_rnn = cfg_.rnn_input_size();
  std::vector<Real> stream(
      static_cast<std::size_t>(t_len) * batch * d_rnn, Real(0));
  for (int b = 0; b < batch; ++b) {
    for (int c = 0; c < c_in; ++c) {
      for (int t = 0; t < lens[b]; ++t) {
        for (int f = 0; f < f_in; ++f) {
          stream[(static_cast<std::size_t>(t) * batch + b) * d_rnn + c * f_in +
                 f] =
              x[((static_cast<std::size_t>(b) * c_in + c) * t_in + t) * f_in +
                f];
        }
      }
    }
  }

  // ---- bidirectional LSTM stack
  const int h_size = cfg_.rnn_hidden;
  const int rows = t_len * batch;
  for (int l = 0; l < cfg_.rnn_layers; ++l) {
    const int d_in = l == 0 ? d_rnn : h_size;
    typename Forward::RnnCache cache;
    cache.input = std::move(stream);
    std::vector<Real> out(static_cast<std::size_t>(rows) * h_size, Real(0));

    for (int dir = 0; dir < 2; ++dir) {
      const char *dname = dir == 0 ? "fwd" : "bwd";
      const Tensor<Real> &w_in =
          *tensor_by_name(str_cat("rnn", l, ".", dname, ".w_in"));
      const Tensor<Real> &w_rec =
          *tensor_by_name(str_cat("rnn", l, ".", dname, ".w_rec"));
      const Tensor<Real> &bias =
          *tensor_by_name(str_cat("rnn", l, ".", dname, ".bias"));
      auto &dc = cache.dir[dir];
      const int g4 = 4 * h_size;

      dc.z_norm.assign(static_cast<std::size_t>(rows) * g4, Real(0));
      kernels::gemm_nt(rows, g4, d_in, cache.input.data(), d_in, w_in.ptr(),
                       d_in, dc.z_norm.data(), g4);

      if (cfg_.batch_norm) {
        dc.z_raw = dc.z_norm;
        const Tensor<Real> &gamma =
            *tensor_by_name(str_cat("rnn", l, ".", dname, ".bn.gamma"));
        const Tensor<Real> &beta =
            *tensor_by_name(str_cat("rnn", l, ".", dname, ".bn.beta"));
        Tensor<Real> &run_mean =
            *tensor_by_name(str_cat("rnn", l, ".", dname, ".bn.run_mean"));
        Tensor<Real> &run_var =
            *tensor_by_name(str_cat("rnn", l, ".", dname, ".bn.run_var"));
        dc.mean.assign(g4, 0.0);
        dc.var.assign(g4, 0.0);
        dc.inv_std.assign(g4, 0.0);

        long long valid = 0;
        for (int b = 0; b < batch; ++b) valid += ws.out_lengths[b];
        if (mode == RunMode::kTrain) {
          for (int b = 0; b < batch; ++b)
            for (int t = 0; t < ws.out_lengths[b]; ++t) {
              const Real *row =
                  dc.z_raw.data() +
                  (static_cast<std::size_t>(t) * batch + b) * g4;
              for (int j = 0; j < g4; ++j) dc.mean[j] += row[j];
            }
          for (int j = 0; j < g4; ++j)
            dc.mean[j] /= static_cast<double>(valid);
          for (int b = 0; b < batch; ++b)
            for (int t = 0; t < ws.out_lengths[b]; ++t) {
              const Real *row =
                  dc.z_raw.data() +
                  (static_cast<std::size_t>(t) * batch + b) * g4;
              for (int j = 0; j < g4; ++j) {
                double d = static_cast<double>(row[j]) - dc.mean[j];
                dc.var[j] += d * d;
              }
            }
          for (int j = 0; j < g4; ++j) {
            dc.var[j] /= static_cast<double>(valid);
            dc.inv_std[j] = 1.0 / std::sqrt(dc.var[j] + cfg_.bn_epsilon);
          }
          if (update_running) {
            for (int j = 0; j < g4; ++j) {
              run_mean(j) = static_cast<Real>(
                  (1.0 - cfg_.bn_momentum) * run_mean(j) +
                  cfg_.bn_momentum * dc.mean[j]);
              run_var(j) = static_cast<Real>(
                  (1.0 - cfg_.bn_momentum) * run_var(j) +
                  cfg_.bn_momentum * dc.var[j]);
            }
          }
        } else {
          for (int j = 0; j < g4; ++j) {
            dc.mean[j] = run_mean(j);
            dc.var[j] = run_var(j);
            dc.inv_std[j] = 1.0 / std::sqrt(dc.var[j] + cfg_.bn_epsilon);
          }
        }
        // normalize valid rows; padded rows stay zero
        std::fill(dc.z_norm.begin(), dc.z_norm.end(), Real(0));
        for (int b = 0; b < batch; ++b)
          for (int t = 0; t < ws.out_lengths[b]; ++t) {
            std::size_t off = (static_cast<std::size_t>(t) * batch + b) * g4;
            for (int j = 0; j < g4; ++j)
              dc.z_norm[off + j] = static_cast<Real>(
                  gamma(j) *
                      ((static_cast<double>(dc.z_raw[off + j]) - dc.mean[j]) *
                       dc.inv_std[j]) +
                  beta(j));
          }
      }

      dc.gates.assign(static_cast<std::size_t>(rows) * g4, Real(0));
      dc.cell.assign(static_cast<std::size_t>(rows) * h_size, Real(0));
      dc.tanh_c.assign(static_cast<std::size_t>(rows) * h_size, Real(0));
      dc.h.assign(static_cast<std::size_t>(rows) * h_size, Real(0));

      std::vector<Real> zeros(static_cast<std::size_t>(batch) * h_size,
                              Real(0));
      for (int step = 0; step < t_len; ++step) {
        const int t = dir == 0 ? step : t_len - 1 - step;
        const int t_prev = dir == 0 ? t - 1 : t + 1;
        Real *gates =
            dc.gates.data() + (static_cast<std::size_t>(t) * batch) * g4;
        const Real *z_norm =
            dc.z_norm.data() + (static_cast<std::size_t>(t) * batch) * g4;
        const Real *h_prev =
            (t_prev < 0 || t_prev >= t_len)
                ? zeros.data()
                : dc.h.data() + (static_cast<std::size_t>(t_prev) * batch) *
                                    h_size;
        const Real *c_prev =
            (t_prev < 0 || t_prev >= t_len)
                ? zeros.data()
                : dc.cell.data() + (static_cast<std::size_t>(t_prev) * batch) *
                                       h_size;
        std::memcpy(gates, z_norm,
                    static_cast<std::size_t>(batch) * g4 * sizeof(Real));
        kernels::gemm_nt(batch, g4, h_size, h_prev, h_size, w_rec.ptr(),
                         h_size, gates, g4);
        for (int b = 0; b < batch; ++b) {
          Real *g = gates + static_cast<std::size_t>(b) * g4;
          if (t >= ws.out_lengths[b]) {
            std::fill(g, g + g4, Real(0));
            continue;
          }
          Real *cell = dc.cell.data() +
                       (static_cast<std::size_t>(t) * batch + b) * h_size;
          Real *tc = dc.tanh_c.data() +
                     (static_cast<std::size_t>(t) * batch + b) * h_size;
          Real *hh =
              dc.h.data() + (static_cast<std::size_t>(t) * batch + b) * h_size;
          const Real *cp = c_prev + static_cast<std::size_t>(b) * h_size;
          for (int j = 0; j < h_size; ++j) {
            Real gi = sigmoid(g[j] + bias(j));
            Real gf = sigmoid(g[h_size + j] + bias(h_size + j));
            Real gg = std::tanh(g[2 * h_size + j] + bias(2 * h_size + j));
            Real go = sigmoid(g[3 * h_size + j] + bias(3 * h_size + j));
            g[j] = gi;
            g[h_size + j] = gf;
            g[2 * h_size + j] = gg;
            g[3 * h_size + j] = go;
            Real c_new = gf * cp[j] + gi * gg;
            cell[j] = c_new;
            Real tnh = std::tanh(c_new);
            tc[j] = tnh;
            hh[j] = go * tnh;
          }
        }
      }
      // sum the two directions
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += dc.h[i];
    }
    ws.rnn.push_back(std::move(cache));
    stream = std::move(out);
  }

  ws.rnn_output = std::move(stream);

  // ---- fully connected + head
  const int fc_in = cfg_.rnn_layers > 0 ? h_size : d_rnn;
  const int fc_size = cfg_.fc_size;
  const Tensor<Real> &fc_w = *tensor_by_name("fc.w");
  const Tensor<Real> &fc_b = *tensor_by_name("fc.b");
  ws.fc_pre.assign(static_cast<std::size_t>(rows) * fc_size, Real(0));
  kernels::gemm_nt(rows, fc_size, fc_in, ws.rnn_output.data(), fc_in,
                   fc_w.ptr(), fc_in, ws.fc_pre.data(), fc_size);
  ws.fc_out.assign(static_cast<std::size_t>(rows) * fc_size, Real(0));
  const Real ceil = static_cast<Real>(cfg_.act_clip);
  for (int b = 0; b < batch; ++b)
    for (int t = 0; t < ws.out_lengths[b]; ++t) {
      std::size_t off = (static_cast<std::size_t>(t) * batch + b) * fc_size;
      for (int j = 0; j < fc_size; ++j) {
        Real z = ws.fc_pre[off + j] + fc_b(j);
        ws.fc_pre[off + j] = z;
        ws.fc_out[off + j] = clip_relu(z, ceil);
      }
    }
  // zero fc_pre on padded rows so backward masks them
  for (int b = 0; b < batch; ++b)
    for (int t = ws.out_lengths[b]; t < t_len; ++t) {
      std::size_t off = (static_cast<std::size_t>(t) * batch + b) * fc_size;
      std::fill(ws.fc_pre.begin() + off, ws.fc_pre.begin() + off + fc_size,
                Real(0));
    }

  const int a_size = cfg_.alphabet_size;
  const Tensor<Real> &head_w = *tensor_by_name("head.w");
  const Tensor<Real> &head_b = *tensor_by_name("head.b");
  ws.logprobs = Tensor<Real>({t_len, batch, a_size});
  std::vector<Real> logits(static_cast<std::size_t>(rows) * a_size, Real(0));
  kernels::gemm_nt(rows, a_size, fc_size, ws.fc_out.data(), fc_size,
                   head_w.ptr(), fc_size, logits.data(), a_size);
  for (int b = 0; b < batch; ++b)
    for (int t = 0; t < ws.out_lengths[b]; ++t) {
      Real *row = logits.data() + (static_cast<std::size_t>(t) * batch + b) *
                                      a_size;
      Real m = row[0] + head_b(0);
      for (int k = 0; k < a_size; ++k) {
        row[k] += head_b(k);
        m = std::max(m, row[k]);
      }
      double lse = 0.0;
      for (int k = 0; k < a_size; ++k)
        lse += std::exp(static_cast<double>(row[k] - m));
      double log_z = static_cast<double>(m) + std::log(lse);
      Real *out_row =
          ws.logprobs.ptr() +
          (static_cast<std::size_t>(t) * batch + b) * a_size;
      for (int k = 0; k < a_size; ++k)
        out_row[k] = static_cast<Real>(static_cast<double>(row[k]) - log_z);
    }

  ws.valid = true;
  return ws;
}

// ---------------------------------------------------------------------------
// backward

template <typename Real>
void Net<Real>::backward(Forward &ws, const Tensor<Real> &dlogprobs) {
  SLU_CHECK(ws.valid, "backward called without a forward pass");
  SLU_CHECK(ws.mode == RunMode::kTrain,
            "backward requires a train-mode forward");
  SLU_CHECK(dlogprobs.shape == ws.logprobs.shape,
            "upstream gradient shape mismatch");
  const int batch = ws.batch;
  const int t_len = ws.t_out;
  const int rows = t_len * batch;
  const int a_size = cfg_.alphabet_size;
  const int fc_size = cfg_.fc_size;
  const int h_size = cfg_.rnn_hidden;
  const int d_rnn = cfg_.rnn_input_size();
  const int fc_in = cfg_.rnn_layers > 0 ? h_size : d_rnn;

  auto grad_of = [&](const std::string &name) -> Tensor<Real> & {
    for (std::size_t i = 0; i < order_.size(); ++i)
      if (order_[i] == name) return grads_[i];
    throw Error(str_cat("no such parameter: ", name));
  };

  // log-softmax backward: dlogit = dlp - softmax * sum(dlp)
  std::vector<Real> dlogits(static_cast<std::size_t>(rows) * a_size, Real(0));
  for (int b = 0; b < batch; ++b)
    for (int t = 0; t < ws.out_lengths[b]; ++t) {
      std::size_t off = (static_cast<std::size_t>(t) * batch + b) * a_size;
      double row_sum = 0.0;
      for (int k = 0; k < a_size; ++k)
        row_sum += static_cast<double>(dlogprobs.data[off + k]);
      for (int k = 0; k < a_size; ++k)
        dlogits[off + k] = static_cast<Real>(
            static_cast<double>(dlogprobs.data[off + k]) -
            std::exp(static_cast<double>(ws.logprobs.data[off + k])) *
                row_sum);
    }

  // head
  const Tensor<Real> &head_w = *tensor_by_name("head.w");
  kernels::gemm_tn(a_size, fc_size, rows, dlogits.data(), a_size,
                   ws.fc_out.data(), fc_size, grad_of("head.w").ptr(),
                   fc_size);
  {
    Tensor<Real> &db = grad_of("head.b");
    for (int r = 0; r < rows; ++r)
      for (int k = 0; k < a_size; ++k)
        db(k) += dlogits[static_cast<std::size_t>(r) * a_size + k];
  }
  std::vector<Real> dfc(static_cast<std::size_t>(rows) * fc_size, Real(0));
  kernels::gemm_nn(rows, fc_size, a_size, dlogits.data(), a_size, head_w.ptr(),
                   fc_size, dfc.data(), fc_size);

  // fc (clipped ReLU mask via cached pre-activations)
  const Real ceil = static_cast<Real>(cfg_.act_clip);
  for (std::size_t i = 0; i < dfc.size(); ++i) {
    Real z = ws.fc_pre[i];
    if (!(z > Real(0) && z < ceil)) dfc[i] = Real(0);
  }
  const Tensor<Real> &fc_w = *tensor_by_name("fc.w");
  kernels::gemm_tn(fc_size, fc_in, rows, dfc.data(), fc_size,
                   ws.rnn_output.data(), fc_in, grad_of("fc.w").ptr(), fc_in);
  {
    Tensor<Real> &db = grad_of("fc.b");
    for (int r = 0; r < rows; ++r)
      for (int j = 0; j < fc_size; ++j)
        db(j) += dfc[static_cast<std::size_t>(r) * fc_size + j];
  }
  std::vector<Real> dstream(static_cast<std::size_t>(rows) * fc_in, Real(0));
  kernels::gemm_nn(rows, fc_in, fc_size, dfc.data(), fc_size, fc_w.ptr(),
                   fc_in, dstream.data(), fc_in);

  // ---- LSTM stack, reverse order
  for (int l = cfg_.rnn_layers - 1; l >= 0; --l) {
    const auto &cache = ws.rnn[static_cast<std::size_t>(l)];
    const int d_in = l == 0 ? d_rnn : h_size;
    const int g4 = 4 * h_size;
    std::vector<Real> dinput(static_cast<std::size_t>(rows) * d_in, Real(0));

    for (int dir = 0; dir < 2; ++dir) {
      const char *dname = dir == 0 ? "fwd" : "bwd";
      const auto &dc = cache.dir[dir];
      const Tensor<Real> &w_in =
          *tensor_by_name(str_cat("rnn", l, ".", dname, ".w_in"));
      const Tensor<Real> &w_rec =
          *tensor_by_name(str_cat("rnn", l, ".", dname, ".w_rec"));
      Tensor<Real> &dw_in = grad_of(str_cat("rnn", l, ".", dname, ".w_in"));
      Tensor<Real> &dw_rec = grad_of(str_cat("rnn", l, ".", dname, ".w_rec"));
      Tensor<Real> &dbias = grad_of(str_cat("rnn", l, ".", dname, ".bias"));

      std::vector<Real> dz(static_cast<std::size_t>(rows) * g4, Real(0));
      std::vector<Real> dh_carry(static_cast<std::size_t>(batch) * h_size,
                                 Real(0));
      std::vector<Real> dc_carry(static_cast<std::size_t>(batch) * h_size,
                                 Real(0));
      std::vector<Real> zeros(static_cast<std::size_t>(batch) * h_size,
                              Real(0));
      std::vector<Real> da_step(static_cast<std::size_t>(batch) * g4,
                                Real(0));

      for (int step = t_len - 1; step >= 0; --step) {
        // reverse of this direction's forward processing order
        const int t = dir == 0 ? step : t_len - 1 - step;
        const int t_prev = dir == 0 ? t - 1 : t + 1;
        const Real *h_prev =
            (t_prev < 0 || t_prev >= t_len)
                ? zeros.data()
                : dc.h.data() +
                      (static_cast<std::size_t>(t_prev) * batch) * h_size;
        const Real *c_prev =
            (t_prev < 0 || t_prev >= t_len)
                ? zeros.data()
                : dc.cell.data() +
                      (static_cast<std::size_t>(t_prev) * batch) * h_size;
        std::fill(da_step.begin(), da_step.end(), Real(0));
        for (int b = 0; b < batch; ++b) {
          if (t >= ws.out_lengths[b]) continue;
          const Real *g =
              dc.gates.data() + (static_cast<std::size_t>(t) * batch + b) * g4;
          const Real *tc = dc.tanh_c.data() +
                           (static_cast<std::size_t>(t) * batch + b) * h_size;
          const Real *cp = c_prev + static_cast<std::size_t>(b) * h_size;
          Real *da = da_step.data() + static_cast<std::size_t>(b) * g4;
          Real *dhc = dh_carry.data() + static_cast<std::size_t>(b) * h_size;
          Real *dcc = dc_carry.data() + static_cast<std::size_t>(b) * h_size;
          const Real *dy =
              dstream.data() +
              (static_cast<std::size_t>(t) * batch + b) * h_size;
          for (int j = 0; j < h_size; ++j) {
            Real gi = g[j], gf = g[h_size + j], gg = g[2 * h_size + j],
                 go = g[3 * h_size + j];
            Real dh = dy[j] + dhc[j];
            Real d_o = dh * tc[j];
            Real d_c = dcc[j] + dh * go * (Real(1) - tc[j] * tc[j]);
            Real d_i = d_c * gg;
            Real d_g = d_c * gi;
            Real d_f = d_c * cp[j];
            dcc[j] = d_c * gf;  // flows to the previous step
            da[j] = d_i * gi * (Real(1) - gi);
            da[h_size + j] = d_f * gf * (Real(1) - gf);
            da[2 * h_size + j] = d_g * (Real(1) - gg * gg);
            da[3 * h_size + j] = d_o * go * (Real(1) - go);
          }
        }
        // bias gradient and recurrent weight gradient
        for (int b = 0; b < batch; ++b) {
          if (t >= ws.out_lengths[b]) continue;
          const Real *da = da_step.data() + static_cast<std::size_t>(b) * g4;
          for (int j = 0; j < g4; ++j) dbias(j) += da[j];
        }
        kernels::gemm_tn(g4, h_size, batch, da_step.data(), g4, h_prev,
                         h_size, dw_rec.ptr(), h_size);
        // gradient to the previous step's h
        std::fill(dh_carry.begin(), dh_carry.end(), Real(0));
        kernels::gemm_nn(batch, h_size, g4, da_step.data(), g4, w_rec.ptr(),
                         h_size, dh_carry.data(), h_size);
        // stash dz for the input-transform path
        std::memcpy(dz.data() + (static_cast<std::size_t>(t) * batch) * g4,
                    da_step.data(),
                    static_cast<std::size_t>(batch) * g4 * sizeof(Real));
      }

      // batch-norm backward (batch-statistics path) on valid rows
      if (cfg_.batch_norm) {
        const Tensor<Real> &gamma =
            *tensor_by_name(str_cat("rnn", l, ".", dname, ".bn.gamma"));
        Tensor<Real> &dgamma =
            grad_of(str_cat("rnn", l, ".", dname, ".bn.gamma"));
        Tensor<Real> &dbeta =
            grad_of(str_cat("rnn", l, ".", dname, ".bn.beta"));
        long long valid = 0;
        for (int b = 0; b < batch; ++b) valid += ws.out_lengths[b];
        std::vector<double> s1(g4, 0.0), s2(g4, 0.0);
        for (int b = 0; b < batch; ++b)
          for (int t = 0; t < ws.out_lengths[b]; ++t) {
            std::size_t off = (static_cast<std::size_t>(t) * batch + b) * g4;
            for (int j = 0; j < g4; ++j) {
              double xhat =
                  (static_cast<double>(dc.z_raw[off + j]) - dc.mean[j]) *
                  dc.inv_std[j];
              s1[j] += static_cast<double>(dz[off + j]);
              s2[j] += static_cast<double>(dz[off + j]) * xhat;
            }
          }
        for (int j = 0; j < g4; ++j) {
          dgamma(j) += static_cast<Real>(s2[j]);
          dbeta(j) += static_cast<Real>(s1[j]);
        }
        const double inv_m = 1.0 / static_cast<double>(valid);
        for (int b = 0; b < batch; ++b)
          for (int t = 0; t < ws.out_lengths[b]; ++t) {
            std::size_t off = (static_cast<std::size_t>(t) * batch + b) * g4;
            for (int j = 0; j < g4; ++j) {
              double xhat =
                  (static_cast<double>(dc.z_raw[off + j]) - dc.mean[j]) *
                  dc.inv_std[j];
              double v = static_cast<double>(gamma(j)) * dc.inv_std[j] *
                         (static_cast<double>(dz[off + j]) - s1[j] * inv_m -
                          xhat * s2[j] * inv_m);
              dz[off + j] = static_cast<Real>(v);
            }
          }
      }

      kernels::gemm_tn(g4, d_in, rows, dz.data(), g4, cache.input.data(),
                       d_in, dw_in.ptr(), d_in);
      kernels::gemm_nn(rows, d_in, g4, dz.data(), g4, w_in.ptr(), d_in,
                       dinput.data(), d_in);
    }
    dstream = std::move(dinput);
  }

  // ---- conv stack backward
  if (cfg_.convs.empty()) return;

  // reshape time-major gradient back to [B][C][T][F]
  const auto &last = ws.conv.back();
  std::vector<Real> dmap(static_cast<std::size_t>(batch) * last.c_out *
                             last.t_out * last.f_out,
                         Real(0));
  for (int b = 0; b < batch; ++b)
    for (int c = 0; c < last.c_out; ++c)
      for (int t = 0; t < ws.out_lengths[b]; ++t)
        for (int f = 0; f < last.f_out; ++f)
          dmap[((static_cast<std::size_t>(b) * last.c_out + c) * last.t_out +
                t) *
                   last.f_out +
               f] = dstream[(static_cast<std::size_t>(t) * batch + b) * d_rnn +
                            c * last.f_out + f];

  for (int li = static_cast<int>(cfg_.convs.size()) - 1; li >= 0; --li) {
    const auto &spec = cfg_.convs[static_cast<std::size_t>(li)];
    const auto &cache = ws.conv[static_cast<std::size_t>(li)];
    const int kt = spec.kernel_t, kf = spec.kernel_f;
    const int st = spec.stride_t, sf = spec.stride_f;
    const int pt = (kt - 1) / 2, pf = (kf - 1) / 2;
    const int k_cols = cache.c_in * kt * kf;
    const int positions = cache.t_out * cache.f_out;

    const Tensor<Real> &w = *tensor_by_name(str_cat("conv", li, ".w"));
    Tensor<Real> &dw = grad_of(str_cat("conv", li, ".w"));
    Tensor<Real> &db = grad_of(str_cat("conv", li, ".b"));

    std::vector<Real> dprev;
    if (li > 0)
      dprev.assign(static_cast<std::size_t>(batch) * cache.c_in * cache.t_in *
                       cache.f_in,
                   Real(0));

    std::vector<Real> dcols(static_cast<std::size_t>(positions) * k_cols,
                            Real(0));
    for (int b = 0; b < batch; ++b) {
      Real *dy = dmap.data() +
                 static_cast<std::size_t>(b) * cache.c_out * positions;
      const Real *pre = cache.preact.data() +
                        static_cast<std::size_t>(b) * cache.c_out * positions;
      const Real ceil2 = static_cast<Real>(cfg_.act_clip);
      for (int c = 0; c < cache.c_out; ++c)
        for (int p = 0; p < positions; ++p) {
          std::size_t idx = static_cast<std::size_t>(c) * positions + p;
          Real z = pre[idx];
          if (!(z > Real(0) && z < ceil2)) dy[idx] = Real(0);
          db(c) += dy[idx];
        }
      const Real *cols =
          cache.cols.data() + static_cast<std::size_t>(b) * positions * k_cols;
      kernels::gemm_nn(cache.c_out, k_cols, positions, dy, positions, cols,
                       k_cols, dw.ptr(), k_cols);
      if (li == 0) continue;
      std::fill(dcols.begin(), dcols.end(), Real(0));
      kernels::gemm_tn(positions, k_cols, cache.c_out, dy, positions, w.ptr(),
                       k_cols, dcols.data(), k_cols);
      Real *dx = dprev.data() + static_cast<std::size_t>(b) * cache.c_in *
                                    cache.t_in * cache.f_in;
      for (int to = 0; to < cache.t_out; ++to)
        for (int fo = 0; fo < cache.f_out; ++fo) {
          const Real *row =
              dcols.data() +
              (static_cast<std::size_t>(to) * cache.f_out + fo) * k_cols;
          int col = 0;
          for (int c = 0; c < cache.c_in; ++c)
            for (int dt = 0; dt < kt; ++dt) {
              int ti = to * st - pt + dt;
              for (int df = 0; df < kf; ++df, ++col) {
                int fi = fo * sf - pf + df;
                if (ti >= 0 && ti < cache.t_in && fi >= 0 && fi < cache.f_in)
                  dx[(static_cast<std::size_t>(c) * cache.t_in + ti) *
                         cache.f_in +
                     fi] += row[col];
              }
            }
        }
    }
    dmap = std::move(dprev);
  }
}

// ---------------------------------------------------------------------------
// checkpoints

template <typename Real>
Checkpoint Net<Real>::to_checkpoint(
    const std::string &alphabet_id,
    const std::vector<std::string> &lineage) const {
  Checkpoint ckpt;
  ckpt.config = cfg_;
  ckpt.alphabet_id = alphabet_id;
  ckpt.lineage = lineage;
  ckpt.rng_state = rng_.state();
  for (std::size_t i = 0; i < order_.size(); ++i)
    ckpt.tensors.emplace_back(order_[i], values_[i].template cast<float>());
  return ckpt;
}

template <typename Real>
Net<Real> Net<Real>::from_checkpoint(const Checkpoint &ckpt) {
  Net<Real> net(ckpt.config, /*seed=*/0);
  SLU_CHECK(ckpt.tensors.size() == net.order_.size(),
            "checkpoint tensor count mismatch");
  for (std::size_t i = 0; i < net.order_.size(); ++i) {
    SLU_CHECK(ckpt.tensors[i].first == net.order_[i],
              "checkpoint tensor order mismatch at ", net.order_[i]);
    SLU_CHECK(ckpt.tensors[i].second.shape == net.values_[i].shape,
              "incompatible tensor ", net.order_[i], ": checkpoint has ",
              shape_str(ckpt.tensors[i].second.shape), ", model expects ",
              shape_str(net.values_[i].shape));
    net.values_[i] = ckpt.tensors[i].second.template cast<Real>();
  }
  net.rng_.set_state(ckpt.rng_state);
  return net;
}

void check_checkpoint_config(const Checkpoint &ckpt, const ModelConfig &cfg) {
  std::vector<std::pair<std::string, std::vector<int>>> expected;
  for_each_param_spec(cfg, [&](const std::string &name,
                               const std::vector<int> &shape, bool) {
    expected.emplace_back(name, shape);
  });
  for (std::size_t i = 0; i < std::min(expected.size(), ckpt.tensors.size());
       ++i) {
    SLU_CHECK(ckpt.tensors[i].first == expected[i].first,
              "incompatible checkpoint: tensor #", i, " is ",
              ckpt.tensors[i].first, ", expected ", expected[i].first);
    SLU_CHECK(ckpt.tensors[i].second.shape == expected[i].second,
              "incompatible checkpoint: tensor ", expected[i].first, " has ",
              shape_str(ckpt.tensors[i].second.shape), ", expected ",
              shape_str(expected[i].second));
  }
  SLU_CHECK(ckpt.tensors.size() == expected.size(),
            "incompatible checkpoint: has ", ckpt.tensors.size(),
            " tensors, config expects ", expected.size());
}

Checkpoint reinit_head(const Checkpoint &ckpt, int new_alphabet_size,
                       const std::string &new_alphabet_id) {
  Checkpoint out = ckpt;
  out.config.alphabet_size = new_alphabet_size;
  out.alphabet_id = new_alphabet_id;
  Rng rng(ckpt.rng_state);
  for (auto &[name, tensor] : out.tensors) {
    if (name == "head.w") {
      tensor = Tensor<float>({new_alphabet_size, out.config.fc_size});
      init_tensor(name, tensor, rng);
    } else if (name == "head.b") {
      tensor = Tensor<float>({new_alphabet_size});
      init_tensor(name, tensor, rng);
    }
  }
  out.rng_state = rng.state();
  return out;
}

namespace {

constexpr uint32_t kCheckpointVersion = 1;

void put_u32(std::ostream &os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>((v >> 8) & 0xFF),
                        static_cast<unsigned char>((v >> 16) & 0xFF),
                        static_cast<unsigned char>((v >> 24) & 0xFF)};
  os.write(reinterpret_cast<char *>(b), 4);
}

void put_u64(std::ostream &os, uint64_t v) {
  put_u32(os, static_cast<uint32_t>(v & 0xFFFFFFFFULL));
  put_u32(os, static_cast<uint32_t>(v >> 32));
}

void put_str(std::ostream &os, const std::string &s) {
  put_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint32_t take_u32(std::istream &in, const std::string &path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char *>(b), 4);
  SLU_CHECK(in.gcount() == 4, "truncated checkpoint: ", path);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

uint64_t take_u64(std::istream &in, const std::string &path) {
  uint64_t lo = take_u32(in, path);
  uint64_t hi = take_u32(in, path);
  return lo | (hi << 32);
}

std::string take_str(std::istream &in, const std::string &path) {
  uint32_t n = take_u32(in, path);
  std::string s(n, '\0');
  in.read(s.data(), n);
  SLU_CHECK(static_cast<uint32_t>(in.gcount()) == n,
            "truncated checkpoint: ", path);
  return s;
}

}  // namespace

void save_checkpoint(const Checkpoint &ckpt, const std::string &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  SLU_CHECK(out.good(), "cannot open for writing: ", path);
  out.write("SLUC", 4);
  put_u32(out, kCheckpointVersion);
  std::string cfg = ckpt.config.canonical();
  put_u64(out, fnv1a64(cfg));
  put_str(out, cfg);
  put_str(out, ckpt.alphabet_id);
  put_u32(out, static_cast<uint32_t>(ckpt.lineage.size()));
  for (const auto &s : ckpt.lineage) put_str(out, s);
  for (uint64_t w : ckpt.rng_state) put_u64(out, w);
  put_u32(out, static_cast<uint32_t>(ckpt.tensors.size()));
  for (const auto &[name, tensor] : ckpt.tensors) {
    put_str(out, name);
    out.put(0);  // dtype f32
    put_u32(out, static_cast<uint32_t>(tensor.shape.size()));
    for (int d : tensor.shape) put_u32(out, static_cast<uint32_t>(d));
    out.write(reinterpret_cast<const char *>(tensor.data.data()),
              static_cast<std::streamsize>(tensor.data.size() * 4));
  }
  SLU_CHECK(out.good(), "write failed: ", path);
}

Checkpoint load_checkpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  SLU_CHECK(in.good(), "cannot open checkpoint: ", path);
  char magic[4];
  in.read(magic, 4);
  SLU_CHECK(in.gcount() == 4 && std::memcmp(magic, "SLUC", 4) == 0,
            "bad checkpoint magic: ", path);
  uint32_t version = take_u32(in, path);
  SLU_CHECK(version == kCheckpointVersion, "unsupported checkpoint version ",
            version, ": ", path);
  uint64_t digest = take_u64(in, path);
  std::string cfg_text = take_str(in, path);
  SLU_CHECK(fnv1a64(cfg_text) == digest,
            "checkpoint config digest mismatch (corrupt file?): ", path);
  Checkpoint ckpt;
  ckpt.config = ModelConfig::from_canonical(cfg_text);
  ckpt.alphabet_id = take_str(in, path);
  uint32_t lineage_n = take_u32(in, path);
  for (uint32_t i = 0; i < lineage_n; ++i)
    ckpt.lineage.push_back(take_str(in, path));
  for (auto &w : ckpt.rng_state) w = take_u64(in, path);
  uint32_t tensor_n = take_u32(in, path);
  for (uint32_t i = 0; i < tensor_n; ++i) {
    std::string name = take_str(in, path);
    int dtype = in.get();
    SLU_CHECK(dtype == 0, "unsupported tensor dtype in ", path);
    uint32_t rank = take_u32(in, path);
    std::vector<int> shape;
    for (uint32_t d = 0; d < rank; ++d)
      shape.push_back(static_cast<int>(take_u32(in, path)));
    Tensor<float> t(shape);
    in.read(reinterpret_cast<char *>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * 4));
    SLU_CHECK(static_cast<std::size_t>(in.gcount()) == t.data.size() * 4,
              "truncated checkpoint: ", path);
    ckpt.tensors.emplace_back(std::move(name), std::move(t));
  }
  in.peek();
  SLU_CHECK(in.eof(), "trailing bytes in checkpoint: ", path);
  return ckpt;
}

// ---------------------------------------------------------------------------
// optimizer

template <typename Real>
void SgdOptimizer<Real>::step(Net<Real> &net) {
  auto params = net.params();
  double norm_sq = 0.0;
  for (const auto &p : params)
    if (p.trainable)
      norm_sq += kernels::sum_squares(p.grad->ptr(), p.grad->size());
  double scale = 1.0;
  double norm = std::sqrt(norm_sq);
  if (norm > clip_norm && norm > 0.0) scale = clip_norm / norm;

  if (velocity_.empty()) {
    for (const auto &p : params)
      if (p.trainable)
        velocity_.emplace_back(p.name, Tensor<Real>(p.value->shape));
  }
  std::size_t vi = 0;
  for (const auto &p : params) {
    if (!p.trainable) continue;
    SLU_CHECK(vi < velocity_.size() && velocity_[vi].first == p.name,
              "optimizer state mismatch at ", p.name);
    Tensor<Real> &vel = velocity_[vi].second;
    if (vel.shape != p.value->shape) vel = Tensor<Real>(p.value->shape);
    SLU_CHECK(p.grad->shape == p.value->shape, "gradient shape mismatch at ",
              p.name);
    const Real mu = static_cast<Real>(momentum);
    const Real eta = static_cast<Real>(lr);
    for (std::size_t i = 0; i < vel.data.size(); ++i) {
      Real g = static_cast<Real>(scale) * p.grad->data[i];
      vel.data[i] = mu * vel.data[i] + g;
      p.value->data[i] -= eta * (g + mu * vel.data[i]);
    }
    ++vi;
  }
}

template class Net<float>;
template class Net<double>;
template class SgdOptimizer<float>;
template class SgdOptimizer<double>;

}  // namespace slu
