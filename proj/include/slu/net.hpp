// slu/net.hpp

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

// The acoustic-to-character model: a stack of 2D convolutions over
// (time, frequency), bidirectional LSTM layers with sequence-wise batch
// normalization on their input transforms, a fully connected layer with
// clipped ReLU, and a per-alphabet log-softmax head. Forward/backward are
// hand-written; gradients are validated against central finite differences
// in the double instantiation.

#ifndef SLU_NET_HPP_
#define SLU_NET_HPP_

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "slu/rng.hpp"
#include "slu/tensor.hpp"

namespace slu {

struct ConvSpec {
  int out_channels = 32;
  int kernel_t = 11;
  int kernel_f = 41;
  int stride_t = 2;
  int stride_f = 2;
};

struct ModelConfig {
  int input_features = 0;   // F of the spectrogram
  std::vector<ConvSpec> convs;
  int rnn_layers = 5;
  int rnn_hidden = 512;
  int fc_size = 512;
  int alphabet_size = 0;    // head width, blank included
  bool batch_norm = true;
  double act_clip = 20.0;   // clipped ReLU ceiling
  double bn_momentum = 0.1;
  double bn_epsilon = 1e-5;

  // Two conv layers and five bidirectional LSTM layers, per the reference
  // configuration; tests shrink from here.
  static ModelConfig paper_default(int input_features, int alphabet_size);

  void validate() const;
  // output length after all conv time strides ("same" padding, odd kernels)
  int conv_out_time(int t_in) const;
  int conv_out_freq() const;
  int conv_out_features() const;  // channels * conv_out_freq
  int rnn_input_size() const;
  int head_input_size() const;

  std::string canonical() const;
  uint64_t digest() const;
  static ModelConfig from_canonical(const std::string &text);

  bool operator==(const ModelConfig &o) const {
    return canonical() == o.canonical();
  }
};

enum class RunMode { kTrain, kInfer };

template <typename Real>
struct ParamRef {
  std::string name;
  Tensor<Real> *value;
  Tensor<Real> *grad;      // nullptr for non-trainable stats
  bool trainable;
};

// Enumerates (name, shape, trainable) for every tensor a config defines, in
// checkpoint order.
void for_each_param_spec(
    const ModelConfig &cfg,
    const std::function<void(const std::string &, const std::vector<int> &,
                             bool)> &fn);

struct Checkpoint {
  ModelConfig config;
  std::vector<std::pair<std::string, Tensor<float>>> tensors;
  std::string alphabet_id;
  std::vector<std::string> lineage;
  Rng::State rng_state{};
};

void save_checkpoint(const Checkpoint &ckpt, const std::string &path);
Checkpoint load_checkpoint(const std::string &path);
// Throws, naming the first mismatched tensor, when the checkpoint does not
// fit `cfg`.
void check_checkpoint_config(const Checkpoint &ckpt, const ModelConfig &cfg);
// Body tensors are copied bit-for-bit; the head is redrawn at the new width
// using the checkpoint's rng state.
Checkpoint reinit_head(const Checkpoint &ckpt, int new_alphabet_size,
                       const std::string &new_alphabet_id);

template <typename Real>
class Net {
 public:
  Net(const ModelConfig &cfg, uint64_t seed);

  const ModelConfig &config() const { return cfg_; }
  std::vector<ParamRef<Real>> params();
  void zero_grads();

  // Caches from one train-mode forward, consumed by backward.
  struct Forward {
    bool valid = false;
    RunMode mode = RunMode::kInfer;
    int batch = 0;
    int t_out = 0;
    std::vector<int> in_lengths;
    std::vector<int> out_lengths;
    // log-probability lattice, t_out x batch x alphabet; rows past an
    // utterance's out_length are zero filler
    Tensor<Real> logprobs;

    struct ConvCache {
      int c_in = 0, t_in = 0, f_in = 0;
      int c_out = 0, t_out = 0, f_out = 0;
      std::vector<int> in_lens, out_lens;
      std::vector<Real> input;   // B*Cin*Tin*Fin
      std::vector<Real> cols;    // B * (t_out*f_out) * (Cin*Kt*Kf)
      std::vector<Real> preact;  // B*Cout*Tout*Fout
    };
    std::vector<ConvCache> conv;

    struct DirCache {
      std::vector<Real> z_norm;  // T*B x 4H (post-BN input transform)
      std::vector<Real> z_raw;   // T*B x 4H (pre-BN; empty when BN off)
      std::vector<Real> gates;   // T*B x 4H, activated (i,f,g,o)
      std::vector<Real> cell;    // T*B x H
      std::vector<Real> tanh_c;  // T*B x H
      std::vector<Real> h;       // T*B x H
      std::vector<double> mean, var, inv_std;  // 4H batch stats
    };
    struct RnnCache {
      std::vector<Real> input;  // T*B x Din
      DirCache dir[2];
    };
    std::vector<RnnCache> rnn;

    std::vector<Real> rnn_output;  // T*B x H (or conv features if no rnn)
    std::vector<Real> fc_pre;      // T*B x fc_size
    std::vector<Real> fc_out;      // T*B x fc_size
  };

  // update_running=false makes train-mode forward side-effect free (used by
  // finite-difference loss evaluations).
  Forward forward(const std::vector<const Tensor<Real> *> &features,
                  RunMode mode, bool update_running = true);
  // Accumulates parameter gradients from d(loss)/d(logprobs).
  void backward(Forward &ws, const Tensor<Real> &dlogprobs);

  void reinit_head(int new_alphabet_size);

  Checkpoint to_checkpoint(const std::string &alphabet_id,
                           const std::vector<std::string> &lineage) const;
  static Net<Real> from_checkpoint(const Checkpoint &ckpt);

  Rng &rng() { return rng_; }
  const Rng &rng() const { return rng_; }

 private:
  void allocate();
  void init_all();
  Tensor<Real> *tensor_by_name(const std::string &name);

  ModelConfig cfg_;
  Rng rng_;
  std::vector<std::string> order_;  // parameter order
  std::vector<Tensor<Real>> values_;
  std::vector<Tensor<Real>> grads_;
  std::vector<bool> trainable_;
};

// Nesterov-momentum SGD with global gradient-norm clipping.
template <typename Real>
class SgdOptimizer {
 public:
  double lr = 0.001;
  double momentum = 0.99;
  double clip_norm = 400.0;

  void step(Net<Real> &net);
  // velocity state, exposed for chain resumption
  std::vector<std::pair<std::string, Tensor<Real>>> &velocity() {
    return velocity_;
  }

 private:
  std::vector<std::pair<std::string, Tensor<Real>>> velocity_;
};

}  // namespace slu

#endif  // SLU_NET_HPP_
