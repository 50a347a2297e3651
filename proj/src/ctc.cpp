// slu/ctc.cpp

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

#include "slu/ctc.hpp"

#include <cmath>
#include <limits>

namespace slu {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double hi = a > b ? a : b;
  double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

int ctc_min_frames(const std::vector<int> &target) {
  int repeats = 0;
  for (std::size_t i = 1; i < target.size(); ++i)
    if (target[i] == target[i - 1]) ++repeats;
  return static_cast<int>(target.size()) + repeats;
}

namespace {

// Forward-backward over the 2U+1 extended states. beta includes the emission
// at its own frame, so alpha+beta double-counts it; the posterior divides it
// back out.
template <typename Real>
double ctc_core(const Real *logprobs, int t_len, int num_symbols,
                const std::vector<int> &target, Real *grad) {
  SLU_CHECK(t_len >= 1, "CTC needs at least one frame");
  for (int u : target)
    SLU_CHECK(u > 0 && u < num_symbols,
              "target symbol out of range (blank is reserved): ", u);
  SLU_CHECK(ctc_min_frames(target) <= t_len,
            "target longer than input admits: needs ",
            ctc_min_frames(target), " frames, lattice has ", t_len);

  const int ext_len = 2 * static_cast<int>(target.size()) + 1;
  auto ext_symbol = [&](int s) {
    return (s % 2 == 0) ? kCtcBlank : target[static_cast<std::size_t>(s) / 2];
  };
  auto lp = [&](int t, int s) {
    return static_cast<double>(
        logprobs[static_cast<std::size_t>(t) * num_symbols + ext_symbol(s)]);
  };

  std::vector<double> alpha(static_cast<std::size_t>(t_len) * ext_len, kNegInf);
  auto a_at = [&](int t, int s) -> double & {
    return alpha[static_cast<std::size_t>(t) * ext_len + s];
  };

  a_at(0, 0) = lp(0, 0);
  if (ext_len > 1) a_at(0, 1) = lp(0, 1);
  for (int t = 1; t < t_len; ++t) {
    for (int s = 0; s < ext_len; ++s) {
      double acc = a_at(t - 1, s);
      if (s >= 1) acc = log_add(acc, a_at(t - 1, s - 1));
      if (s >= 2 && ext_symbol(s) != kCtcBlank &&
          ext_symbol(s) != ext_symbol(s - 2))
        acc = log_add(acc, a_at(t - 1, s - 2));
      a_at(t, s) = acc == kNegInf ? kNegInf : acc + lp(t, s);
    }
  }

  double log_total = a_at(t_len - 1, ext_len - 1);
  if (ext_len > 1) log_total = log_add(log_total, a_at(t_len - 1, ext_len - 2));
  SLU_CHECK(log_total != kNegInf, "no feasible CTC alignment");

  if (grad == nullptr) return -log_total;

  std::vector<double> beta(static_cast<std::size_t>(t_len) * ext_len, kNegInf);
  auto b_at = [&](int t, int s) -> double & {
    return beta[static_cast<std::size_t>(t) * ext_len + s];
  };
  b_at(t_len - 1, ext_len - 1) = lp(t_len - 1, ext_len - 1);
  if (ext_len > 1) b_at(t_len - 1, ext_len - 2) = lp(t_len - 1, ext_len - 2);
  for (int t = t_len - 2; t >= 0; --t) {
    for (int s = ext_len - 1; s >= 0; --s) {
      double acc = b_at(t + 1, s);
      if (s + 1 < ext_len) acc = log_add(acc, b_at(t + 1, s + 1));
      if (s + 2 < ext_len && ext_symbol(s + 2) != kCtcBlank &&
          ext_symbol(s + 2) != ext_symbol(s))
        acc = log_add(acc, b_at(t + 1, s + 2));
      b_at(t, s) = acc == kNegInf ? kNegInf : acc + lp(t, s);
    }
  }

  for (int t = 0; t < t_len; ++t) {
    std::vector<double> by_symbol(static_cast<std::size_t>(num_symbols),
                                  kNegInf);
    for (int s = 0; s < ext_len; ++s) {
      double g = a_at(t, s) + b_at(t, s) - lp(t, s);
      if (std::isnan(g)) continue;  // both alpha and beta were -inf
      int k = ext_symbol(s);
      by_symbol[k] = log_add(by_symbol[k], g);
    }
    for (int k = 0; k < num_symbols; ++k) {
      double g = by_symbol[k];
      grad[static_cast<std::size_t>(t) * num_symbols + k] =
          g == kNegInf ? Real(0)
                       : static_cast<Real>(-std::exp(g - log_total));
    }
  }
  return -log_total;
}

}  // namespace

template <typename Real>
double ctc_loss(const Real *logprobs, int t_len, int num_symbols,
                const std::vector<int> &target) {
  return ctc_core<Real>(logprobs, t_len, num_symbols, target, nullptr);
}

template <typename Real>
double ctc_loss_grad(const Real *logprobs, int t_len, int num_symbols,
                     const std::vector<int> &target, Real *grad) {
  SLU_CHECK(grad != nullptr, "grad buffer required");
  return ctc_core<Real>(logprobs, t_len, num_symbols, target, grad);
}

template double ctc_loss<float>(const float *, int, int,
                                const std::vector<int> &);
template double ctc_loss<double>(const double *, int, int,
                                 const std::vector<int> &);
template double ctc_loss_grad<float>(const float *, int, int,
                                     const std::vector<int> &, float *);
template double ctc_loss_grad<double>(const double *, int, int,
                                      const std::vector<int> &, double *);

std::vector<int> ctc_collapse(const std::vector<int> &path, int blank) {
  std::vector<int> out;
  int prev = -1;
  for (int s : path) {
    if (s != prev && s != blank) out.push_back(s);
    prev = s;
  }
  return out;
}

template <typename Real>
double ctc_batch_loss(const Tensor<Real> &logprobs,
                      const std::vector<int> &lengths,
                      const std::vector<std::vector<int>> &targets,
                      Tensor<Real> *grad) {
  SLU_CHECK(logprobs.shape.size() == 3, "lattice must be T x B x A");
  const int t_max = logprobs.shape[0];
  const int batch = logprobs.shape[1];
  const int a_size = logprobs.shape[2];
  SLU_CHECK(static_cast<int>(lengths.size()) == batch &&
                static_cast<int>(targets.size()) == batch,
            "batch size mismatch");
  if (grad != nullptr) {
    *grad = Tensor<Real>(logprobs.shape);
  }
  double total = 0.0;
  std::vector<Real> slice;
  std::vector<Real> gslice;
  for (int b = 0; b < batch; ++b) {
    const int t_len = lengths[b];
    SLU_CHECK(t_len >= 1 && t_len <= t_max, "bad utterance length");
    slice.assign(static_cast<std::size_t>(t_len) * a_size, Real(0));
    for (int t = 0; t < t_len; ++t)
      for (int k = 0; k < a_size; ++k)
        slice[static_cast<std::size_t>(t) * a_size + k] =
            logprobs.data[(static_cast<std::size_t>(t) * batch + b) * a_size +
                          k];
    if (grad == nullptr) {
      total += ctc_loss(slice.data(), t_len, a_size, targets[b]);
    } else {
      gslice.assign(slice.size(), Real(0));
      total += ctc_loss_grad(slice.data(), t_len, a_size, targets[b],
                             gslice.data());
      const Real inv_b = Real(1) / static_cast<Real>(batch);
      for (int t = 0; t < t_len; ++t)
        for (int k = 0; k < a_size; ++k)
          grad->data[(static_cast<std::size_t>(t) * batch + b) * a_size + k] =
              gslice[static_cast<std::size_t>(t) * a_size + k] * inv_b;
    }
  }
  return total / batch;
}

template double ctc_batch_loss<float>(const Tensor<float> &,
                                      const std::vector<int> &,
                                      const std::vector<std::vector<int>> &,
                                      Tensor<float> *);
template double ctc_batch_loss<double>(const Tensor<double> &,
                                       const std::vector<int> &,
                                       const std::vector<std::vector<int>> &,
                                       Tensor<double> *);

}  // namespace slu
