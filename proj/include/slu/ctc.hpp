// slu/ctc.hpp

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

// Exact CTC negative log-likelihood over the blank-interleaved state
// sequence, all in log space with explicit -inf. Blank is index 0. The
// gradient is with respect to the (unconstrained) log-probability lattice.

#ifndef SLU_CTC_HPP_
#define SLU_CTC_HPP_

#include <vector>

#include "slu/common.hpp"
#include "slu/tensor.hpp"

namespace slu {

constexpr int kCtcBlank = 0;

// log(exp(a) + exp(b)) with -inf handled exactly
double log_add(double a, double b);

// Minimum frames a target needs: |target| plus one separating blank per
// adjacent equal pair.
int ctc_min_frames(const std::vector<int> &target);

// logprobs: t_len x num_symbols row-major log distribution per frame.
// Throws "target longer than input admits" when infeasible.
template <typename Real>
double ctc_loss(const Real *logprobs, int t_len, int num_symbols,
                const std::vector<int> &target);

// Same, also writing d(loss)/d(logprobs) into grad (t_len x num_symbols).
template <typename Real>
double ctc_loss_grad(const Real *logprobs, int t_len, int num_symbols,
                     const std::vector<int> &target, Real *grad);

// Merge adjacent repeats, then drop blanks.
std::vector<int> ctc_collapse(const std::vector<int> &path,
                              int blank = kCtcBlank);

// Mean CTC loss over a padded batch lattice (t_max x batch x symbols).
// Rows past lengths[b] are ignored. When grad is non-null it receives
// d(mean loss)/d(lattice), zero on padding.
template <typename Real>
double ctc_batch_loss(const Tensor<Real> &logprobs,
                      const std::vector<int> &lengths,
                      const std::vector<std::vector<int>> &targets,
                      Tensor<Real> *grad);

}  // namespace slu

#endif  // SLU_CTC_HPP_
