// slu/tensor.hpp

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

#ifndef SLU_TENSOR_HPP_
#define SLU_TENSOR_HPP_

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "slu/common.hpp"

namespace slu {

// Dense row-major tensor. Shape is dynamic; indexing helpers cover the 1/2D
// uses that dominate this codebase.
template <typename Real>
struct Tensor {
  std::vector<int> shape;
  std::vector<Real> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(num_elems(shape), Real(0));
  }

  static std::size_t num_elems(const std::vector<int> &s) {
    std::size_t n = 1;
    for (int d : s) {
      SLU_CHECK(d >= 0, "negative tensor dim");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  std::size_t size() const { return data.size(); }
  Real *ptr() { return data.data(); }
  const Real *ptr() const { return data.data(); }

  Real &operator()(int i) { return data[static_cast<std::size_t>(i)]; }
  Real operator()(int i) const { return data[static_cast<std::size_t>(i)]; }
  Real &operator()(int i, int j) {
    return data[static_cast<std::size_t>(i) * shape[1] + j];
  }
  Real operator()(int i, int j) const {
    return data[static_cast<std::size_t>(i) * shape[1] + j];
  }

  void fill(Real v) { std::fill(data.begin(), data.end(), v); }
  void zero() { fill(Real(0)); }

  bool same_shape(const Tensor &other) const { return shape == other.shape; }

  template <typename Other>
  Tensor<Other> cast() const {
    Tensor<Other> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
      out.data[i] = static_cast<Other>(data[i]);
    return out;
  }
};

inline std::string shape_str(const std::vector<int> &s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

}  // namespace slu

#endif  // SLU_TENSOR_HPP_
