// slu/kernels_dispatch.cpp

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

#include <cstdlib>
#include <cstring>

namespace slu {
namespace kernels {

bool cpu_supports_avx2() {
#if (defined(__x86_64__) || defined(__i386__)) && \
    (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

static Backend resolve_backend() {
  const char *env = std::getenv("SLU_KERNELS");
  if (env != nullptr) {
    if (std::strcmp(env, "scalar") == 0) return Backend::kScalar;
    if (std::strcmp(env, "avx2") == 0 && avx2::compiled_in() &&
        cpu_supports_avx2())
      return Backend::kAvx2;
    return Backend::kScalar;
  }
  return (avx2::compiled_in() && cpu_supports_avx2()) ? Backend::kAvx2
                                                      : Backend::kScalar;
}

Backend active_backend() {
  static const Backend backend = resolve_backend();
  return backend;
}

const char *backend_name() {
  return active_backend() == Backend::kAvx2 ? "avx2" : "scalar";
}

}  // namespace kernels
}  // namespace slu
