// slu/common.hpp

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

#ifndef SLU_COMMON_HPP_
#define SLU_COMMON_HPP_

#include <cstdint>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace slu {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

namespace detail {
inline void cat_into(std::ostringstream &) {}
template <typename T, typename... Rest>
void cat_into(std::ostringstream &os, T &&head, Rest &&...rest) {
  os << head;
  cat_into(os, std::forward<Rest>(rest)...);
}
}  // namespace detail

template <typename... Args>
std::string str_cat(Args &&...args) {
  std::ostringstream os;
  detail::cat_into(os, std::forward<Args>(args)...);
  return os.str();
}

#define SLU_CHECK(cond, ...)                                     \
  do {                                                           \
    if (!(cond)) throw ::slu::Error(::slu::str_cat(__VA_ARGS__)); \
  } while (0)

// Runs fn(i) for i in [0, n) on up to `workers` threads. Iterations must be
// independent; callers that collect results index into a preallocated vector
// so the outcome does not depend on scheduling.
inline void parallel_for(std::size_t n, int workers,
                         const std::function<void(std::size_t)> &fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t nthreads = std::min<std::size_t>(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  std::vector<std::exception_ptr> errors(nthreads);
  for (std::size_t w = 0; w < nthreads; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (std::size_t i = w; i < n; i += nthreads) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto &t : pool) t.join();
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
}

inline int default_workers() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// FNV-1a, used for content digests (alphabet ids, config digests, id hashing).
inline uint64_t fnv1a64(const void *data, std::size_t len,
                        uint64_t seed = 1469598103934665603ULL) {
  const auto *p = static_cast<const unsigned char *>(data);
  uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline uint64_t fnv1a64(const std::string &s,
                        uint64_t seed = 1469598103934665603ULL) {
  return fnv1a64(s.data(), s.size(), seed);
}

std::string read_text_file(const std::string &path);
void write_text_file(const std::string &path, const std::string &content);
std::vector<std::string> split_ws(const std::string &line);
std::string hex64(uint64_t v);

}  // namespace slu

#endif  // SLU_COMMON_HPP_
