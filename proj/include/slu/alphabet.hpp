// slu/alphabet.hpp

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

#ifndef SLU_ALPHABET_HPP_
#define SLU_ALPHABET_HPP_

#include <string>
#include <unordered_map>
#include <vector>

#include "slu/common.hpp"

namespace slu {

// Output symbol table of one model head. Index 0 is always the CTC blank.
// The id is a content digest binding checkpoints to the symbol set.
class Alphabet {
 public:
  static constexpr int kBlank = 0;

  Alphabet() = default;
  explicit Alphabet(const std::vector<char32_t> &symbols);

  int size() const { return static_cast<int>(symbols_.size()) + 1; }
  char32_t symbol(int index) const;
  int index(char32_t c) const;  // -1 if absent
  bool contains(char32_t c) const { return index(c) >= 0; }
  const std::string &id() const { return id_; }

  std::vector<int> encode(const std::u32string &text) const;
  std::u32string decode_indices(const std::vector<int> &indices) const;

  // One line per non-blank symbol; "<space>" escapes the space character.
  // The blank is implicit.
  void save(const std::string &path) const;
  static Alphabet load(const std::string &path);

 private:
  void rebuild();
  std::vector<char32_t> symbols_;  // non-blank symbols; model index = pos + 1
  std::unordered_map<char32_t, int> to_index_;
  std::string id_;
};

}  // namespace slu

#endif  // SLU_ALPHABET_HPP_
