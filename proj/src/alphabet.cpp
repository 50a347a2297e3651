// slu/alphabet.cpp

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

#include "slu/alphabet.hpp"

#include <sstream>

#include "slu/utf8.hpp"

namespace slu {

Alphabet::Alphabet(const std::vector<char32_t> &symbols) : symbols_(symbols) {
  rebuild();
}

void Alphabet::rebuild() {
  to_index_.clear();
  std::string digest_input;
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    SLU_CHECK(to_index_.count(symbols_[i]) == 0,
              "duplicate symbol in alphabet at position ", i);
    to_index_[symbols_[i]] = static_cast<int>(i) + 1;
    digest_input += utf8_encode(symbols_[i]);
    digest_input += '\x1f';
  }
  id_ = hex64(fnv1a64(digest_input));
}

char32_t Alphabet::symbol(int index) const {
  SLU_CHECK(index >= 1 && index <= static_cast<int>(symbols_.size()),
            "symbol index out of range: ", index);
  return symbols_[static_cast<std::size_t>(index) - 1];
}

int Alphabet::index(char32_t c) const {
  auto it = to_index_.find(c);
  return it == to_index_.end() ? -1 : it->second;
}

std::vector<int> Alphabet::encode(const std::u32string &text) const {
  std::vector<int> out;
  out.reserve(text.size());
  for (char32_t c : text) {
    int idx = index(c);
    SLU_CHECK(idx >= 0, "character U+", hex64(c),
              " ('", utf8_encode(c), "') not in alphabet");
    out.push_back(idx);
  }
  return out;
}

std::u32string Alphabet::decode_indices(const std::vector<int> &indices) const {
  std::u32string out;
  out.reserve(indices.size());
  for (int idx : indices) {
    if (idx == kBlank) continue;
    out.push_back(symbol(idx));
  }
  return out;
}

void Alphabet::save(const std::string &path) const {
  std::ostringstream os;
  for (char32_t c : symbols_) {
    if (c == U' ')
      os << "<space>\n";
    else
      os << utf8_encode(c) << '\n';
  }
  write_text_file(path, os.str());
}

Alphabet Alphabet::load(const std::string &path) {
  std::istringstream is(read_text_file(path));
  std::string line;
  std::vector<char32_t> symbols;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line == "<space>") {
      symbols.push_back(U' ');
      continue;
    }
    std::u32string cp = utf8_decode(line);
    SLU_CHECK(cp.size() == 1, path, ":", lineno,
              ": expected one symbol per line");
    symbols.push_back(cp[0]);
  }
  SLU_CHECK(!symbols.empty(), path, ": empty alphabet");
  return Alphabet(symbols);
}

}  // namespace slu
