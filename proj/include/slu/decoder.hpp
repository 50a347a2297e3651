// slu/decoder.hpp

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

// Greedy best-path decoding and CTC prefix beam search with word-level
// n-gram fusion. Combined score = ln p_ctc + alpha * lm_log10 + beta *
// word_count. Words are space-delimited; concept tag symbols and the star
// count as single-symbol words.

#ifndef SLU_DECODER_HPP_
#define SLU_DECODER_HPP_

#include <set>
#include <string>
#include <vector>

#include "slu/alphabet.hpp"
#include "slu/ngram_lm.hpp"
#include "slu/tag_codec.hpp"

namespace slu {

struct DecodeConfig {
  int beam_width = 64;
  double alpha = 0.0;  // LM weight on log10 scores
  double beta = 0.0;   // completed-word bonus
  const NGramModel *lm = nullptr;
  const Alphabet *alphabet = nullptr;
  // symbols that form one-symbol words (concept tags, close, star)
  std::set<char32_t> single_symbol_words;
  int nbest = 1;

  void add_tag_words(const ConceptInventory &inv) {
    for (const auto &name : inv.concepts())
      single_symbol_words.insert(inv.open_symbol(name));
    single_symbol_words.insert(inv.close_symbol());
    single_symbol_words.insert(inv.star_symbol());
  }
};

struct DecodeHyp {
  std::u32string text;
  double ctc_logprob = 0.0;  // natural log of the prefix probability
  double lm_log10 = 0.0;
  int word_count = 0;
  double combined = 0.0;
};

// Per-frame argmax (ties to the lowest index) then CTC collapse.
template <typename Real>
std::u32string greedy_decode(const Real *lattice, int t_len, int num_symbols,
                             const Alphabet &alphabet);

// Prefix beam search; ranked best-first, at most cfg.nbest entries.
// Deterministic: ties break on score, then lexicographic text.
template <typename Real>
std::vector<DecodeHyp> beam_decode(const Real *lattice, int t_len,
                                   int num_symbols, const DecodeConfig &cfg);

}  // namespace slu

#endif  // SLU_DECODER_HPP_
