// slu/ngram_lm.hpp

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

// Word-level back-off n-gram model with Witten-Bell interpolated smoothing.
// Probabilities are log10 throughout (ARPA convention). The predicted
// vocabulary is every token except <s>; unknown words map to <unk>, so
// sum_w P(w|h) = 1 holds exactly for any history.

#ifndef SLU_NGRAM_LM_HPP_
#define SLU_NGRAM_LM_HPP_

#include <map>
#include <string>
#include <vector>

#include "slu/common.hpp"

namespace slu {

class NGramModel {
 public:
  static constexpr const char *kSentBegin = "<s>";
  static constexpr const char *kSentEnd = "</s>";
  static constexpr const char *kUnknown = "<unk>";

  static NGramModel train(const std::vector<std::vector<std::string>> &corpus,
                          int order);

  int order() const { return order_; }
  const std::vector<std::string> &vocab() const { return vocab_; }
  bool in_vocab(const std::string &w) const { return vocab_set_.count(w) > 0; }

  // log10 P(w | history); history longer than order-1 is truncated, OOV
  // tokens (in history or predicted) map to <unk>.
  double score_word(const std::vector<std::string> &history,
                    const std::string &w) const;

  // log10 probability of the words plus the sentence end, starting from <s>.
  double sentence_logprob(const std::vector<std::string> &words) const;

  // 10^(-avg log10 prob per predicted token, </s> included)
  double perplexity(const std::vector<std::vector<std::string>> &corpus) const;

  void write_arpa(const std::string &path) const;
  std::string to_arpa() const;
  static NGramModel read_arpa(const std::string &path);
  static NGramModel parse_arpa(const std::string &text,
                               const std::string &origin = "<string>");

 private:
  struct Entry {
    double logp = 0.0;
    double bow = 0.0;
    bool has_bow = false;
  };

  static std::string join(const std::vector<std::string> &toks,
                          std::size_t begin, std::size_t end);
  const Entry *find(int order, const std::string &key) const;
  double score_mapped(const std::vector<std::string> &hist,
                      const std::string &w) const;

  int order_ = 0;
  std::vector<std::string> vocab_;       // sorted, includes reserved tokens
  std::map<std::string, int> vocab_set_;
  // tables_[k] holds (k+1)-grams keyed by space-joined tokens
  std::vector<std::map<std::string, Entry>> tables_;
};

}  // namespace slu

#endif  // SLU_NGRAM_LM_HPP_
