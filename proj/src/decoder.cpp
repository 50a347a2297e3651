// slu/decoder.cpp

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

#include "slu/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "slu/ctc.hpp"
#include "slu/utf8.hpp"

namespace slu {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

template <typename Real>
std::u32string greedy_decode(const Real *lattice, int t_len, int num_symbols,
                             const Alphabet &alphabet) {
  std::vector<int> path(static_cast<std::size_t>(t_len));
  for (int t = 0; t < t_len; ++t) {
    const Real *row = lattice + static_cast<std::size_t>(t) * num_symbols;
    int best = 0;
    for (int k = 1; k < num_symbols; ++k)
      if (row[k] > row[best]) best = k;
    path[static_cast<std::size_t>(t)] = best;
  }
  return alphabet.decode_indices(ctc_collapse(path));
}

namespace {

struct BeamHyp {
  double p_blank = kNegInf;
  double p_nonblank = kNegInf;
  double lm_log10 = 0.0;
  int word_count = 0;
  std::u32string pending;              // word under construction
  std::vector<std::string> history;    // completed LM words
  bool lm_init = false;

  double total() const { return log_add(p_blank, p_nonblank); }
};

// LM bookkeeping is a pure function of the prefix text, so merged prefixes
// carry identical values and only the path mass is log-added.
void complete_word(BeamHyp &hyp, const std::string &token,
                   const DecodeConfig &cfg) {
  if (cfg.lm != nullptr && cfg.alpha != 0.0) {
    hyp.lm_log10 += cfg.lm->score_word(hyp.history, token);
    hyp.history.push_back(cfg.lm->in_vocab(token) ? token
                                                  : NGramModel::kUnknown);
    std::size_t keep = static_cast<std::size_t>(cfg.lm->order()) - 1;
    if (hyp.history.size() > keep)
      hyp.history.erase(hyp.history.begin(),
                        hyp.history.end() - static_cast<long>(keep));
  }
  hyp.word_count += 1;
}

BeamHyp extend_lm(const BeamHyp &parent, char32_t c, const DecodeConfig &cfg) {
  BeamHyp child = parent;
  child.p_blank = kNegInf;
  child.p_nonblank = kNegInf;
  if (c == U' ') {
    if (!child.pending.empty()) {
      complete_word(child, utf8_encode(child.pending), cfg);
      child.pending.clear();
    }
  } else if (cfg.single_symbol_words.count(c) > 0) {
    if (!child.pending.empty()) {
      complete_word(child, utf8_encode(child.pending), cfg);
      child.pending.clear();
    }
    complete_word(child, utf8_encode(c), cfg);
  } else {
    child.pending += c;
  }
  return child;
}

double rank_score(const BeamHyp &hyp, const DecodeConfig &cfg) {
  return hyp.total() + cfg.alpha * hyp.lm_log10 + cfg.beta * hyp.word_count;
}

}  // namespace

template <typename Real>
std::vector<DecodeHyp> beam_decode(const Real *lattice, int t_len,
                                   int num_symbols, const DecodeConfig &cfg) {
  SLU_CHECK(cfg.beam_width >= 1, "beam_width must be >= 1, got ",
            cfg.beam_width);
  SLU_CHECK(cfg.alphabet != nullptr, "decode config needs an alphabet");
  SLU_CHECK(cfg.alphabet->size() == num_symbols,
            "alphabet size ", cfg.alphabet->size(),
            " does not match lattice width ", num_symbols);
  SLU_CHECK(cfg.alpha == 0.0 || cfg.lm != nullptr,
            "alpha != 0 requires a language model");

  std::map<std::u32string, BeamHyp> beam;
  {
    BeamHyp root;
    root.p_blank = 0.0;  // empty prefix, no frames consumed
    if (cfg.lm != nullptr && cfg.alpha != 0.0)
      root.history.push_back(NGramModel::kSentBegin);
    beam.emplace(std::u32string(), std::move(root));
  }

  for (int t = 0; t < t_len; ++t) {
    const Real *row = lattice + static_cast<std::size_t>(t) * num_symbols;
    std::map<std::u32string, BeamHyp> next;

    auto upsert = [&](const std::u32string &text, const BeamHyp &parent,
                      char32_t grown_char) -> BeamHyp & {
      auto it = next.find(text);
      if (it == next.end()) {
        BeamHyp fresh = grown_char == 0
                            ? parent
                            : extend_lm(parent, grown_char, cfg);
        if (grown_char == 0) {
          fresh.p_blank = kNegInf;
          fresh.p_nonblank = kNegInf;
        }
        it = next.emplace(text, std::move(fresh)).first;
      }
      return it->second;
    };

    for (const auto &[text, hyp] : beam) {
      const double total = hyp.total();
      // stay on this prefix via blank
      {
        BeamHyp &dst = upsert(text, hyp, 0);
        dst.p_blank =
            log_add(dst.p_blank, total + static_cast<double>(row[kCtcBlank]));
      }
      for (int k = 1; k < num_symbols; ++k) {
        const double lp = static_cast<double>(row[k]);
        char32_t c = cfg.alphabet->symbol(k);
        if (!text.empty() && text.back() == c) {
          // same symbol again extends the run (no new emission)
          {
            BeamHyp &dst = upsert(text, hyp, 0);
            dst.p_nonblank = log_add(dst.p_nonblank, hyp.p_nonblank + lp);
          }
          // a fresh emission requires the run to have ended in a blank
          std::u32string grown = text + c;
          BeamHyp &dst = upsert(grown, hyp, c);
          dst.p_nonblank = log_add(dst.p_nonblank, hyp.p_blank + lp);
        } else {
          std::u32string grown = text + c;
          BeamHyp &dst = upsert(grown, hyp, c);
          dst.p_nonblank = log_add(dst.p_nonblank, total + lp);
        }
      }
    }

    // prune to beam_width by fused score; ties break lexicographically
    if (static_cast<int>(next.size()) > cfg.beam_width) {
      std::vector<std::pair<double, const std::u32string *>> ranked;
      ranked.reserve(next.size());
      for (const auto &[text, hyp] : next)
        ranked.emplace_back(rank_score(hyp, cfg), &text);
      std::sort(ranked.begin(), ranked.end(),
                [](const auto &a, const auto &b) {
                  if (a.first != b.first) return a.first > b.first;
                  return *a.second < *b.second;
                });
      std::map<std::u32string, BeamHyp> pruned;
      for (int i = 0; i < cfg.beam_width; ++i)
        pruned.emplace(*ranked[static_cast<std::size_t>(i)].second,
                       std::move(next.at(*ranked[i].second)));
      next = std::move(pruned);
    }
    beam = std::move(next);
  }

  // finalize: trailing pending words complete, then rank by combined score
  std::vector<DecodeHyp> out;
  out.reserve(beam.size());
  for (const auto &[text, hyp] : beam) {
    BeamHyp fin = hyp;
    if (!fin.pending.empty()) {
      complete_word(fin, utf8_encode(fin.pending), cfg);
      fin.pending.clear();
    }
    DecodeHyp d;
    d.text = text;
    d.ctc_logprob = hyp.total();
    d.lm_log10 = fin.lm_log10;
    d.word_count = fin.word_count;
    d.combined =
        d.ctc_logprob + cfg.alpha * d.lm_log10 + cfg.beta * d.word_count;
    out.push_back(std::move(d));
  }
  std::sort(out.begin(), out.end(), [](const DecodeHyp &a, const DecodeHyp &b) {
    if (a.combined != b.combined) return a.combined > b.combined;
    return a.text < b.text;
  });
  if (static_cast<int>(out.size()) > cfg.nbest)
    out.resize(static_cast<std::size_t>(cfg.nbest));
  return out;
}

template std::u32string greedy_decode<float>(const float *, int, int,
                                             const Alphabet &);
template std::u32string greedy_decode<double>(const double *, int, int,
                                              const Alphabet &);
template std::vector<DecodeHyp> beam_decode<float>(const float *, int, int,
                                                   const DecodeConfig &);
template std::vector<DecodeHyp> beam_decode<double>(const double *, int, int,
                                                    const DecodeConfig &);

}  // namespace slu
