// slu/ngram_lm.cpp

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

#include "slu/ngram_lm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

namespace slu {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string &s, const std::string &where) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  SLU_CHECK(res.ec == std::errc() && res.ptr == s.data() + s.size(),
            "bad float '", s, "' in ", where);
  return v;
}

constexpr double kSentBeginLogp = -99.0;  // ARPA placeholder; never queried

}  // namespace

std::string NGramModel::join(const std::vector<std::string> &toks,
                             std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i != begin) out += ' ';
    out += toks[i];
  }
  return out;
}

const NGramModel::Entry *NGramModel::find(int order,
                                          const std::string &key) const {
  if (order < 1 || order > static_cast<int>(tables_.size())) return nullptr;
  const auto &table = tables_[static_cast<std::size_t>(order) - 1];
  auto it = table.find(key);
  return it == table.end() ? nullptr : &it->second;
}

NGramModel NGramModel::train(
    const std::vector<std::vector<std::string>> &corpus, int order) {
  SLU_CHECK(!corpus.empty(), "empty corpus");
  SLU_CHECK(order >= 1, "order must be >= 1, got ", order);

  NGramModel m;
  m.order_ = order;

  // vocabulary: corpus types plus reserved tokens, sorted
  std::set<std::string> vocab{kSentBegin, kSentEnd, kUnknown};
  for (const auto &sent : corpus)
    for (const auto &w : sent) vocab.insert(w);
  m.vocab_.assign(vocab.begin(), vocab.end());
  for (std::size_t i = 0; i < m.vocab_.size(); ++i)
    m.vocab_set_[m.vocab_[i]] = static_cast<int>(i);

  // n-gram counts; grams never predict <s>
  std::vector<std::unordered_map<std::string, long long>> counts(order);
  for (const auto &sent : corpus) {
    std::vector<std::string> toks;
    toks.reserve(sent.size() + 2);
    toks.push_back(kSentBegin);
    toks.insert(toks.end(), sent.begin(), sent.end());
    toks.push_back(kSentEnd);
    for (std::size_t i = 1; i < toks.size(); ++i) {
      for (int o = 1; o <= order; ++o) {
        if (static_cast<std::size_t>(o) > i + 1) break;
        ++counts[o - 1][join(toks, i + 1 - o, i + 1)];
      }
    }
  }

  // per-context totals and continuation-type counts
  struct ContextStat {
    long long total = 0;
    long long types = 0;
  };
  // context_stats[k]: contexts of length k (key "" for the empty context)
  std::vector<std::unordered_map<std::string, ContextStat>> context_stats(order);
  for (int o = 1; o <= order; ++o) {
    for (const auto &[key, c] : counts[o - 1]) {
      std::string ctx;
      if (o > 1) {
        auto cut = key.rfind(' ');
        ctx = key.substr(0, cut);
      }
      auto &stat = context_stats[o - 1][ctx];
      stat.total += c;
      stat.types += 1;
    }
  }

  m.tables_.assign(order, {});

  const double p_uniform =
      1.0 / static_cast<double>(m.vocab_.size() - 1);  // <s> is not predicted

  // interpolated probability of (history, w) given tables built so far
  auto lower_score = [&m](const std::vector<std::string> &hist,
                          const std::string &w) {
    return m.score_mapped(hist, w);
  };

  for (int o = 1; o <= order; ++o) {
    auto &table = m.tables_[o - 1];
    if (o == 1) {
      const auto &stat = context_stats[0].at("");
      const double denom =
          static_cast<double>(stat.total) + static_cast<double>(stat.types);
      for (const auto &w : m.vocab_) {
        if (w == kSentBegin) continue;
        auto it = counts[0].find(w);
        double c = it == counts[0].end() ? 0.0 : static_cast<double>(it->second);
        double p = (c + static_cast<double>(stat.types) * p_uniform) / denom;
        table[w].logp = std::log10(p);
      }
      table[kSentBegin].logp = kSentBeginLogp;
    } else {
      for (const auto &[key, c] : counts[o - 1]) {
        auto toks = split_ws(key);
        std::vector<std::string> ctx(toks.begin(), toks.end() - 1);
        std::vector<std::string> backoff_ctx(ctx.begin() + 1, ctx.end());
        const auto &stat = context_stats[o - 1].at(join(ctx, 0, ctx.size()));
        double t = static_cast<double>(stat.types);
        double p = (static_cast<double>(c) +
                    t * std::pow(10.0, lower_score(backoff_ctx, toks.back()))) /
                   (static_cast<double>(stat.total) + t);
        table[key].logp = std::log10(p);
      }
    }

    // back-off weights for contexts of length o-1 (consumed by o-grams)
    if (o > 1) {
      auto &ctx_table = m.tables_[o - 2];
      for (const auto &[ctx_key, stat] : context_stats[o - 1]) {
        (void)stat;
        auto ctx_toks = split_ws(ctx_key);
        std::vector<std::string> backoff_ctx(ctx_toks.begin() + 1,
                                             ctx_toks.end());
        double seen_mass = 0.0, seen_lower_mass = 0.0;
        long long seen = 0;
        for (const auto &w : m.vocab_) {
          if (w == kSentBegin) continue;
          auto it = counts[o - 1].find(ctx_key + " " + w);
          if (it == counts[o - 1].end()) continue;
          ++seen;
          seen_mass += std::pow(10.0, m.tables_[o - 1].at(it->first).logp);
          seen_lower_mass += std::pow(10.0, lower_score(backoff_ctx, w));
        }
        auto &entry = ctx_table[ctx_key];  // exists for all counted contexts
        entry.has_bow = true;
        if (seen == static_cast<long long>(m.vocab_.size()) - 1) {
          entry.bow = 0.0;  // nothing unseen left to back off to
        } else {
          entry.bow = std::log10((1.0 - seen_mass) / (1.0 - seen_lower_mass));
        }
      }
    }
  }
  return m;
}

double NGramModel::score_mapped(const std::vector<std::string> &hist,
                                const std::string &w) const {
  // longest usable history for this model
  std::size_t max_hist = static_cast<std::size_t>(
      std::min<std::size_t>(hist.size(), static_cast<std::size_t>(order_) - 1));
  std::vector<std::string> h(hist.end() - max_hist, hist.end());

  double backoff_sum = 0.0;
  while (true) {
    std::string key = h.empty() ? w : join(h, 0, h.size()) + " " + w;
    const Entry *e = find(static_cast<int>(h.size()) + 1, key);
    if (e != nullptr) return backoff_sum + e->logp;
    if (h.empty()) {
      // unigram table covers the whole vocabulary
      throw Error(str_cat("token missing from unigram table: ", w));
    }
    const Entry *ctx = find(static_cast<int>(h.size()),
                            join(h, 0, h.size()));
    if (ctx != nullptr && ctx->has_bow) backoff_sum += ctx->bow;
    h.erase(h.begin());
  }
}

double NGramModel::score_word(const std::vector<std::string> &history,
                              const std::string &w) const {
  std::vector<std::string> mapped;
  mapped.reserve(history.size());
  for (const auto &tok : history)
    mapped.push_back(in_vocab(tok) ? tok : kUnknown);
  return score_mapped(mapped, in_vocab(w) ? w : kUnknown);
}

double NGramModel::sentence_logprob(
    const std::vector<std::string> &words) const {
  std::vector<std::string> history{kSentBegin};
  double total = 0.0;
  for (const auto &w : words) {
    total += score_word(history, w);
    history.push_back(in_vocab(w) ? w : kUnknown);
  }
  total += score_word(history, kSentEnd);
  return total;
}

double NGramModel::perplexity(
    const std::vector<std::vector<std::string>> &corpus) const {
  SLU_CHECK(!corpus.empty(), "empty corpus");
  double total = 0.0;
  long long tokens = 0;
  for (const auto &sent : corpus) {
    total += sentence_logprob(sent);
    tokens += static_cast<long long>(sent.size()) + 1;  // + </s>
  }
  return std::pow(10.0, -total / static_cast<double>(tokens));
}

std::string NGramModel::to_arpa() const {
  std::ostringstream os;
  os << "\\data\\\n";
  for (int o = 1; o <= order_; ++o)
    os << "ngram " << o << "=" << tables_[o - 1].size() << "\n";
  for (int o = 1; o <= order_; ++o) {
    os << "\n\\" << o << "-grams:\n";
    for (const auto &[key, e] : tables_[o - 1]) {
      os << format_double(e.logp) << '\t' << key;
      if (e.has_bow) os << '\t' << format_double(e.bow);
      os << '\n';
    }
  }
  os << "\n\\end\\\n";
  return os.str();
}

void NGramModel::write_arpa(const std::string &path) const {
  write_text_file(path, to_arpa());
}

NGramModel NGramModel::read_arpa(const std::string &path) {
  return parse_arpa(read_text_file(path), path);
}

NGramModel NGramModel::parse_arpa(const std::string &text,
                                  const std::string &origin) {
  NGramModel m;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(is, line)) return false;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  // header
  bool found_data = false;
  while (next_line()) {
    if (line == "\\data\\") {
      found_data = true;
      break;
    }
    SLU_CHECK(line.empty(), origin, ":", lineno, ": expected \\data\\ header");
  }
  SLU_CHECK(found_data, origin, ": missing \\data\\ header");

  std::vector<std::size_t> declared;
  while (next_line()) {
    if (line.empty()) break;
    SLU_CHECK(line.rfind("ngram ", 0) == 0, origin, ":", lineno,
              ": expected 'ngram N=count'");
    auto eq = line.find('=');
    SLU_CHECK(eq != std::string::npos, origin, ":", lineno, ": missing '='");
    int o = std::stoi(line.substr(6, eq - 6));
    SLU_CHECK(o == static_cast<int>(declared.size()) + 1, origin, ":", lineno,
              ": orders must be consecutive from 1");
    declared.push_back(std::stoull(line.substr(eq + 1)));
  }
  SLU_CHECK(!declared.empty(), origin, ": no ngram counts declared");
  m.order_ = static_cast<int>(declared.size());
  m.tables_.assign(m.order_, {});

  int current = 0;
  while (next_line()) {
    if (line.empty()) continue;
    if (line == "\\end\\") {
      current = -1;
      break;
    }
    if (line[0] == '\\') {
      auto dash = line.find("-grams:");
      SLU_CHECK(dash != std::string::npos, origin, ":", lineno,
                ": unexpected section ", line);
      current = std::stoi(line.substr(1, dash - 1));
      SLU_CHECK(current >= 1 && current <= m.order_, origin, ":", lineno,
                ": order out of range");
      continue;
    }
    SLU_CHECK(current >= 1, origin, ":", lineno, ": entry before any section");
    // logp <TAB> tokens [<TAB> bow]
    auto tab1 = line.find('\t');
    SLU_CHECK(tab1 != std::string::npos, origin, ":", lineno,
              ": malformed entry");
    auto tab2 = line.find('\t', tab1 + 1);
    Entry e;
    e.logp = parse_double(line.substr(0, tab1),
                          str_cat(origin, ":", lineno));
    std::string key;
    if (tab2 == std::string::npos) {
      key = line.substr(tab1 + 1);
    } else {
      key = line.substr(tab1 + 1, tab2 - tab1 - 1);
      e.bow = parse_double(line.substr(tab2 + 1),
                           str_cat(origin, ":", lineno));
      e.has_bow = true;
    }
    auto toks = split_ws(key);
    SLU_CHECK(static_cast<int>(toks.size()) == current, origin, ":", lineno,
              ": token count does not match section order");
    m.tables_[current - 1][join(toks, 0, toks.size())] = e;
  }
  SLU_CHECK(current == -1, origin, ": missing \\end\\");
  for (int o = 1; o <= m.order_; ++o)
    SLU_CHECK(m.tables_[o - 1].size() == declared[o - 1], origin,
              ": declared ngram ", o, "=", declared[o - 1], " but parsed ",
              m.tables_[o - 1].size());

  std::set<std::string> vocab;
  for (const auto &[key, e] : m.tables_[0]) {
    (void)e;
    vocab.insert(key);
  }
  m.vocab_.assign(vocab.begin(), vocab.end());
  for (std::size_t i = 0; i < m.vocab_.size(); ++i)
    m.vocab_set_[m.vocab_[i]] = static_cast<int>(i);
  SLU_CHECK(m.in_vocab(kUnknown), origin, ": unigram table lacks <unk>");
  return m;
}

}  // namespace slu
