// slu/metrics.cpp

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

#include "slu/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace slu {

AlignmentResult align(const std::vector<std::string> &ref,
                      const std::vector<std::string> &hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  // cost DP plus backpointers; 0=hit/sub diag, 1=ins (left), 2=del (up)
  std::vector<int> cost((n + 1) * (m + 1));
  std::vector<unsigned char> from((n + 1) * (m + 1));
  auto at = [m](std::size_t i, std::size_t j) { return i * (m + 1) + j; };

  for (std::size_t j = 0; j <= m; ++j) {
    cost[at(0, j)] = static_cast<int>(j);
    from[at(0, j)] = 1;
  }
  for (std::size_t i = 0; i <= n; ++i) {
    cost[at(i, 0)] = static_cast<int>(i);
    from[at(i, 0)] = 2;
  }
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      int diag = cost[at(i - 1, j - 1)] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      int ins = cost[at(i, j - 1)] + 1;
      int del = cost[at(i - 1, j)] + 1;
      // tie order: substitution/hit, then insertion, then deletion
      int best = diag;
      unsigned char dir = 0;
      if (ins < best) {
        best = ins;
        dir = 1;
      }
      if (del < best) {
        best = del;
        dir = 2;
      }
      cost[at(i, j)] = best;
      from[at(i, j)] = dir;
    }
  }

  AlignmentResult out;
  out.ref_len = static_cast<int>(n);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    unsigned char dir = from[at(i, j)];
    if (i > 0 && j > 0 && dir == 0) {
      if (ref[i - 1] == hyp[j - 1]) {
        ++out.hits;
        out.ops.push_back(EditOp::kHit);
      } else {
        ++out.subs;
        out.ops.push_back(EditOp::kSub);
      }
      --i;
      --j;
    } else if (j > 0 && (dir == 1 || i == 0)) {
      ++out.ins;
      out.ops.push_back(EditOp::kIns);
      --j;
    } else {
      ++out.dels;
      out.ops.push_back(EditOp::kDel);
      --i;
    }
  }
  std::reverse(out.ops.begin(), out.ops.end());
  return out;
}

std::string normalize_value(const std::string &value) {
  std::string out;
  bool pending_space = false;
  for (char c : value) {
    if (c == ' ' || c == '\t') {
      pending_space = !out.empty();
    } else {
      if (pending_space) out += ' ';
      pending_space = false;
      out += static_cast<char>(
          std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

AlignmentResult wer_counts(const std::vector<std::string> &ref_words,
                           const std::vector<std::string> &hyp_words) {
  return align(ref_words, hyp_words);
}

AlignmentResult cer_counts(const TaggedTranscript &ref,
                           const TaggedTranscript &hyp) {
  return align(concept_sequence(ref), concept_sequence(hyp));
}

namespace {
std::vector<std::string> pair_tokens(const TaggedTranscript &t) {
  std::vector<std::string> out;
  for (const auto &p : extract_pairs(t))
    out.push_back(p.name + "\x1f" + normalize_value(p.value));
  return out;
}
}  // namespace

AlignmentResult cver_counts(const TaggedTranscript &ref,
                            const TaggedTranscript &hyp) {
  return align(pair_tokens(ref), pair_tokens(hyp));
}

double wer(const std::vector<std::string> &ref_words,
           const std::vector<std::string> &hyp_words) {
  return wer_counts(ref_words, hyp_words).rate();
}

double cer(const TaggedTranscript &ref, const TaggedTranscript &hyp) {
  return cer_counts(ref, hyp).rate();
}

double cver(const TaggedTranscript &ref, const TaggedTranscript &hyp) {
  return cver_counts(ref, hyp).rate();
}

namespace {

// Regularized incomplete beta via the standard continued fraction.
double betacf(double a, double b, double x) {
  const int kMaxIter = 300;
  const double kEps = 3e-16, kFpmin = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpmin) d = kFpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpmin) d = kFpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpmin) c = kFpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpmin) d = kFpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpmin) c = kFpmin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

double betai(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log(1.0 - x));
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, int df) {
  double p = 0.5 * betai(0.5 * df, 0.5, df / (df + t * t));
  return t > 0 ? 1.0 - p : p;
}

}  // namespace

double student_t_quantile_975(int df) {
  SLU_CHECK(df >= 1, "t quantile needs df >= 1");
  double lo = 0.0, hi = 1e6;
  for (int iter = 0; iter < 200; ++iter) {
    double mid = 0.5 * (lo + hi);
    if (student_t_cdf(mid, df) < 0.975)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double t_confidence_margin_95(const std::vector<double> &values) {
  const std::size_t n = values.size();
  SLU_CHECK(n >= 2, "confidence margin needs at least 2 values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return student_t_quantile_975(static_cast<int>(n) - 1) * sd /
         std::sqrt(static_cast<double>(n));
}

}  // namespace slu
