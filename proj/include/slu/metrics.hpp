// slu/metrics.hpp

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

// Minimal-edit alignment and the three error rates: WER on words, CER on
// concept sequences, CVER on (concept, normalized value) pairs. Corpus-level
// rates pool counts before dividing.

#ifndef SLU_METRICS_HPP_
#define SLU_METRICS_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "slu/tag_codec.hpp"

namespace slu {

enum class EditOp { kHit, kSub, kIns, kDel };

struct AlignmentResult {
  int subs = 0;
  int ins = 0;
  int dels = 0;
  int hits = 0;
  int ref_len = 0;
  std::vector<EditOp> ops;

  int distance() const { return subs + ins + dels; }
  // May exceed 1; empty-ref/empty-hyp pairs score 0.
  double rate() const {
    if (ref_len == 0) return distance() == 0 ? 0.0 : HUGE_VAL;
    return static_cast<double>(distance()) / ref_len;
  }
};

// Unit-cost minimal alignment; ties prefer substitution, then insertion,
// then deletion, so backtraces are deterministic.
AlignmentResult align(const std::vector<std::string> &ref,
                      const std::vector<std::string> &hyp);

AlignmentResult wer_counts(const std::vector<std::string> &ref_words,
                           const std::vector<std::string> &hyp_words);
AlignmentResult cer_counts(const TaggedTranscript &ref,
                           const TaggedTranscript &hyp);
AlignmentResult cver_counts(const TaggedTranscript &ref,
                            const TaggedTranscript &hyp);

double wer(const std::vector<std::string> &ref_words,
           const std::vector<std::string> &hyp_words);
double cer(const TaggedTranscript &ref, const TaggedTranscript &hyp);
double cver(const TaggedTranscript &ref, const TaggedTranscript &hyp);

// lowercase + single-space collapse (CVER's value equality)
std::string normalize_value(const std::string &value);

struct PooledCounts {
  long long subs = 0, ins = 0, dels = 0, ref_len = 0;
  void add(const AlignmentResult &a) {
    subs += a.subs;
    ins += a.ins;
    dels += a.dels;
    ref_len += a.ref_len;
  }
  double rate() const {
    if (ref_len == 0) return (subs + ins + dels) == 0 ? 0.0 : HUGE_VAL;
    return static_cast<double>(subs + ins + dels) / static_cast<double>(ref_len);
  }
};

// Two-sided 97.5% Student-t quantile (for 95% confidence intervals).
double student_t_quantile_975(int df);

// Half-width of the 95% CI of the mean of `values` via Student's t.
double t_confidence_margin_95(const std::vector<double> &values);

}  // namespace slu

#endif  // SLU_METRICS_HPP_
