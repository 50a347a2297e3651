// slu/synthdata.hpp

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

// Seeded synthetic corpora emulating the task ladder: generic transcription,
// coarse entity tags, merged-domain slot filling, and two target domains
// with overlapping concept sets. Features are synthesized directly in
// spectrogram space from per-character prototypes.

#ifndef SLU_SYNTHDATA_HPP_
#define SLU_SYNTHDATA_HPP_

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "slu/alphabet.hpp"
#include "slu/tag_codec.hpp"
#include "slu/tensor.hpp"

namespace slu {

struct SlotRef {
  std::string concept_name;  // tag to emit
  std::string value_class;   // lexicon the value is drawn from
};

using TemplateItem = std::variant<std::string, SlotRef>;

struct GrammarTemplate {
  double weight = 1.0;
  std::vector<TemplateItem> items;
};

struct TaskSpec {
  std::string task_id;
  std::vector<GrammarTemplate> templates;
  // value_class -> candidate values (each possibly multiword)
  std::map<std::string, std::vector<std::vector<std::string>>> lexicon;
  std::vector<std::string> concepts;  // empty for plain transcription
  int n_utterances = 2500;
  double noise_sigma = 0.3;
  bool duration_jitter = true;
  uint64_t seed = 0;
};

struct LadderOptions {
  uint64_t seed = 0;
  int feature_dim = 16;       // F
  int frames_per_char = 4;    // K
  double noise_sigma = 0.3;
  // characters share a common base pattern; contrast scales how far each
  // character departs from it (smaller -> more confusable, more data needed)
  double prototype_contrast = 1.0;
  // per-instance variability drawn from a style subspace shared by all
  // characters (speaker/coarticulation analog); 0 disables
  int style_dims = 0;
  double style_strength = 0.0;
  bool duration_jitter = true;
  // utterances per rung (train+dev+test pooled, split 80/10/10 by id hash)
  int n_asr = 2500;
  int n_ner = 2500;
  int n_sf_domain = 2500;  // per target domain
  int n_sf_merged = 2500;
};

struct Ladder {
  LadderOptions opts;
  ConceptInventory inventory;  // all rungs' concepts, one symbol table
  // per-character feature templates, K x F
  std::map<char32_t, Tensor<double>> prototypes;
  TaskSpec asr;        // rung 1: words only
  TaskSpec ner;        // rung 2: three coarse concepts
  TaskSpec sf_merged;  // rung 3: union of both domains
  TaskSpec sf_a;       // rung 4: target domain
  TaskSpec sf_b;       // second domain (portability experiments)
  std::vector<Tensor<double>> style_basis;  // shared variability directions

  std::vector<const TaskSpec *> rungs() const {
    return {&asr, &ner, &sf_merged, &sf_a};
  }
  // symbols of one task's output alphabet: base chars, its tag symbols,
  // close, star (star only when the task has concepts)
  Alphabet task_alphabet(const TaskSpec &task) const;
};

Ladder make_task_ladder(const LadderOptions &opts);

struct GeneratedUtterance {
  std::string id;
  TaggedTranscript transcript;
  std::string target_text;  // UTF-8 encoded plain (non-starred) target
  Tensor<double> features;  // T x F
};

// Deterministic sample of the grammar plus feature synthesis for one index.
GeneratedUtterance synthesize_utterance(const Ladder &ladder,
                                        const TaskSpec &task, int index);

enum class Split { kTrain, kDev, kTest };
Split split_of(const std::string &id, uint64_t seed);

struct CorpusPaths {
  std::string train_manifest, dev_manifest, test_manifest, alphabet_file;
};

// Writes feats/<id>.sluf, {train,dev,test}.jsonl and alphabet.txt under
// out_dir/<task_id>/. Parallel across utterances; the manifests are written
// in index order.
CorpusPaths gen_corpus(const Ladder &ladder, const TaskSpec &task,
                       const std::string &out_dir, int workers = 1);

struct ManifestEntry {
  std::string id;
  std::string feature_path;
  std::string target_text;
  int duration_frames = 0;
};

std::vector<ManifestEntry> read_manifest(const std::string &path);
void write_manifest(const std::string &path,
                    const std::vector<ManifestEntry> &entries);

}  // namespace slu

#endif  // SLU_SYNTHDATA_HPP_
