// slu/curriculum.hpp

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

// Chains of training stages. Each stage inherits every parameter of the
// previous stage's best checkpoint except the output head, which is redrawn
// for the stage's alphabet; all parameters then keep training. Chain state
// is persisted after every epoch so interrupted runs resume exactly.

#ifndef SLU_CURRICULUM_HPP_
#define SLU_CURRICULUM_HPP_

#include <optional>
#include <string>
#include <vector>

#include "slu/alphabet.hpp"
#include "slu/net.hpp"
#include "slu/synthdata.hpp"
#include "slu/tag_codec.hpp"

namespace slu {

enum class EvalMetric { kWer, kCer, kCver };

EvalMetric parse_metric(const std::string &name);
const char *metric_name(EvalMetric metric);

struct StageSpec {
  std::string name;
  std::string task_id;
  std::string train_manifest;
  std::string dev_manifest;
  std::string alphabet_path;
  bool starred = false;
  int epochs = 10;
  double lr = 0.03;
  double lr_decay = 0.97;
  int batch_size = 4;
  int patience = 5;
  EvalMetric metric = EvalMetric::kCer;
};

struct ChainSpec {
  std::vector<StageSpec> stages;
  uint64_t seed = 0;
  std::string out_dir;
  std::string inventory_path;
  ModelConfig model;           // alphabet_size filled per stage
  double momentum = 0.9;
  double clip_norm = 400.0;
  std::string start_from;      // optional checkpoint to transplant from
  std::string test_manifest;   // optional final evaluation set
};

ChainSpec parse_chain_config(const std::string &path);

struct StageResult {
  std::string name;
  double best_dev = HUGE_VAL;
  int best_epoch = -1;
  int epochs_run = 0;
  std::string checkpoint_path;
  std::vector<std::string> lineage;
  bool aborted = false;
  std::string diagnostic;
};

struct ChainReport {
  uint64_t seed = 0;
  std::vector<StageResult> stages;
  bool completed = false;
  std::string final_checkpoint;
  // pooled greedy metrics on the optional test manifest
  std::optional<double> test_wer, test_cer, test_cver;

  std::string to_json() const;
};

struct RunOptions {
  bool resume = false;
  int stop_after_stage = -1;  // <0 runs the whole chain
  int workers = 1;
  bool quiet = false;
  // test hook emulating an interruption: throw ChainInterrupted after this
  // many epochs have run in this process (state is already persisted)
  int interrupt_after_epochs = -1;
};

class ChainInterrupted : public Error {
 public:
  using Error::Error;
};

// One link of the chain: epoch loop of SGD over seeded shuffles (first
// epoch in ascending length order), greedy-decoding dev evaluation per
// epoch, best checkpoint kept. Aborts with the last finite checkpoint on a
// non-finite loss.
StageResult run_stage(const StageSpec &spec, const ChainSpec &chain,
                      const ConceptInventory &inventory, Checkpoint start,
                      const std::string &stage_dir, const RunOptions &opts,
                      Checkpoint *best_out);

ChainReport run_chain(const ChainSpec &chain, const RunOptions &opts);

// reinit_head plus lineage marker; lets a saved base seed a new domain.
Checkpoint transplant(const Checkpoint &from, const Alphabet &alphabet);

// Greedy-decoding evaluation of a checkpoint against a manifest.
struct EvalResult {
  double wer = 0.0, cer = 0.0, cver = 0.0;
};
EvalResult evaluate_checkpoint(const Checkpoint &ckpt,
                               const std::string &manifest_path,
                               const Alphabet &alphabet,
                               const ConceptInventory &inventory, int workers);

}  // namespace slu

#endif  // SLU_CURRICULUM_HPP_
