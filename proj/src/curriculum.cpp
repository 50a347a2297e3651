// slu/curriculum.cpp

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

#include "slu/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "slu/ctc.hpp"
#include "slu/decoder.hpp"
#include "slu/featurizer.hpp"
#include "slu/metrics.hpp"
#include "slu/rng.hpp"
#include "slu/utf8.hpp"

namespace slu {

namespace fs = std::filesystem;

EvalMetric parse_metric(const std::string &name) {
  if (name == "wer" || name == "WER") return EvalMetric::kWer;
  if (name == "cer" || name == "CER") return EvalMetric::kCer;
  if (name == "cver" || name == "CVER") return EvalMetric::kCver;
  throw Error(str_cat("unknown metric: ", name, " (want wer|cer|cver)"));
}

const char *metric_name(EvalMetric metric) {
  switch (metric) {
    case EvalMetric::kWer:
      return "wer";
    case EvalMetric::kCer:
      return "cer";
    default:
      return "cver";
  }
}

// ---------------------------------------------------------------------------
// config file

namespace {

std::string trim(const std::string &s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string &v, const std::string &where) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(str_cat(where, ": expected a boolean, got '", v, "'"));
}

std::vector<ConvSpec> parse_convs(const std::string &v,
                                  const std::string &where) {
  std::vector<ConvSpec> out;
  if (trim(v).empty() || trim(v) == "none") return out;
  std::istringstream is(v);
  std::string one;
  while (std::getline(is, one, ',')) {
    ConvSpec spec;
    int got = std::sscanf(trim(one).c_str(), "%dx%dx%dx%dx%d",
                          &spec.out_channels, &spec.kernel_t, &spec.kernel_f,
                          &spec.stride_t, &spec.stride_f);
    SLU_CHECK(got == 5, where, ": conv spec must be CxKTxKFxSTxSF, got '", one,
              "'");
    out.push_back(spec);
  }
  return out;
}

}  // namespace

ChainSpec parse_chain_config(const std::string &path) {
  ChainSpec chain;
  std::istringstream is(read_text_file(path));
  std::string line;
  int lineno = 0;
  StageSpec *stage = nullptr;
  bool saw_model_flag = false;

  while (std::getline(is, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::string where = str_cat(path, ":", lineno);
    if (t.front() == '[') {
      SLU_CHECK(t.back() == ']', where, ": unterminated section header");
      auto inner = trim(t.substr(1, t.size() - 2));
      SLU_CHECK(inner.rfind("stage", 0) == 0, where,
                ": only [stage NAME] sections are allowed");
      std::string name = trim(inner.substr(5));
      SLU_CHECK(!name.empty(), where, ": stage needs a name");
      for (const auto &s : chain.stages)
        SLU_CHECK(s.name != name, where, ": duplicate stage name ", name);
      chain.stages.emplace_back();
      stage = &chain.stages.back();
      stage->name = name;
      continue;
    }
    auto eq = t.find('=');
    SLU_CHECK(eq != std::string::npos, where, ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    SLU_CHECK(!key.empty() && !value.empty(), where, ": empty key or value");

    if (stage == nullptr) {
      if (key == "seed") {
        chain.seed = std::stoull(value);
      } else if (key == "out_dir") {
        chain.out_dir = value;
      } else if (key == "inventory") {
        chain.inventory_path = value;
      } else if (key == "momentum") {
        chain.momentum = std::stod(value);
      } else if (key == "clip_norm") {
        chain.clip_norm = std::stod(value);
      } else if (key == "start_from") {
        chain.start_from = value;
      } else if (key == "test") {
        chain.test_manifest = value;
      } else if (key == "model.input_features") {
        chain.model.input_features = std::stoi(value);
        saw_model_flag = true;
      } else if (key == "model.convs") {
        chain.model.convs = parse_convs(value, where);
        saw_model_flag = true;
      } else if (key == "model.rnn_layers") {
        chain.model.rnn_layers = std::stoi(value);
      } else if (key == "model.rnn_hidden") {
        chain.model.rnn_hidden = std::stoi(value);
      } else if (key == "model.fc_size") {
        chain.model.fc_size = std::stoi(value);
      } else if (key == "model.batch_norm") {
        chain.model.batch_norm = parse_bool(value, where);
      } else if (key == "model.act_clip") {
        chain.model.act_clip = std::stod(value);
      } else {
        throw Error(str_cat(where, ": unknown chain key '", key, "'"));
      }
    } else {
      if (key == "task") {
        stage->task_id = value;
      } else if (key == "train") {
        stage->train_manifest = value;
      } else if (key == "dev") {
        stage->dev_manifest = value;
      } else if (key == "alphabet") {
        stage->alphabet_path = value;
      } else if (key == "starred") {
        stage->starred = parse_bool(value, where);
      } else if (key == "epochs") {
        stage->epochs = std::stoi(value);
      } else if (key == "lr") {
        stage->lr = std::stod(value);
      } else if (key == "lr_decay") {
        stage->lr_decay = std::stod(value);
      } else if (key == "batch") {
        stage->batch_size = std::stoi(value);
      } else if (key == "patience") {
        stage->patience = std::stoi(value);
      } else if (key == "metric") {
        stage->metric = parse_metric(value);
      } else {
        throw Error(str_cat(where, ": unknown stage key '", key, "'"));
      }
    }
  }
  SLU_CHECK(!chain.stages.empty(), path, ": chain declares no stages");
  SLU_CHECK(saw_model_flag, path, ": missing model.* settings");
  SLU_CHECK(!chain.out_dir.empty(), path, ": missing out_dir");
  SLU_CHECK(!chain.inventory_path.empty(), path, ": missing inventory");
  for (const auto &s : chain.stages) {
    SLU_CHECK(!s.train_manifest.empty(), path, ": stage ", s.name,
              " missing train manifest");
    SLU_CHECK(!s.dev_manifest.empty(), path, ": stage ", s.name,
              " missing dev manifest");
    SLU_CHECK(!s.alphabet_path.empty(), path, ": stage ", s.name,
              " missing alphabet");
    SLU_CHECK(s.epochs >= 0 && s.batch_size >= 1, path, ": stage ", s.name,
              " has a bad schedule");
  }
  return chain;
}

// ---------------------------------------------------------------------------
// stage training

namespace {

struct LoadedUtterance {
  std::string id;
  Tensor<float> features;
  TaggedTranscript transcript;
  std::vector<int> target;  // alphabet indices of the (possibly starred) text
};

std::vector<LoadedUtterance> load_set(const std::string &manifest_path,
                                      const Alphabet &alphabet,
                                      const ConceptInventory &inventory,
                                      bool starred, int workers) {
  auto entries = read_manifest(manifest_path);
  SLU_CHECK(!entries.empty(), "empty manifest: ", manifest_path);
  std::vector<LoadedUtterance> out(entries.size());
  parallel_for(entries.size(), workers, [&](std::size_t i) {
    const auto &e = entries[i];
    LoadedUtterance utt;
    utt.id = e.id;
    auto spec = read_features(e.feature_path, e.id);
    utt.features = spec.frames.cast<float>();
    auto target_chars = utf8_decode(e.target_text);
    auto [transcript, repairs] = decode(target_chars, inventory);
    SLU_CHECK(repairs.empty(), "reference target does not decode cleanly: ",
              e.id);
    utt.transcript = std::move(transcript);
    std::u32string text = starred ? encode(utt.transcript, inventory, true)
                                  : target_chars;
    utt.target = alphabet.encode(text);
    out[i] = std::move(utt);
  });
  return out;
}

double pooled_metric(EvalMetric metric,
                     const std::vector<AlignmentResult> &counts) {
  PooledCounts pooled;
  for (const auto &c : counts) pooled.add(c);
  return pooled.rate();
}

double eval_dev(Net<float> &net, const std::vector<LoadedUtterance> &dev,
                const Alphabet &alphabet, const ConceptInventory &inventory,
                EvalMetric metric, int workers) {
  std::vector<AlignmentResult> counts(dev.size());
  parallel_for(dev.size(), workers, [&](std::size_t i) {
    auto ws = net.forward({&dev[i].features}, RunMode::kInfer);
    auto text = greedy_decode(ws.logprobs.ptr(), ws.out_lengths[0],
                              alphabet.size(), alphabet);
    auto [hyp, repairs] = decode(text, inventory);
    (void)repairs;
    switch (metric) {
      case EvalMetric::kWer:
        counts[i] = wer_counts(word_sequence(dev[i].transcript),
                               word_sequence(hyp));
        break;
      case EvalMetric::kCer:
        counts[i] = cer_counts(dev[i].transcript, hyp);
        break;
      case EvalMetric::kCver:
        counts[i] = cver_counts(dev[i].transcript, hyp);
        break;
    }
  });
  return pooled_metric(metric, counts);
}

// optimizer velocity sidecar, needed for exact mid-stage resumption
void save_velocity(const std::string &path,
                   const std::vector<std::pair<std::string, Tensor<float>>> &v) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  SLU_CHECK(out.good(), "cannot open for writing: ", path);
  out.write("SLUM", 4);
  uint32_t n = static_cast<uint32_t>(v.size());
  out.write(reinterpret_cast<char *>(&n), 4);
  for (const auto &[name, tensor] : v) {
    uint32_t len = static_cast<uint32_t>(name.size());
    out.write(reinterpret_cast<char *>(&len), 4);
    out.write(name.data(), len);
    uint32_t rank = static_cast<uint32_t>(tensor.shape.size());
    out.write(reinterpret_cast<char *>(&rank), 4);
    for (int d : tensor.shape) {
      uint32_t dd = static_cast<uint32_t>(d);
      out.write(reinterpret_cast<char *>(&dd), 4);
    }
    out.write(reinterpret_cast<const char *>(tensor.data.data()),
              static_cast<std::streamsize>(tensor.data.size() * 4));
  }
  SLU_CHECK(out.good(), "write failed: ", path);
}

std::vector<std::pair<std::string, Tensor<float>>> load_velocity(
    const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  SLU_CHECK(in.good(), "cannot open: ", path);
  char magic[4];
  in.read(magic, 4);
  SLU_CHECK(in.gcount() == 4 && std::string(magic, 4) == "SLUM",
            "bad optimizer state file: ", path);
  uint32_t n = 0;
  in.read(reinterpret_cast<char *>(&n), 4);
  std::vector<std::pair<std::string, Tensor<float>>> out;
  for (uint32_t i = 0; i < n; ++i) {
    uint32_t len = 0;
    in.read(reinterpret_cast<char *>(&len), 4);
    std::string name(len, '\0');
    in.read(name.data(), len);
    uint32_t rank = 0;
    in.read(reinterpret_cast<char *>(&rank), 4);
    std::vector<int> shape(rank);
    for (auto &d : shape) {
      uint32_t dd = 0;
      in.read(reinterpret_cast<char *>(&dd), 4);
      d = static_cast<int>(dd);
    }
    Tensor<float> t(shape);
    in.read(reinterpret_cast<char *>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * 4));
    SLU_CHECK(in.good(), "truncated optimizer state: ", path);
    out.emplace_back(std::move(name), std::move(t));
  }
  return out;
}

struct StageState {
  int epochs_done = 0;
  double best_dev = HUGE_VAL;
  int best_epoch = -1;
  int since_best = 0;
};

void save_stage_state(const std::string &path, const StageState &st) {
  nlohmann::json j{{"epochs_done", st.epochs_done},
                   {"best_dev", st.best_dev},
                   {"best_epoch", st.best_epoch},
                   {"since_best", st.since_best}};
  write_text_file(path, j.dump(2) + "\n");
}

StageState load_stage_state(const std::string &path) {
  auto j = nlohmann::json::parse(read_text_file(path));
  StageState st;
  st.epochs_done = j.at("epochs_done").get<int>();
  st.best_dev = j.at("best_dev").is_null() ? HUGE_VAL
                                           : j.at("best_dev").get<double>();
  st.best_epoch = j.at("best_epoch").get<int>();
  st.since_best = j.at("since_best").get<int>();
  return st;
}

}  // namespace

namespace {
thread_local int g_epochs_this_run = 0;
}

StageResult run_stage(const StageSpec &spec, const ChainSpec &chain,
                      const ConceptInventory &inventory, Checkpoint start,
                      const std::string &stage_dir, const RunOptions &opts,
                      Checkpoint *best_out) {
  fs::create_directories(stage_dir);
  auto alphabet = Alphabet::load(spec.alphabet_path);
  SLU_CHECK(start.config.alphabet_size == alphabet.size() &&
                start.alphabet_id == alphabet.id(),
            "stage ", spec.name, ": starting checkpoint head (",
            start.alphabet_id, ") is not bound to the stage alphabet (",
            alphabet.id(), ")");

  auto train =
      load_set(spec.train_manifest, alphabet, inventory, spec.starred,
               opts.workers);
  auto dev = load_set(spec.dev_manifest, alphabet, inventory, spec.starred,
                      opts.workers);

  // CTC feasibility of every training target under this model's time strides
  for (const auto &utt : train) {
    int t_out = chain.model.conv_out_time(utt.features.shape[0]);
    SLU_CHECK(ctc_min_frames(utt.target) <= t_out, "stage ", spec.name,
              ": utterance ", utt.id, " target needs ",
              ctc_min_frames(utt.target), " frames but the model emits ",
              t_out);
  }

  const std::string last_path = stage_dir + "/last.sluc";
  const std::string best_path = stage_dir + "/best.sluc";
  const std::string velocity_path = stage_dir + "/velocity.slum";
  const std::string state_path = stage_dir + "/state.json";

  Net<float> net = Net<float>::from_checkpoint(start);
  SgdOptimizer<float> optimizer;
  optimizer.momentum = chain.momentum;
  optimizer.clip_norm = chain.clip_norm;

  StageState state;
  Checkpoint best = start;
  if (opts.resume && fs::exists(state_path)) {
    state = load_stage_state(state_path);
    if (state.epochs_done > 0) {
      net = Net<float>::from_checkpoint(load_checkpoint(last_path));
      best = load_checkpoint(best_path);
      optimizer.velocity() = load_velocity(velocity_path);
    }
  }

  StageResult result;
  result.name = spec.name;
  result.lineage = start.lineage;

  if (spec.epochs == 0) {
    // head already reinitialized by the caller; nothing to train
    save_checkpoint(best, best_path);
    save_stage_state(state_path, state);
    result.checkpoint_path = best_path;
    result.best_dev = HUGE_VAL;
    *best_out = best;
    return result;
  }

  for (int epoch = state.epochs_done; epoch < spec.epochs; ++epoch) {
    optimizer.lr = spec.lr * std::pow(spec.lr_decay, epoch);

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (epoch == 0) {
      // length-ordered warmup epoch; shortest utterances anchor the
      // alignment before full-length shuffling starts
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) {
                         return train[a].features.shape[0] <
                                train[b].features.shape[0];
                       });
    } else {
      Rng shuffle_rng(derive_seed(chain.seed, fnv1a64(spec.name),
                                  static_cast<uint64_t>(epoch)));
      shuffle_rng.shuffle(order);
    }

    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(spec.batch_size)) {
      std::size_t end = std::min(order.size(),
                                 begin + static_cast<std::size_t>(spec.batch_size));
      std::vector<const Tensor<float> *> feats;
      std::vector<std::vector<int>> targets;
      for (std::size_t i = begin; i < end; ++i) {
        feats.push_back(&train[order[i]].features);
        targets.push_back(train[order[i]].target);
      }
      auto ws = net.forward(feats, RunMode::kTrain);
      Tensor<float> dlogprobs;
      double loss = ctc_batch_loss(ws.logprobs, ws.out_lengths, targets,
                                   &dlogprobs);
      if (!std::isfinite(loss)) {
        result.aborted = true;
        result.diagnostic = str_cat("non-finite loss in stage ", spec.name,
                                    ", epoch ", epoch, ", batch ", batches);
        result.epochs_run = epoch;
        result.best_dev = state.best_dev;
        result.best_epoch = state.best_epoch;
        result.checkpoint_path = best_path;
        save_checkpoint(best, best_path);
        *best_out = best;
        return result;
      }
      epoch_loss += loss;
      ++batches;
      net.zero_grads();
      net.backward(ws, dlogprobs);
      optimizer.step(net);
    }

    double dev_metric = eval_dev(net, dev, alphabet, inventory, spec.metric,
                                 opts.workers);
    ++state.epochs_done;
    bool improved = dev_metric < state.best_dev;
    if (improved) {
      state.best_dev = dev_metric;
      state.best_epoch = epoch;
      state.since_best = 0;
      best = net.to_checkpoint(alphabet.id(), start.lineage);
      save_checkpoint(best, best_path);
    } else {
      ++state.since_best;
    }
    save_checkpoint(net.to_checkpoint(alphabet.id(), start.lineage), last_path);
    save_velocity(velocity_path, optimizer.velocity());
    save_stage_state(state_path, state);
    if (!opts.quiet)
      std::fprintf(stderr,
                   "[%s] epoch %d loss %.4f dev %s %.4f (best %.4f @%d)\n",
                   spec.name.c_str(), epoch, epoch_loss / std::max(1, batches),
                   metric_name(spec.metric), dev_metric, state.best_dev,
                   state.best_epoch);
    if (opts.interrupt_after_epochs >= 0 &&
        ++g_epochs_this_run >= opts.interrupt_after_epochs)
      throw ChainInterrupted(str_cat("interrupted after epoch ", epoch,
                                     " of stage ", spec.name));
    if (spec.patience > 0 && state.since_best >= spec.patience) break;
  }

  result.best_dev = state.best_dev;
  result.best_epoch = state.best_epoch;
  result.epochs_run = state.epochs_done;
  result.checkpoint_path = best_path;
  if (!fs::exists(best_path)) save_checkpoint(best, best_path);
  *best_out = best;
  return result;
}

// ---------------------------------------------------------------------------
// chain

Checkpoint transplant(const Checkpoint &from, const Alphabet &alphabet) {
  return reinit_head(from, alphabet.size(), alphabet.id());
}

namespace {

void assert_body_continuity(const Checkpoint &prev, const Checkpoint &next,
                            const std::string &stage) {
  SLU_CHECK(prev.tensors.size() == next.tensors.size(),
            "body continuity broken entering ", stage);
  for (std::size_t i = 0; i < prev.tensors.size(); ++i) {
    const auto &[name, tensor] = prev.tensors[i];
    if (name == "head.w" || name == "head.b") continue;
    SLU_CHECK(next.tensors[i].first == name &&
                  next.tensors[i].second.shape == tensor.shape &&
                  next.tensors[i].second.data == tensor.data,
              "body tensor ", name, " changed entering stage ", stage);
  }
}

struct ChainState {
  int stages_done = 0;
};

void save_chain_state(const std::string &path, const ChainState &st) {
  nlohmann::json j{{"stages_done", st.stages_done}};
  write_text_file(path, j.dump(2) + "\n");
}

ChainState load_chain_state(const std::string &path) {
  auto j = nlohmann::json::parse(read_text_file(path));
  ChainState st;
  st.stages_done = j.at("stages_done").get<int>();
  return st;
}

}  // namespace

EvalResult evaluate_checkpoint(const Checkpoint &ckpt,
                               const std::string &manifest_path,
                               const Alphabet &alphabet,
                               const ConceptInventory &inventory,
                               int workers) {
  SLU_CHECK(ckpt.alphabet_id == alphabet.id(),
            "checkpoint head is bound to a different alphabet");
  Net<float> net = Net<float>::from_checkpoint(ckpt);
  auto entries = read_manifest(manifest_path);
  std::vector<AlignmentResult> wer_acc(entries.size()), cer_acc(entries.size()),
      cver_acc(entries.size());
  parallel_for(entries.size(), workers, [&](std::size_t i) {
    auto spec = read_features(entries[i].feature_path, entries[i].id);
    auto feats = spec.frames.cast<float>();
    auto ws = net.forward({&feats}, RunMode::kInfer);
    auto text = greedy_decode(ws.logprobs.ptr(), ws.out_lengths[0],
                              alphabet.size(), alphabet);
    auto [hyp, repairs] = decode(text, inventory);
    (void)repairs;
    auto [ref, ref_repairs] =
        decode(utf8_decode(entries[i].target_text), inventory);
    (void)ref_repairs;
    wer_acc[i] = wer_counts(word_sequence(ref), word_sequence(hyp));
    cer_acc[i] = cer_counts(ref, hyp);
    cver_acc[i] = cver_counts(ref, hyp);
  });
  PooledCounts w, c, cv;
  for (const auto &a : wer_acc) w.add(a);
  for (const auto &a : cer_acc) c.add(a);
  for (const auto &a : cver_acc) cv.add(a);
  return {w.rate(), c.rate(), cv.rate()};
}

std::string ChainReport::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["completed"] = completed;
  j["final_checkpoint"] = final_checkpoint;
  j["stages"] = nlohmann::json::array();
  for (const auto &s : stages) {
    nlohmann::json js{{"name", s.name},
                      {"best_dev", s.best_dev},
                      {"best_epoch", s.best_epoch},
                      {"epochs_run", s.epochs_run},
                      {"checkpoint", s.checkpoint_path},
                      {"lineage", s.lineage},
                      {"aborted", s.aborted}};
    if (s.aborted) js["diagnostic"] = s.diagnostic;
    j["stages"].push_back(js);
  }
  if (test_wer) {
    j["test"] = nlohmann::json{
        {"wer", *test_wer}, {"cer", *test_cer}, {"cver", *test_cver}};
  }
  return j.dump(2) + "\n";
}

ChainReport run_chain(const ChainSpec &chain, const RunOptions &opts) {
  SLU_CHECK(!chain.stages.empty(), "chain declares no stages");
  g_epochs_this_run = 0;
  // resolve everything before any training starts
  auto inventory = ConceptInventory::load(chain.inventory_path);
  std::vector<Alphabet> alphabets;
  for (const auto &stage : chain.stages) {
    SLU_CHECK(fs::exists(stage.train_manifest), "stage ", stage.name,
              ": missing train manifest ", stage.train_manifest);
    SLU_CHECK(fs::exists(stage.dev_manifest), "stage ", stage.name,
              ": missing dev manifest ", stage.dev_manifest);
    alphabets.push_back(Alphabet::load(stage.alphabet_path));
  }
  fs::create_directories(chain.out_dir);
  const std::string state_path = chain.out_dir + "/chain_state.json";
  const std::string report_path = chain.out_dir + "/report.json";

  ChainState state;
  if (opts.resume && fs::exists(state_path))
    state = load_chain_state(state_path);

  ChainReport report;
  report.seed = chain.seed;

  // starting point: fresh init or a transplanted checkpoint
  Checkpoint current;
  if (chain.start_from.empty()) {
    ModelConfig cfg = chain.model;
    cfg.alphabet_size = alphabets[0].size();
    Net<float> net(cfg, chain.seed);
    current = net.to_checkpoint(alphabets[0].id(), {});
  } else {
    auto base = load_checkpoint(chain.start_from);
    ModelConfig expect = chain.model;
    expect.alphabet_size = base.config.alphabet_size;
    check_checkpoint_config(base, expect);
    current = transplant(base, alphabets[0]);
  }

  for (int k = 0; k < static_cast<int>(chain.stages.size()); ++k) {
    const auto &spec = chain.stages[static_cast<std::size_t>(k)];
    const std::string stage_dir = chain.out_dir + "/" + spec.name;
    Checkpoint stage_start;
    if (k == 0) {
      stage_start = current;
    } else {
      stage_start = reinit_head(current, alphabets[k].size(),
                                alphabets[k].id());
      assert_body_continuity(current, stage_start, spec.name);
    }
    stage_start.lineage.push_back(spec.name);

    if (k < state.stages_done) {
      // already finished in a previous run; reload its best checkpoint
      Checkpoint best = load_checkpoint(stage_dir + "/best.sluc");
      StageResult done;
      done.name = spec.name;
      done.checkpoint_path = stage_dir + "/best.sluc";
      done.lineage = best.lineage;
      auto st = load_stage_state(stage_dir + "/state.json");
      done.best_dev = st.best_dev;
      done.best_epoch = st.best_epoch;
      done.epochs_run = st.epochs_done;
      report.stages.push_back(done);
      current = best;
      continue;
    }

    Checkpoint best;
    auto result = run_stage(spec, chain, inventory, stage_start, stage_dir,
                            opts, &best);
    report.stages.push_back(result);
    current = best;

    if (result.aborted) {
      write_text_file(report_path, report.to_json());
      save_chain_state(state_path, state);
      return report;
    }
    state.stages_done = k + 1;
    save_chain_state(state_path, state);
    if (opts.stop_after_stage >= 0 && k >= opts.stop_after_stage) {
      write_text_file(report_path, report.to_json());
      return report;
    }
  }

  report.completed = true;
  report.final_checkpoint = report.stages.back().checkpoint_path;
  if (!chain.test_manifest.empty()) {
    auto eval = evaluate_checkpoint(current, chain.test_manifest,
                                    alphabets.back(), inventory, opts.workers);
    report.test_wer = eval.wer;
    report.test_cer = eval.cer;
    report.test_cver = eval.cver;
  }
  write_text_file(report_path, report.to_json());
  return report;
}

}  // namespace slu
