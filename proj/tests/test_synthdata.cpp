#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "slu/ctc.hpp"
#include "slu/decoder.hpp"
#include "slu/featurizer.hpp"
#include "slu/metrics.hpp"
#include "slu/net.hpp"
#include "slu/synthdata.hpp"
#include "slu/utf8.hpp"

using namespace slu;

namespace {

LadderOptions small_opts(uint64_t seed) {
  LadderOptions opts;
  opts.seed = seed;
  opts.feature_dim = 8;
  opts.frames_per_char = 3;
  opts.noise_sigma = 0.3;
  opts.n_asr = 40;
  opts.n_ner = 40;
  opts.n_sf_domain = 40;
  opts.n_sf_merged = 40;
  return opts;
}

}  // namespace

TEST_CASE("ladder structure: rung concepts and alphabets nest correctly") {
  auto ladder = make_task_ladder(small_opts(5));
  CHECK(ladder.asr.concepts.empty());

  std::set<std::string> merged(ladder.sf_merged.concepts.begin(),
                               ladder.sf_merged.concepts.end());
  for (const auto &c : ladder.sf_a.concepts) CHECK(merged.count(c) == 1);
  for (const auto &c : ladder.sf_b.concepts) CHECK(merged.count(c) == 1);
  // the two target domains overlap but are not equal
  std::set<std::string> a(ladder.sf_a.concepts.begin(),
                          ladder.sf_a.concepts.end());
  std::set<std::string> b(ladder.sf_b.concepts.begin(),
                          ladder.sf_b.concepts.end());
  std::set<std::string> common;
  for (const auto &c : a)
    if (b.count(c)) common.insert(c);
  CHECK(!common.empty());
  CHECK(a != b);

  // every rung's alphabet is contained in rung 3's plus tag symbols
  auto merged_alpha = ladder.task_alphabet(ladder.sf_merged);
  std::set<char32_t> allowed;
  for (int i = 1; i < merged_alpha.size(); ++i)
    allowed.insert(merged_alpha.symbol(i));
  for (const auto &name : ladder.inventory.concepts())
    allowed.insert(ladder.inventory.open_symbol(name));
  allowed.insert(ladder.inventory.close_symbol());
  allowed.insert(ladder.inventory.star_symbol());
  for (const TaskSpec *task : ladder.rungs()) {
    auto alpha = ladder.task_alphabet(*task);
    for (int i = 1; i < alpha.size(); ++i)
      CHECK(allowed.count(alpha.symbol(i)) == 1);
  }
}

TEST_CASE("prototypes are pairwise distinguishable") {
  auto ladder = make_task_ladder(small_opts(11));
  const double min_dist =
      0.75 * std::sqrt(static_cast<double>(3 * 8));
  for (auto it = ladder.prototypes.begin(); it != ladder.prototypes.end();
       ++it) {
    auto jt = it;
    for (++jt; jt != ladder.prototypes.end(); ++jt) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < it->second.data.size(); ++i) {
        double d = it->second.data[i] - jt->second.data[i];
        d2 += d * d;
      }
      CHECK(std::sqrt(d2) >= min_dist);
    }
  }
}

TEST_CASE("same seed reproduces utterances bit for bit; seeds differ") {
  auto ladder1 = make_task_ladder(small_opts(77));
  auto ladder2 = make_task_ladder(small_opts(77));
  auto ladder3 = make_task_ladder(small_opts(78));
  bool any_diff = false;
  for (int i = 0; i < 10; ++i) {
    auto a = synthesize_utterance(ladder1, ladder1.sf_a, i);
    auto b = synthesize_utterance(ladder2, ladder2.sf_a, i);
    auto c = synthesize_utterance(ladder3, ladder3.sf_a, i);
    CHECK(a.id == b.id);
    CHECK(a.target_text == b.target_text);
    REQUIRE(a.features.shape == b.features.shape);
    CHECK(a.features.data == b.features.data);
    if (a.target_text != c.target_text || a.features.shape != c.features.shape ||
        a.features.data != c.features.data)
      any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("sigma=0 without jitter concatenates prototypes exactly") {
  auto opts = small_opts(13);
  opts.noise_sigma = 0.0;
  opts.duration_jitter = false;
  auto ladder = make_task_ladder(opts);
  auto utt = synthesize_utterance(ladder, ladder.asr, 0);

  // rebuild the expected matrix straight from the prototypes
  std::string words;
  for (const auto &w : word_sequence(utt.transcript)) {
    if (!words.empty()) words += ' ';
    words += w;
  }
  auto speech = utf8_decode(words);
  int expected_rows = 0;
  for (char32_t c : speech) expected_rows += c == U' ' ? 9 : 3;
  REQUIRE(utt.features.shape[0] == expected_rows);
  int row = 0;
  for (char32_t c : speech) {
    const auto &proto = ladder.prototypes.at(c);
    int copies = c == U' ' ? 3 : 1;  // pauses stretch each frame
    for (int k = 0; k < 3; ++k)
      for (int r = 0; r < copies; ++r, ++row)
        for (int f = 0; f < 8; ++f)
          CHECK(utt.features(row, f) == proto(k, f));
  }
}

TEST_CASE("targets decode cleanly and stay within the task alphabet") {
  auto ladder = make_task_ladder(small_opts(21));
  for (const TaskSpec *task : ladder.rungs()) {
    auto alphabet = ladder.task_alphabet(*task);
    for (int i = 0; i < 25; ++i) {
      auto utt = synthesize_utterance(ladder, *task, i);
      auto target = utf8_decode(utt.target_text);
      auto [back, repairs] = decode(target, ladder.inventory);
      CHECK(repairs.empty());
      CHECK(back == utt.transcript);
      CHECK_NOTHROW(alphabet.encode(target));
    }
  }
}

TEST_CASE("corpus generation: splits disjoint, manifests deterministic") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "slu_test_synth";
  fs::remove_all(dir);
  auto opts = small_opts(31);
  opts.n_ner = 60;
  auto ladder = make_task_ladder(opts);
  auto paths = gen_corpus(ladder, ladder.ner, dir.string(), 2);

  auto train = read_manifest(paths.train_manifest);
  auto dev = read_manifest(paths.dev_manifest);
  auto test = read_manifest(paths.test_manifest);
  CHECK(train.size() + dev.size() + test.size() == 60);
  CHECK(!train.empty());
  CHECK(!dev.empty());
  std::set<std::string> seen;
  for (const auto *split : {&train, &dev, &test})
    for (const auto &e : *split) {
      CHECK(seen.insert(e.id).second);
      auto spec = read_features(e.feature_path, e.id);
      CHECK(spec.num_frames() == e.duration_frames);
    }

  // regeneration is byte-identical
  auto before = read_text_file(paths.train_manifest);
  gen_corpus(ladder, ladder.ner, dir.string(), 2);
  CHECK(read_text_file(paths.train_manifest) == before);
  fs::remove_all(dir);
}

TEST_CASE("noiseless corpus is learnable to zero dev CER") {
  auto opts = small_opts(41);
  opts.noise_sigma = 0.0;
  opts.duration_jitter = false;
  opts.n_ner = 70;
  auto ladder = make_task_ladder(opts);
  const auto &task = ladder.ner;
  auto alphabet = ladder.task_alphabet(task);

  ModelConfig cfg;
  cfg.input_features = 8;
  cfg.convs = {{8, 5, 5, 2, 2}};
  cfg.rnn_layers = 1;
  cfg.rnn_hidden = 32;
  cfg.fc_size = 32;
  cfg.alphabet_size = alphabet.size();
  cfg.batch_norm = true;
  Net<float> net(cfg, 2024);

  // build train/dev sets in memory
  std::vector<GeneratedUtterance> train, dev;
  for (int i = 0; i < task.n_utterances; ++i) {
    auto utt = synthesize_utterance(ladder, task, i);
    (split_of(utt.id, task.seed) == Split::kDev ? dev : train)
        .push_back(std::move(utt));
  }
  REQUIRE(!dev.empty());

  SgdOptimizer<float> opt;
  opt.momentum = 0.9;
  Rng shuffle_rng(7);
  const int batch_size = 4;
  for (int epoch = 0; epoch < 50; ++epoch) {
    opt.lr = 0.03 * std::pow(0.97, epoch);
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (epoch == 0) {
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) {
                         return train[a].features.shape[0] <
                                train[b].features.shape[0];
                       });
    } else {
      shuffle_rng.shuffle(order);
    }
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      std::vector<Tensor<float>> feats;
      std::vector<const Tensor<float> *> batch;
      std::vector<std::vector<int>> targets;
      for (std::size_t i = start;
           i < std::min(order.size(), start + batch_size); ++i) {
        const auto &utt = train[order[i]];
        feats.push_back(utt.features.cast<float>());
        targets.push_back(
            alphabet.encode(utf8_decode(utt.target_text)));
      }
      for (auto &f : feats) batch.push_back(&f);
      auto ws = net.forward(batch, RunMode::kTrain);
      Tensor<float> dlp;
      ctc_batch_loss(ws.logprobs, ws.out_lengths, targets, &dlp);
      net.zero_grads();
      net.backward(ws, dlp);
      opt.step(net);
    }
  }

  PooledCounts pooled;
  for (const auto &utt : dev) {
    auto feats = utt.features.cast<float>();
    auto ws = net.forward({&feats}, RunMode::kInfer);
    auto text = greedy_decode(ws.logprobs.ptr(), ws.out_lengths[0],
                              alphabet.size(), alphabet);
    auto [hyp, repairs] = decode(text, ladder.inventory);
    (void)repairs;
    pooled.add(cer_counts(utt.transcript, hyp));
  }
  CHECK(pooled.rate() == 0.0);
}
