#include <filesystem>

#include "doctest.h"
#include "slu/ctc.hpp"
#include "slu/curriculum.hpp"
#include "slu/featurizer.hpp"
#include "slu/decoder.hpp"
#include "slu/metrics.hpp"
#include "slu/utf8.hpp"

using namespace slu;
namespace fs = std::filesystem;

namespace {

// Tiny noiseless two-rung world used by most chain tests.
struct World {
  fs::path root;
  Ladder ladder;
  CorpusPaths asr, ner;
  std::string inventory_path;

  explicit World(const std::string &name, uint64_t seed = 7,
                 int n_asr = 60, int n_ner = 50) {
    root = fs::temp_directory_path() / name;
    fs::remove_all(root);
    fs::create_directories(root);
    LadderOptions opts;
    opts.seed = seed;
    opts.feature_dim = 8;
    opts.frames_per_char = 3;
    opts.noise_sigma = 0.0;
    opts.duration_jitter = false;
    opts.n_asr = n_asr;
    opts.n_ner = n_ner;
    ladder = make_task_ladder(opts);
    asr = gen_corpus(ladder, ladder.asr, root.string(), 2);
    ner = gen_corpus(ladder, ladder.ner, root.string(), 2);
    inventory_path = (root / "inventory.txt").string();
    ladder.inventory.save(inventory_path);
  }
  ~World() { fs::remove_all(root); }

  ChainSpec two_stage_chain(const std::string &out_name) const {
    ChainSpec chain;
    chain.seed = 11;
    chain.out_dir = (root / out_name).string();
    chain.inventory_path = inventory_path;
    chain.model.input_features = 8;
    chain.model.convs = {{4, 3, 3, 2, 2}};
    chain.model.rnn_layers = 1;
    chain.model.rnn_hidden = 24;
    chain.model.fc_size = 24;
    chain.model.batch_norm = true;

    StageSpec s1;
    s1.name = "asr";
    s1.task_id = "asr";
    s1.train_manifest = asr.train_manifest;
    s1.dev_manifest = asr.dev_manifest;
    s1.alphabet_path = asr.alphabet_file;
    s1.epochs = 4;
    s1.lr = 0.03;
    s1.metric = EvalMetric::kWer;
    StageSpec s2;
    s2.name = "ner";
    s2.task_id = "ner";
    s2.train_manifest = ner.train_manifest;
    s2.dev_manifest = ner.dev_manifest;
    s2.alphabet_path = ner.alphabet_file;
    s2.epochs = 4;
    s2.lr = 0.03;
    s2.metric = EvalMetric::kCer;
    chain.stages = {s1, s2};
    return chain;
  }
};

bool body_equal(const Checkpoint &a, const Checkpoint &b) {
  if (a.tensors.size() != b.tensors.size()) return false;
  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    const auto &[name, tensor] = a.tensors[i];
    if (name == "head.w" || name == "head.b") continue;
    if (b.tensors[i].first != name) return false;
    if (b.tensors[i].second.shape != tensor.shape) return false;
    if (b.tensors[i].second.data != tensor.data) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("two-stage chain: body continuity is bitwise across the transition") {
  World world("slu_test_chain_body");
  auto chain = world.two_stage_chain("run");
  // second stage trains 0 epochs, so its best checkpoint is exactly the
  // reinitialized transfer of stage 1's best
  chain.stages[1].epochs = 0;
  RunOptions opts;
  opts.workers = 2;
  opts.quiet = true;
  auto report = run_chain(chain, opts);
  REQUIRE(report.completed);
  REQUIRE(report.stages.size() == 2);

  auto stage1_best = load_checkpoint(chain.out_dir + "/asr/best.sluc");
  auto stage2_best = load_checkpoint(chain.out_dir + "/ner/best.sluc");
  CHECK(body_equal(stage1_best, stage2_best));
  // head differs: new alphabet width
  CHECK(stage1_best.config.alphabet_size != stage2_best.config.alphabet_size);
  CHECK(stage2_best.lineage == std::vector<std::string>{"asr", "ner"});
}

TEST_CASE("chain fails fast on missing manifests") {
  World world("slu_test_chain_missing");
  auto chain = world.two_stage_chain("run");
  chain.stages[1].train_manifest = (world.root / "nope.jsonl").string();
  RunOptions opts;
  opts.quiet = true;
  CHECK_THROWS_WITH_AS(run_chain(chain, opts),
                       doctest::Contains("missing train manifest"), Error);
  // nothing was trained
  CHECK(!fs::exists(chain.out_dir + "/asr/best.sluc"));
}

TEST_CASE("identical chain spec and seed reproduce bitwise checkpoints") {
  World world("slu_test_chain_det");
  auto chain1 = world.two_stage_chain("run1");
  auto chain2 = world.two_stage_chain("run2");
  RunOptions opts;
  opts.workers = 2;
  opts.quiet = true;
  auto r1 = run_chain(chain1, opts);
  auto r2 = run_chain(chain2, opts);
  REQUIRE(r1.completed);
  REQUIRE(r2.completed);
  for (const char *stage : {"asr", "ner"}) {
    auto a = read_text_file(chain1.out_dir + "/" + stage + "/best.sluc");
    auto b = read_text_file(chain2.out_dir + "/" + stage + "/best.sluc");
    CHECK(a == b);
  }
  for (std::size_t i = 0; i < r1.stages.size(); ++i) {
    CHECK(r1.stages[i].best_dev == r2.stages[i].best_dev);
    CHECK(r1.stages[i].best_epoch == r2.stages[i].best_epoch);
  }
}

TEST_CASE("interrupted chain resumes to the identical result") {
  World world("slu_test_chain_resume");
  auto full_chain = world.two_stage_chain("full");
  RunOptions opts;
  opts.workers = 2;
  opts.quiet = true;
  auto full = run_chain(full_chain, opts);
  REQUIRE(full.completed);

  auto resumed_chain = world.two_stage_chain("resumed");
  RunOptions interrupting = opts;
  interrupting.interrupt_after_epochs = 5;  // dies mid stage 2
  CHECK_THROWS_AS(run_chain(resumed_chain, interrupting), ChainInterrupted);
  RunOptions resume = opts;
  resume.resume = true;
  auto resumed = run_chain(resumed_chain, resume);
  REQUIRE(resumed.completed);

  for (const char *stage : {"asr", "ner"}) {
    auto a = read_text_file(full_chain.out_dir + "/" + stage + "/best.sluc");
    auto b = read_text_file(resumed_chain.out_dir + "/" + stage + "/best.sluc");
    CHECK(a == b);
  }
  REQUIRE(full.stages.size() == resumed.stages.size());
  for (std::size_t i = 0; i < full.stages.size(); ++i) {
    CHECK(full.stages[i].best_dev == resumed.stages[i].best_dev);
    CHECK(full.stages[i].best_epoch == resumed.stages[i].best_epoch);
    CHECK(full.stages[i].epochs_run == resumed.stages[i].epochs_run);
  }
}

TEST_CASE("memorization probe: one utterance trains to exact recall") {
  World world("slu_test_chain_memo", 21, 30, 30);
  // single-utterance manifests
  auto entries = read_manifest(world.ner.train_manifest);
  REQUIRE(!entries.empty());
  std::vector<ManifestEntry> one{entries[0]};
  auto solo_manifest = (world.root / "solo.jsonl").string();
  write_manifest(solo_manifest, one);

  auto chain = world.two_stage_chain("memo");
  chain.stages.erase(chain.stages.begin());  // NER only
  chain.stages[0].train_manifest = solo_manifest;
  chain.stages[0].dev_manifest = solo_manifest;
  chain.stages[0].epochs = 200;
  chain.stages[0].batch_size = 1;
  chain.stages[0].lr = 0.02;
  chain.stages[0].lr_decay = 0.995;
  chain.stages[0].patience = 0;  // disabled
  RunOptions opts;
  opts.quiet = true;
  auto report = run_chain(chain, opts);
  REQUIRE(report.completed);
  CHECK(report.stages[0].best_dev == 0.0);

  // final loss under 0.1 and greedy decode reproduces the target exactly
  // (the state after the full epoch budget, not the best-on-dev pick)
  auto best = load_checkpoint(chain.out_dir + "/ner/last.sluc");
  auto net = Net<float>::from_checkpoint(best);
  auto alphabet = Alphabet::load(chain.stages[0].alphabet_path);
  auto spec = read_features(one[0].feature_path, one[0].id);
  auto feats = spec.frames.cast<float>();
  auto ws = net.forward({&feats}, RunMode::kInfer);
  auto target = alphabet.encode(utf8_decode(one[0].target_text));
  std::vector<std::vector<int>> targets{target};
  double loss = ctc_batch_loss<float>(ws.logprobs, ws.out_lengths, targets, nullptr);
  CHECK(loss < 0.1);
  auto text = greedy_decode(ws.logprobs.ptr(), ws.out_lengths[0],
                            alphabet.size(), alphabet);
  CHECK(utf8_encode(text) == one[0].target_text);
}

TEST_CASE("starred stages train on star-collapsed targets") {
  World world("slu_test_chain_star", 33, 30, 60);
  auto chain = world.two_stage_chain("star");
  chain.stages.erase(chain.stages.begin());
  chain.stages[0].starred = true;
  chain.stages[0].epochs = 1;
  RunOptions opts;
  opts.quiet = true;
  auto report = run_chain(chain, opts);
  REQUIRE(report.stages.size() == 1);
  // target encoding property is what matters: no base character outside
  // spans survives the starred transform
  auto inv = ConceptInventory::load(world.inventory_path);
  for (const auto &e : read_manifest(world.ner.train_manifest)) {
    auto [t, repairs] = decode(utf8_decode(e.target_text), inv);
    REQUIRE(repairs.empty());
    auto starred = encode(t, inv, true);
    bool in_span = false;
    for (char32_t c : starred) {
      if (inv.is_open_symbol(c)) in_span = true;
      else if (c == inv.close_symbol()) in_span = false;
      else if (!in_span && c != inv.star_symbol())
        CHECK(c == U' ');
    }
  }
}

TEST_CASE("transplant: lineage appends and same state gives same head") {
  World world("slu_test_transplant", 44, 30, 30);
  ModelConfig cfg;
  cfg.input_features = 8;
  cfg.convs = {{4, 3, 3, 2, 2}};
  cfg.rnn_layers = 1;
  cfg.rnn_hidden = 16;
  cfg.fc_size = 16;
  cfg.alphabet_size = 30;
  Net<float> net(cfg, 3);
  auto base = net.to_checkpoint("base-alpha", {"asr", "ner"});

  auto alphabet = Alphabet::load(world.ner.alphabet_file);
  auto t1 = transplant(base, alphabet);
  auto t2 = transplant(base, alphabet);
  CHECK(t1.alphabet_id == alphabet.id());
  CHECK(t1.lineage == base.lineage);  // stage names append when trained
  CHECK(body_equal(base, t1));
  for (std::size_t i = 0; i < t1.tensors.size(); ++i)
    CHECK(t1.tensors[i].second.data == t2.tensors[i].second.data);
}

TEST_CASE("chain config parser: round trip and diagnostics") {
  auto dir = fs::temp_directory_path() / "slu_test_cfg";
  fs::create_directories(dir);
  auto path = (dir / "chain.cfg").string();
  write_text_file(path, R"(# demo chain
seed = 42
out_dir = /tmp/slu-run
inventory = /tmp/inv.txt
momentum = 0.9
model.input_features = 8
model.convs = 4x3x3x2x2
model.rnn_layers = 1
model.rnn_hidden = 24
model.fc_size = 24
model.batch_norm = true

[stage asr]
task = asr
train = /tmp/a/train.jsonl
dev = /tmp/a/dev.jsonl
alphabet = /tmp/a/alphabet.txt
epochs = 12
lr = 0.03
metric = wer

[stage sf]
task = sf_hotel
train = /tmp/b/train.jsonl
dev = /tmp/b/dev.jsonl
alphabet = /tmp/b/alphabet.txt
epochs = 14
lr = 0.02
metric = cer
starred = true
)");
  auto chain = parse_chain_config(path);
  CHECK(chain.seed == 42);
  CHECK(chain.stages.size() == 2);
  CHECK(chain.stages[0].metric == EvalMetric::kWer);
  CHECK(chain.stages[1].starred);
  CHECK(chain.stages[1].lr == 0.02);
  CHECK(chain.model.convs.size() == 1);

  write_text_file(path, "seed = 1\nbogus_key = 2\n");
  CHECK_THROWS_WITH_AS(parse_chain_config(path), doctest::Contains(":2:"),
                       Error);
  fs::remove_all(dir);
}
