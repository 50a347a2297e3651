#include <cmath>

#include "doctest.h"
#include "slu/decoder.hpp"
#include "slu/ctc.hpp"
#include "test_support.hpp"

using namespace slu;
using slu_test::ctc_path_enumeration;
using slu_test::random_lattice;

namespace {

Alphabet two_symbol_alphabet() { return Alphabet({U'a', U'b'}); }

// oracle: label with the highest total path mass (ties -> lexicographic)
std::pair<std::vector<int>, double> best_label(
    const std::map<std::vector<int>, double> &mass) {
  std::vector<int> best;
  double best_p = -1.0;
  for (const auto &[label, p] : mass) {
    if (p > best_p + 1e-15) {
      best = label;
      best_p = p;
    }
  }
  return {best, best_p};
}

std::u32string label_to_text(const std::vector<int> &label,
                             const Alphabet &alphabet) {
  return alphabet.decode_indices(label);
}

}  // namespace

TEST_CASE("greedy decode collapses the argmax path") {
  Alphabet alphabet({U'a', U'b'});
  // frames argmax: a a blank b  -> "ab"
  std::vector<double> lattice{
      std::log(0.2), std::log(0.7), std::log(0.1),   // a
      std::log(0.3), std::log(0.5), std::log(0.2),   // a
      std::log(0.8), std::log(0.1), std::log(0.1),   // blank
      std::log(0.1), std::log(0.2), std::log(0.7)};  // b
  CHECK(greedy_decode(lattice.data(), 4, 3, alphabet) == U"ab");

  std::vector<double> blanks{std::log(0.9), std::log(0.05), std::log(0.05),
                             std::log(0.9), std::log(0.05), std::log(0.05)};
  CHECK(greedy_decode(blanks.data(), 2, 3, alphabet).empty());
}

TEST_CASE("greedy equals an independent argmax+collapse reimplementation") {
  Alphabet alphabet({U'a', U'b', U'c'});
  Rng rng(31);
  for (int iter = 0; iter < 200; ++iter) {
    auto lattice = random_lattice(rng, 6, 4);
    // reference: argmax per frame (ties -> lowest), merge repeats, drop 0
    std::u32string expect;
    int prev = -1;
    for (int t = 0; t < 6; ++t) {
      int arg = 0;
      for (int k = 1; k < 4; ++k)
        if (lattice[t * 4 + k] > lattice[t * 4 + arg]) arg = k;
      if (arg != prev && arg != 0) expect += alphabet.symbol(arg);
      prev = arg;
    }
    CHECK(greedy_decode(lattice.data(), 6, 4, alphabet) == expect);
  }
}

TEST_CASE("exhaustive beam equals the max-probability label (oracle)") {
  Alphabet alphabet = two_symbol_alphabet();
  Rng rng(97);
  DecodeConfig cfg;
  cfg.alphabet = &alphabet;
  cfg.beam_width = 1000;  // exceeds the number of distinct prefixes
  cfg.nbest = 1;
  for (int iter = 0; iter < 50; ++iter) {
    int t_len = 1 + static_cast<int>(rng.below(6));
    auto lattice = random_lattice(rng, t_len, 3);
    auto mass = ctc_path_enumeration(lattice, t_len, 3);
    auto [label, p] = best_label(mass);
    auto hyps = beam_decode(lattice.data(), t_len, 3, cfg);
    REQUIRE(!hyps.empty());
    CHECK(hyps[0].text == label_to_text(label, alphabet));
    CHECK(hyps[0].combined == doctest::Approx(std::log(p)).epsilon(1e-9));
  }
}

TEST_CASE("best path <= prefix sum of greedy <= exhaustive beam top") {
  Alphabet alphabet({U'a', U'b'});
  Rng rng(555);
  DecodeConfig cfg;
  cfg.alphabet = &alphabet;
  cfg.beam_width = 4096;  // exhaustive at these sizes
  for (int iter = 0; iter < 200; ++iter) {
    int t_len = 2 + static_cast<int>(rng.below(5));
    auto lattice = random_lattice(rng, t_len, 3);
    // best single path: product of per-frame maxima; collapses to greedy
    double best_path = 0.0;
    for (int t = 0; t < t_len; ++t) {
      double m = lattice[t * 3];
      for (int k = 1; k < 3; ++k) m = std::max(m, lattice[t * 3 + k]);
      best_path += m;
    }
    auto greedy = greedy_decode(lattice.data(), t_len, 3, alphabet);
    std::vector<int> greedy_label;
    for (char32_t c : greedy) greedy_label.push_back(alphabet.index(c));
    double greedy_mass = -ctc_loss(lattice.data(), t_len, 3, greedy_label);
    CHECK(greedy_mass >= best_path - 1e-9);

    auto hyps = beam_decode(lattice.data(), t_len, 3, cfg);
    REQUIRE(!hyps.empty());
    CHECK(hyps[0].combined >= greedy_mass - 1e-9);
  }
}

TEST_CASE("top combined score is monotone in beam width") {
  Alphabet alphabet({U'a', U'b', U'c', U' '});
  Rng rng(777);
  std::vector<std::vector<std::string>> corpus{{"a", "b"}, {"a", "b"},
                                               {"c", "a"}};
  auto lm = NGramModel::train(corpus, 2);
  for (int iter = 0; iter < 25; ++iter) {
    int t_len = 4 + static_cast<int>(rng.below(5));
    auto lattice = random_lattice(rng, t_len, 5);
    double prev = -HUGE_VAL;
    for (int width : {1, 2, 4, 8, 16, 32}) {
      DecodeConfig cfg;
      cfg.alphabet = &alphabet;
      cfg.beam_width = width;
      cfg.alpha = 0.5;
      cfg.beta = 0.3;
      cfg.lm = &lm;
      auto hyps = beam_decode(lattice.data(), t_len, 5, cfg);
      REQUIRE(!hyps.empty());
      CHECK(hyps[0].combined >= prev - 1e-9);
      prev = hyps[0].combined;
    }
  }
}

TEST_CASE("language model weight flips an acoustically better hypothesis") {
  Alphabet alphabet({U'a', U'b', U'c', U' '});
  std::vector<std::vector<std::string>> corpus;
  for (int i = 0; i < 50; ++i) corpus.push_back({"a", "b"});
  auto lm = NGramModel::train(corpus, 2);

  // frames: 'a) certain, space certain, then 'c' acoustically ahead of 'b'
  auto row = [](double pb, double pa, double pbb, double pc, double psp) {
    double z = pb + pa + pbb + pc + psp;
    return std::vector<double>{std::log(pb / z), std::log(pa / z),
                               std::log(pbb / z), std::log(pc / z),
                               std::log(psp / z)};
  };
  std::vector<double> lattice;
  for (auto &r : {row(0.01, 0.95, 0.01, 0.02, 0.01),
                  row(0.01, 0.01, 0.01, 0.02, 0.95),
                  row(0.01, 0.01, 0.42, 0.55, 0.01)}) {
    lattice.insert(lattice.end(), r.begin(), r.end());
  }

  DecodeConfig plain;
  plain.alphabet = &alphabet;
  plain.beam_width = 64;
  plain.nbest = 4;
  auto acoustic = beam_decode(lattice.data(), 3, 5, plain);
  REQUIRE(!acoustic.empty());
  CHECK(acoustic[0].text == U"a c");

  DecodeConfig fused = plain;
  fused.alpha = 3.0;
  fused.lm = &lm;
  auto rescored = beam_decode(lattice.data(), 3, 5, fused);
  REQUIRE(!rescored.empty());
  CHECK(rescored[0].text == U"a b");
}

TEST_CASE("word counting: tag symbols are standalone words") {
  ConceptInventory inv({"city"}, U"abcdefghijklmnopqrstuvwxyz '-");
  std::vector<char32_t> symbols{U'a', U'b', U' '};
  symbols.push_back(inv.open_symbol("city"));
  symbols.push_back(inv.close_symbol());
  Alphabet alphabet(symbols);

  // force the sequence "<city> ab </close>" via a peaked lattice
  auto peak = [&](int idx, int num) {
    std::vector<double> r(num, std::log(0.01));
    double rest = 1.0 - 0.01 * (num - 1);
    r[idx] = std::log(rest);
    return r;
  };
  const int a_size = alphabet.size();
  std::vector<double> lattice;
  for (int idx : {4 /*open*/, 3 /*space*/, 1 /*a*/, 2 /*b*/, 3 /*space*/,
                  5 /*close*/}) {
    auto r = peak(idx, a_size);
    lattice.insert(lattice.end(), r.begin(), r.end());
  }
  DecodeConfig cfg;
  cfg.alphabet = &alphabet;
  cfg.beam_width = 16;
  cfg.beta = 1.0;
  cfg.add_tag_words(inv);
  auto hyps = beam_decode(lattice.data(), 6, a_size, cfg);
  REQUIRE(!hyps.empty());
  // words: open-tag, "ab", close-tag
  CHECK(hyps[0].word_count == 3);
}

TEST_CASE("nbest ranking is strictly ordered and collapse-consistent") {
  Alphabet alphabet({U'a', U'b'});
  Rng rng(2029);
  DecodeConfig cfg;
  cfg.alphabet = &alphabet;
  cfg.beam_width = 64;
  cfg.nbest = 8;
  for (int iter = 0; iter < 40; ++iter) {
    int t_len = 3 + static_cast<int>(rng.below(4));
    auto lattice = random_lattice(rng, t_len, 3);
    auto hyps = beam_decode(lattice.data(), t_len, 3, cfg);
    for (std::size_t i = 1; i < hyps.size(); ++i)
      CHECK(hyps[i - 1].combined >= hyps[i].combined);
    for (const auto &h : hyps) {
      // reachable by at least one alignment
      std::vector<int> label;
      for (char32_t c : h.text) label.push_back(alphabet.index(c));
      CHECK(ctc_min_frames(label) <= t_len);
    }
    // determinism: a second run returns the same ranking
    auto again = beam_decode(lattice.data(), t_len, 3, cfg);
    REQUIRE(again.size() == hyps.size());
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      CHECK(again[i].text == hyps[i].text);
      CHECK(again[i].combined == hyps[i].combined);
    }
  }
}

TEST_CASE("beam width below 1 is rejected") {
  Alphabet alphabet({U'a'});
  DecodeConfig cfg;
  cfg.alphabet = &alphabet;
  cfg.beam_width = 0;
  std::vector<double> lattice{std::log(0.5), std::log(0.5)};
  CHECK_THROWS_WITH_AS(beam_decode(lattice.data(), 1, 2, cfg),
                       doctest::Contains("beam_width"), Error);
}
