#include <cmath>

#include "doctest.h"
#include "slu/metrics.hpp"
#include "test_support.hpp"

using namespace slu;

namespace {

std::vector<std::string> random_tokens(Rng &rng, std::size_t max_len,
                                       int vocab) {
  std::vector<std::string> out;
  std::size_t len = rng.below(max_len + 1);
  for (std::size_t i = 0; i < len; ++i)
    out.push_back(std::string(1, static_cast<char>('a' + rng.below(vocab))));
  return out;
}

TaggedTranscript with_pairs(
    const std::vector<std::pair<std::string, std::string>> &pairs) {
  TaggedTranscript t;
  for (const auto &[name, value] : pairs) {
    ConceptSpan span;
    span.name = name;
    for (const auto &w : split_ws(value)) span.words.push_back(w);
    t.items.emplace_back(std::move(span));
  }
  return t;
}

}  // namespace

TEST_CASE("align basics") {
  auto a = align({"a", "b"}, {"a", "b"});
  CHECK(a.distance() == 0);
  CHECK(a.rate() == 0.0);
  CHECK(a.hits == 2);

  auto d = align({"a", "b"}, {"a"});
  CHECK(d.dels == 1);
  CHECK(d.rate() == doctest::Approx(0.5));

  auto w = align({"a", "b", "c"}, {"a", "x", "c"});
  CHECK(w.subs == 1);
  CHECK(w.rate() == doctest::Approx(1.0 / 3));

  auto e = align({"a", "b", "c"}, {});
  CHECK(e.rate() == doctest::Approx(1.0));

  // S + D + H = ref_len
  CHECK(w.subs + w.dels + w.hits == w.ref_len);
}

TEST_CASE("align matches the recursive reference on fuzzed pairs") {
  Rng rng(4242);
  for (int iter = 0; iter < 1000; ++iter) {
    auto ref = random_tokens(rng, 10, 4);
    auto hyp = random_tokens(rng, 10, 4);
    auto got = align(ref, hyp);
    int expect = slu_test::reference_edit_distance(ref, hyp);
    CHECK(got.distance() == expect);
    CHECK(got.subs + got.dels + got.hits == got.ref_len);
  }
}

TEST_CASE("edit distance is symmetric and satisfies the triangle inequality") {
  Rng rng(9);
  for (int iter = 0; iter < 300; ++iter) {
    auto a = random_tokens(rng, 8, 3);
    auto b = random_tokens(rng, 8, 3);
    auto c = random_tokens(rng, 8, 3);
    int ab = align(a, b).distance();
    int ba = align(b, a).distance();
    int ac = align(a, c).distance();
    int bc = align(b, c).distance();
    CHECK(ab == ba);
    CHECK(ac <= ab + bc);
  }
}

TEST_CASE("cer ignores values; cver does not") {
  auto ref = with_pairs({{"nb_room", "two"}, {"room_type", "double-bed rooms"}});
  auto hyp_missing = with_pairs({{"nb_room", "two"}});
  CHECK(cer(ref, hyp_missing) == doctest::Approx(0.5));

  auto hyp_wrong_value = with_pairs({{"nb_room", "three"},
                                     {"room_type", "double-bed rooms"}});
  CHECK(cer(ref, hyp_wrong_value) == 0.0);
  CHECK(cver(ref, hyp_wrong_value) == doctest::Approx(0.5));

  CHECK(cer(ref, ref) == 0.0);
  CHECK(cver(ref, ref) == 0.0);
}

TEST_CASE("value normalization: case and whitespace") {
  CHECK(normalize_value("  Double-Bed   ROOMS ") == "double-bed rooms");
  auto ref = with_pairs({{"city", "new york"}});
  auto hyp = with_pairs({{"city", "New  York"}});
  CHECK(cver(ref, hyp) == 0.0);
}

TEST_CASE("CVER >= CER on fuzzed transcript pairs") {
  auto inv = slu_test::demo_inventory();
  Rng rng(555);
  for (int iter = 0; iter < 2000; ++iter) {
    auto ref = slu_test::random_transcript(rng, inv);
    auto hyp = slu_test::random_transcript(rng, inv);
    CHECK(cver(ref, hyp) >= cer(ref, hyp) - 1e-12);
  }
}

TEST_CASE("corpus pooling equals summed counts") {
  auto inv = slu_test::demo_inventory();
  Rng rng(808);
  PooledCounts pooled;
  long long s = 0, i = 0, d = 0, n = 0;
  for (int u = 0; u < 50; ++u) {
    auto ref = slu_test::random_transcript(rng, inv);
    auto hyp = slu_test::random_transcript(rng, inv);
    auto counts = cer_counts(ref, hyp);
    pooled.add(counts);
    s += counts.subs;
    i += counts.ins;
    d += counts.dels;
    n += counts.ref_len;
  }
  CHECK(pooled.rate() ==
        doctest::Approx(static_cast<double>(s + i + d) / static_cast<double>(n)));
}

TEST_CASE("student t quantiles match reference values") {
  CHECK(student_t_quantile_975(1) == doctest::Approx(12.7062047364).epsilon(1e-8));
  CHECK(student_t_quantile_975(2) == doctest::Approx(4.3026527300).epsilon(1e-8));
  CHECK(student_t_quantile_975(10) == doctest::Approx(2.2281388520).epsilon(1e-8));
  CHECK(student_t_quantile_975(100) == doctest::Approx(1.9839715185).epsilon(1e-8));
}

TEST_CASE("confidence margin: zero spread gives zero margin") {
  CHECK(t_confidence_margin_95({0.25, 0.25, 0.25}) == doctest::Approx(0.0));
  // hand-worked: values {0, 0.5, 1.0}, sd = 0.5, t(2) = 4.30265...
  double margin = t_confidence_margin_95({0.0, 0.5, 1.0});
  CHECK(margin == doctest::Approx(4.3026527300 * 0.5 / std::sqrt(3.0)).epsilon(1e-8));
}
