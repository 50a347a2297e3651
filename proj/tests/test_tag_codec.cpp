#include <filesystem>

#include "doctest.h"
#include "slu/tag_codec.hpp"
#include "slu/utf8.hpp"
#include "test_support.hpp"

using namespace slu;
using slu_test::demo_inventory;

namespace {

TaggedTranscript paper_sentence() {
  TaggedTranscript t;
  t.items = {Word{"I"},
             Word{"would"},
             Word{"like"},
             ConceptSpan{"nb_room", {"two"}},
             ConceptSpan{"room_type", {"double-bed", "rooms"}}};
  return t;
}

}  // namespace

TEST_CASE("encode renders open/word/close with single-symbol tags") {
  auto inv = ConceptInventory({"nb_room", "room_type"},
                              U"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz '-");
  auto t = paper_sentence();
  auto out = encode(t, inv, false);

  std::u32string expect = U"I would like ";
  expect += inv.open_symbol("nb_room");
  expect += U" two ";
  expect += inv.close_symbol();
  expect += U' ';
  expect += inv.open_symbol("room_type");
  expect += U" double-bed rooms ";
  expect += inv.close_symbol();
  CHECK(out == expect);

  SUBCASE("starred mode collapses the plain-word run to one star") {
    auto starred = encode(t, inv, true);
    std::u32string sexpect(1, inv.star_symbol());
    sexpect += U' ';
    sexpect += inv.open_symbol("nb_room");
    sexpect += U" two ";
    sexpect += inv.close_symbol();
    sexpect += U' ';
    sexpect += inv.open_symbol("room_type");
    sexpect += U" double-bed rooms ";
    sexpect += inv.close_symbol();
    CHECK(starred == sexpect);
  }
}

TEST_CASE("encode with no spans is the identity on text") {
  auto inv = demo_inventory();
  TaggedTranscript t;
  t.items = {Word{"hello"}, Word{"there"}};
  CHECK(encode(t, inv, false) == U"hello there");
}

TEST_CASE("encode rejects unknown concepts") {
  auto inv = demo_inventory();
  TaggedTranscript t;
  t.items = {ConceptSpan{"no_such_concept", {"x"}}};
  CHECK_THROWS_WITH_AS(encode(t, inv, false),
                       doctest::Contains("unknown concept"), Error);
}

TEST_CASE("well-formed round trip with zero repairs (fuzz)") {
  auto inv = demo_inventory();
  Rng rng(2024);
  for (int iter = 0; iter < 1000; ++iter) {
    auto t = slu_test::random_transcript(rng, inv);
    auto coded = encode(t, inv, false);
    auto [back, repairs] = decode(coded, inv);
    CHECK(repairs.empty());
    CHECK(back == t);
    if (back != t) break;
  }
}

TEST_CASE("repair: open inside open span closes implicitly") {
  auto inv = demo_inventory();
  std::u32string s(1, inv.open_symbol("nb_room"));
  s += U" two ";
  s += inv.open_symbol("room_type");
  s += U" rooms ";
  s += inv.close_symbol();
  auto [t, repairs] = decode(s, inv);
  REQUIRE(repairs.size() == 1);
  CHECK(repairs[0].kind == RepairKind::kImplicitClose);
  auto pairs = extract_pairs(t);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == ConceptValuePair{"nb_room", "two"});
  CHECK(pairs[1] == ConceptValuePair{"room_type", "rooms"});
}

TEST_CASE("repair: orphan close dropped; trailing span auto-closed") {
  auto inv = demo_inventory();
  std::u32string s(1, inv.close_symbol());
  s += U" hello";
  auto [t, repairs] = decode(s, inv);
  REQUIRE(repairs.size() == 1);
  CHECK(repairs[0].kind == RepairKind::kOrphanClose);
  REQUIRE(t.items.size() == 1);
  CHECK(std::get<Word>(t.items[0]).text == "hello");

  std::u32string s2(1, inv.open_symbol("city"));
  s2 += U" paris";
  auto [t2, repairs2] = decode(s2, inv);
  REQUIRE(repairs2.size() == 1);
  CHECK(repairs2[0].kind == RepairKind::kAutoCloseAtEnd);
  auto pairs = extract_pairs(t2);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0] == ConceptValuePair{"city", "paris"});
}

TEST_CASE("extract_pairs on the worked example") {
  auto inv = ConceptInventory({"nb_room", "room_type"}, U"abcdefghijklmnopqrstuvwxyzI '-");
  auto t = paper_sentence();
  auto pairs = extract_pairs(t);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == ConceptValuePair{"nb_room", "two"});
  CHECK(pairs[1] == ConceptValuePair{"room_type", "double-bed rooms"});

  TaggedTranscript plain;
  plain.items = {Word{"nothing"}};
  CHECK(extract_pairs(plain).empty());
}

TEST_CASE("decode+extract_pairs agree with an independent scanner on soup") {
  auto inv = demo_inventory();
  Rng rng(77);
  for (int iter = 0; iter < 2000; ++iter) {
    auto soup = slu_test::random_symbol_soup(rng, inv);
    auto [t, repairs] = decode(soup, inv);
    auto pairs = extract_pairs(t);
    auto expected = slu_test::scan_pairs(soup, inv);
    REQUIRE(pairs.size() == expected.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      CHECK(pairs[i].name == expected[i].first);
      CHECK(pairs[i].value == expected[i].second);
    }
  }
}

TEST_CASE("starred encode emits no word characters outside spans") {
  auto inv = demo_inventory();
  Rng rng(31337);
  for (int iter = 0; iter < 500; ++iter) {
    auto t = slu_test::random_transcript(rng, inv);
    auto coded = encode(t, inv, true);
    bool in_span = false;
    for (char32_t c : coded) {
      if (inv.is_open_symbol(c))
        in_span = true;
      else if (c == inv.close_symbol())
        in_span = false;
      else if (!in_span && c != inv.star_symbol())
        CHECK(c == U' ');  // item separators only
    }
  }
}

TEST_CASE("encode balances open and close symbols (fuzz)") {
  auto inv = demo_inventory();
  Rng rng(99);
  for (int iter = 0; iter < 500; ++iter) {
    auto t = slu_test::random_transcript(rng, inv);
    for (bool starred : {false, true}) {
      auto coded = encode(t, inv, starred);
      int opens = 0, closes = 0;
      for (char32_t c : coded) {
        if (inv.is_open_symbol(c)) ++opens;
        if (c == inv.close_symbol()) ++closes;
      }
      CHECK(opens == closes);
    }
  }
}

TEST_CASE("inventory file round trip") {
  auto inv = demo_inventory();
  auto path = std::filesystem::temp_directory_path() / "slu_test_inventory.txt";
  inv.save(path.string());
  auto back = ConceptInventory::load(path.string());
  CHECK(back.concepts() == inv.concepts());
  CHECK(back.close_symbol() == inv.close_symbol());
  CHECK(back.star_symbol() == inv.star_symbol());
  CHECK(back.base_alphabet() == inv.base_alphabet());
  for (const auto &c : inv.concepts())
    CHECK(back.open_symbol(c) == inv.open_symbol(c));
  std::filesystem::remove(path);
}
