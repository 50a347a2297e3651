// slu/tag_codec.cpp

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

#include "slu/tag_codec.hpp"

#include <sstream>

#include "slu/utf8.hpp"

namespace slu {

namespace {
// Reserved symbols start here (private use area).
constexpr char32_t kPuaBase = 0xE000;
}  // namespace

ConceptInventory::ConceptInventory(std::vector<std::string> concepts,
                                   std::u32string base_alphabet)
    : concepts_(std::move(concepts)), base_(std::move(base_alphabet)) {
  char32_t next = kPuaBase;
  for (const auto &name : concepts_) {
    SLU_CHECK(open_.count(name) == 0, "duplicate concept: ", name);
    open_[name] = next;
    symbol_to_concept_[next] = name;
    ++next;
  }
  close_ = next++;
  star_ = next++;
  check_distinct();
}

void ConceptInventory::check_distinct() const {
  for (char32_t c : base_) {
    SLU_CHECK(symbol_to_concept_.count(c) == 0 && c != close_ && c != star_,
              "reserved symbol collides with base alphabet");
  }
  SLU_CHECK(close_ != star_, "close and star symbols must differ");
  SLU_CHECK(symbol_to_concept_.count(close_) == 0 &&
                symbol_to_concept_.count(star_) == 0,
            "close/star symbol collides with an open symbol");
}

char32_t ConceptInventory::open_symbol(const std::string &concept_name) const {
  auto it = open_.find(concept_name);
  SLU_CHECK(it != open_.end(), "unknown concept: ", concept_name);
  return it->second;
}

const std::string *ConceptInventory::concept_of(char32_t c) const {
  auto it = symbol_to_concept_.find(c);
  return it == symbol_to_concept_.end() ? nullptr : &it->second;
}

void ConceptInventory::save(const std::string &path) const {
  std::ostringstream os;
  for (const auto &name : concepts_)
    os << name << '\t' << utf8_encode(open_.at(name)) << '\n';
  os << "__close__\t" << utf8_encode(close_) << '\n';
  os << "__star__\t" << utf8_encode(star_) << '\n';
  os << "__base__\t" << utf8_encode(base_) << '\n';
  write_text_file(path, os.str());
}

ConceptInventory ConceptInventory::load(const std::string &path) {
  ConceptInventory inv;
  std::istringstream is(read_text_file(path));
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    SLU_CHECK(tab != std::string::npos, path, ":", lineno,
              ": expected name<TAB>symbol");
    std::string name = line.substr(0, tab);
    std::u32string sym = utf8_decode(line.substr(tab + 1));
    if (name == "__base__") {
      inv.base_ = sym;
      continue;
    }
    SLU_CHECK(sym.size() == 1, path, ":", lineno,
              ": reserved symbol must be a single codepoint");
    if (name == "__close__") {
      inv.close_ = sym[0];
    } else if (name == "__star__") {
      inv.star_ = sym[0];
    } else {
      SLU_CHECK(inv.open_.count(name) == 0, path, ":", lineno,
                ": duplicate concept ", name);
      inv.concepts_.push_back(name);
      inv.open_[name] = sym[0];
      inv.symbol_to_concept_[sym[0]] = name;
    }
  }
  SLU_CHECK(inv.close_ != 0, path, ": missing __close__ line");
  SLU_CHECK(inv.star_ != 0, path, ": missing __star__ line");
  inv.check_distinct();
  return inv;
}

std::u32string encode(const TaggedTranscript &t, const ConceptInventory &inv,
                      bool starred) {
  std::vector<std::u32string> rendered;
  bool pending_star = false;
  for (const auto &item : t.items) {
    if (std::holds_alternative<Word>(item)) {
      if (starred) {
        // collapse the whole run of plain words to one star
        if (!pending_star) {
          rendered.push_back(std::u32string(1, inv.star_symbol()));
          pending_star = true;
        }
        continue;
      }
      rendered.push_back(utf8_decode(std::get<Word>(item).text));
    } else {
      pending_star = false;
      const auto &span = std::get<ConceptSpan>(item);
      std::u32string s(1, inv.open_symbol(span.name));
      s += U' ';
      for (std::size_t i = 0; i < span.words.size(); ++i) {
        s += utf8_decode(span.words[i]);
        s += U' ';
      }
      s += inv.close_symbol();
      rendered.push_back(std::move(s));
    }
  }
  std::u32string out;
  for (std::size_t i = 0; i < rendered.size(); ++i) {
    if (i) out += U' ';
    out += rendered[i];
  }
  return out;
}

std::pair<TaggedTranscript, std::vector<RepairEvent>> decode(
    const std::u32string &chars, const ConceptInventory &inv) {
  TaggedTranscript out;
  std::vector<RepairEvent> repairs;

  bool in_span = false;
  ConceptSpan span;
  std::u32string word;

  auto flush_word = [&]() {
    if (word.empty()) return;
    if (in_span)
      span.words.push_back(utf8_encode(word));
    else
      out.items.emplace_back(Word{utf8_encode(word)});
    word.clear();
  };
  auto close_span = [&]() {
    out.items.emplace_back(std::move(span));
    span = ConceptSpan{};
    in_span = false;
  };

  for (std::size_t pos = 0; pos < chars.size(); ++pos) {
    char32_t c = chars[pos];
    if (const std::string *concept_name = inv.concept_of(c)) {
      flush_word();
      if (in_span) {
        repairs.push_back({RepairKind::kImplicitClose, pos});
        close_span();
      }
      in_span = true;
      span.name = *concept_name;
    } else if (c == inv.close_symbol()) {
      flush_word();
      if (in_span)
        close_span();
      else
        repairs.push_back({RepairKind::kOrphanClose, pos});
    } else if (c == U' ') {
      flush_word();
    } else {
      // star and any unknown symbol decode as word characters
      word += c;
    }
  }
  flush_word();
  if (in_span) {
    repairs.push_back({RepairKind::kAutoCloseAtEnd, chars.size()});
    close_span();
  }
  return {std::move(out), std::move(repairs)};
}

std::vector<ConceptValuePair> extract_pairs(const TaggedTranscript &t) {
  std::vector<ConceptValuePair> pairs;
  for (const auto &item : t.items) {
    if (!std::holds_alternative<ConceptSpan>(item)) continue;
    const auto &span = std::get<ConceptSpan>(item);
    std::string value;
    for (std::size_t i = 0; i < span.words.size(); ++i) {
      if (i) value += ' ';
      value += span.words[i];
    }
    pairs.push_back({span.name, value});
  }
  return pairs;
}

std::vector<std::string> concept_sequence(const TaggedTranscript &t) {
  std::vector<std::string> out;
  for (const auto &item : t.items)
    if (std::holds_alternative<ConceptSpan>(item))
      out.push_back(std::get<ConceptSpan>(item).name);
  return out;
}

std::vector<std::string> word_sequence(const TaggedTranscript &t) {
  std::vector<std::string> out;
  for (const auto &item : t.items) {
    if (std::holds_alternative<Word>(item)) {
      out.push_back(std::get<Word>(item).text);
    } else {
      for (const auto &w : std::get<ConceptSpan>(item).words)
        out.push_back(w);
    }
  }
  return out;
}

}  // namespace slu
