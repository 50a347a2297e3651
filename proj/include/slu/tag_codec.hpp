// slu/tag_codec.hpp

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

// Serialization between structured concept annotations and the character
// sequences the model emits. Each concept has a single opening symbol; one
// shared symbol closes any concept. Decoding accepts arbitrary symbol
// sequences and repairs unbalanced tags instead of failing.

#ifndef SLU_TAG_CODEC_HPP_
#define SLU_TAG_CODEC_HPP_

#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "slu/common.hpp"

namespace slu {

class ConceptInventory {
 public:
  ConceptInventory() = default;
  // Assigns private-use-area symbols to `concepts` in order, then the close
  // and star symbols.
  ConceptInventory(std::vector<std::string> concepts,
                   std::u32string base_alphabet);

  const std::vector<std::string> &concepts() const { return concepts_; }
  char32_t open_symbol(const std::string &concept_name) const;
  char32_t close_symbol() const { return close_; }
  char32_t star_symbol() const { return star_; }
  const std::u32string &base_alphabet() const { return base_; }

  bool is_open_symbol(char32_t c) const {
    return symbol_to_concept_.count(c) > 0;
  }
  // nullptr when c is not an opening symbol
  const std::string *concept_of(char32_t c) const;
  bool has_concept(const std::string &name) const {
    return open_.count(name) > 0;
  }

  // UTF-8 text, one `name<TAB>symbol` line per concept plus `__close__` and
  // `__star__` lines; `__base__` carries the word alphabet.
  void save(const std::string &path) const;
  static ConceptInventory load(const std::string &path);

 private:
  void check_distinct() const;
  std::vector<std::string> concepts_;
  std::unordered_map<std::string, char32_t> open_;
  std::unordered_map<char32_t, std::string> symbol_to_concept_;
  char32_t close_ = 0;
  char32_t star_ = 0;
  std::u32string base_;
};

struct Word {
  std::string text;  // UTF-8
  bool operator==(const Word &o) const { return text == o.text; }
};

struct ConceptSpan {
  std::string name;
  std::vector<std::string> words;
  bool operator==(const ConceptSpan &o) const {
    return name == o.name && words == o.words;
  }
};

using TranscriptItem = std::variant<Word, ConceptSpan>;

struct TaggedTranscript {
  std::vector<TranscriptItem> items;
  bool operator==(const TaggedTranscript &o) const { return items == o.items; }
};

enum class RepairKind {
  kImplicitClose,   // an open symbol arrived inside an open span
  kOrphanClose,     // a close symbol with no open span (dropped)
  kAutoCloseAtEnd,  // input ended with a span still open
};

struct RepairEvent {
  RepairKind kind;
  std::size_t position;  // codepoint offset in the decoded input
};

struct ConceptValuePair {
  std::string name;
  std::string value;
  bool operator==(const ConceptValuePair &o) const {
    return name == o.name && value == o.value;
  }
};

// Spans render as `open SP words SP close`; items are joined by single
// spaces. With starred=true every maximal run of plain words collapses to
// the star symbol.
std::u32string encode(const TaggedTranscript &t, const ConceptInventory &inv,
                      bool starred = false);

std::pair<TaggedTranscript, std::vector<RepairEvent>> decode(
    const std::u32string &chars, const ConceptInventory &inv);

std::vector<ConceptValuePair> extract_pairs(const TaggedTranscript &t);

// Concept-name sequence, in order (CER's view of a transcript).
std::vector<std::string> concept_sequence(const TaggedTranscript &t);

// All plain words, spans included (WER's view).
std::vector<std::string> word_sequence(const TaggedTranscript &t);

}  // namespace slu

#endif  // SLU_TAG_CODEC_HPP_
