// slu/synthdata.cpp

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

#include "slu/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "slu/featurizer.hpp"
#include "slu/rng.hpp"
#include "slu/utf8.hpp"

namespace slu {

namespace {

using Lexicon = std::map<std::string, std::vector<std::vector<std::string>>>;

std::vector<std::vector<std::string>> one_word_each(
    std::initializer_list<const char *> words) {
  std::vector<std::vector<std::string>> out;
  for (const char *w : words) out.push_back({w});
  return out;
}

Lexicon shared_lexicon() {
  Lexicon lex;
  lex["number"] = one_word_each(
      {"one", "two", "three", "four", "five", "six", "seven", "eight"});
  lex["city"] = one_word_each(
      {"paris", "lyon", "nantes", "lille", "brest", "tours"});
  lex["date"] = one_word_each(
      {"monday", "tuesday", "friday", "saturday", "today", "tomorrow"});
  lex["roomtype"] = {{"single"}, {"double"}, {"twin"},
                     {"grand", "suite"},  {"double-bed"}};
  lex["service"] = one_word_each({"parking", "breakfast", "wifi", "sauna"});
  lex["show"] = {{"opera"}, {"ballet"}, {"drama"}, {"comedy"},
                 {"modern", "ballet"}};
  lex["zone"] = one_word_each({"balcony", "orchestra", "gallery"});
  return lex;
}

GrammarTemplate tmpl(double weight, std::initializer_list<TemplateItem> items) {
  GrammarTemplate t;
  t.weight = weight;
  t.items = items;
  return t;
}

SlotRef slot(const char *concept_name, const char *value_class) {
  return SlotRef{concept_name, value_class};
}

std::vector<GrammarTemplate> hotel_templates(bool tagged) {
  // untagged variants reuse the same surface language for the ASR rung
  auto s = [&](const char *c, const char *v) -> TemplateItem {
    if (tagged) return slot(c, v);
    return SlotRef{"", v};
  };
  return {
      tmpl(3, {"hello", "yes", "i", "would", "really", "like", 
               s("nb_room", "number"), s("room_type", "roomtype"), "rooms"}),
      tmpl(2, {"good", "morning", "please", "book", "me",
               s("nb_room", "number"), s("room_type", "roomtype"), "rooms",
               "in", s("city", "city")}),
      tmpl(2, {"so", "we", "will", "need", "a", "nice", "hotel", "in",
               s("city", "city"), "on", s("date", "date"), "thank", "you"}),
      tmpl(1, {"a", "quiet", "room", "with", s("hotel_service", "service"),
               "please"}),
      tmpl(2, {"could", "you", "book", "for", s("date", "date"), "in",
               s("city", "city"), "thanks", "a", "lot"}),
      tmpl(1, {"hello", "there", "i", "do", "want", s("nb_room", "number"),
               "rooms", "with", s("hotel_service", "service")}),
  };
}

std::vector<GrammarTemplate> theater_templates(bool tagged) {
  auto s = [&](const char *c, const char *v) -> TemplateItem {
    if (tagged) return slot(c, v);
    return SlotRef{"", v};
  };
  return {
      tmpl(3, {"good", "evening", "i", "want", s("nb_ticket", "number"),
               "tickets", "for", "the", s("show_type", "show"), "please"}),
      tmpl(2, {"can", "you", "reserve", s("nb_ticket", "number"), "seats",
               "in", "the", s("seat_zone", "zone"), "thank", "you"}),
      tmpl(2, {"we", "would", "love", "the", s("show_type", "show"), "on",
               s("date", "date"), "in", s("city", "city"), "please"}),
      tmpl(1, {"two", "nice", "tickets", "for", s("date", "date"), "at",
               "the", s("seat_zone", "zone")}),
      tmpl(1, {"hello", "there", "we", "want", s("nb_ticket", "number"),
               "seats", "for", "the", s("show_type", "show"), "on",
               s("date", "date")}),
  };
}

std::vector<GrammarTemplate> ner_templates() {
  return {
      tmpl(2, {"i", "saw", slot("ent_number", "number"), "people", "in",
               slot("ent_place", "city")}),
      tmpl(2, {"meet", "me", "in", slot("ent_place", "city"), "on",
               slot("ent_time", "date")}),
      tmpl(2, {"the", "train", "to", slot("ent_place", "city"), "leaves",
               slot("ent_time", "date")}),
      tmpl(1, {"we", "counted", slot("ent_number", "number"), "and",
               slot("ent_number", "number"), "boxes"}),
      tmpl(1, {slot("ent_time", "date"), "we", "travel", "to",
               slot("ent_place", "city")}),
  };
}

std::vector<GrammarTemplate> merge_templates(
    const std::vector<GrammarTemplate> &a,
    const std::vector<GrammarTemplate> &b) {
  std::vector<GrammarTemplate> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

Ladder make_task_ladder(const LadderOptions &opts) {
  Ladder ladder;
  ladder.opts = opts;

  std::vector<std::string> concepts{
      // coarse entities (rung 2)
      "ent_number", "ent_place", "ent_time",
      // hotel domain (target, rung 4)
      "nb_room", "room_type", "city", "date", "hotel_service",
      // theater domain (portability)
      "nb_ticket", "show_type", "seat_zone"};
  ladder.inventory =
      ConceptInventory(concepts, U"abcdefghijklmnopqrstuvwxyz '-");

  // character prototypes, regenerated until pairwise distinguishable
  Rng rng(derive_seed(opts.seed, 0xB10B));
  const std::u32string chars = ladder.inventory.base_alphabet();
  const double contrast = opts.prototype_contrast;
  const double min_dist = 0.75 * contrast *
                          std::sqrt(static_cast<double>(opts.frames_per_char *
                                                        opts.feature_dim));
  Tensor<double> base({opts.frames_per_char, opts.feature_dim});
  for (auto &v : base.data) v = rng.uniform(-1.0, 1.0);
  for (char32_t c : chars) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      Tensor<double> proto({opts.frames_per_char, opts.feature_dim});
      for (std::size_t i = 0; i < proto.data.size(); ++i)
        proto.data[i] = base.data[i] + contrast * rng.uniform(-1.0, 1.0);
      double closest = HUGE_VAL;
      for (const auto &[other, existing] : ladder.prototypes) {
        (void)other;
        double d2 = 0.0;
        for (std::size_t i = 0; i < proto.data.size(); ++i) {
          double d = proto.data[i] - existing.data[i];
          d2 += d * d;
        }
        closest = std::min(closest, std::sqrt(d2));
      }
      if (closest >= min_dist) {
        ladder.prototypes.emplace(c, std::move(proto));
        break;
      }
      SLU_CHECK(attempt < 999, "could not place distinguishable prototypes");
    }
  }
  for (int s = 0; s < opts.style_dims; ++s) {
    Tensor<double> dir({opts.frames_per_char, opts.feature_dim});
    for (auto &v : dir.data) v = rng.uniform(-1.0, 1.0);
    ladder.style_basis.push_back(std::move(dir));
  }

  const Lexicon lex = shared_lexicon();
  auto make_task = [&](const std::string &id,
                       std::vector<GrammarTemplate> templates,
                       std::vector<std::string> task_concepts, int count,
                       uint64_t salt) {
    TaskSpec t;
    t.task_id = id;
    t.templates = std::move(templates);
    t.lexicon = lex;
    t.concepts = std::move(task_concepts);
    t.n_utterances = count;
    t.noise_sigma = opts.noise_sigma;
    t.duration_jitter = opts.duration_jitter;
    t.seed = derive_seed(opts.seed, salt);
    return t;
  };

  // rung 1: surface language from every domain, no tags
  ladder.asr = make_task(
      "asr",
      merge_templates(merge_templates(hotel_templates(false),
                                      theater_templates(false)),
                      ner_templates()),
      {}, opts.n_asr, 1);
  for (auto &t : ladder.asr.templates)  // strip tags from the NER templates
    for (auto &item : t.items)
      if (std::holds_alternative<SlotRef>(item))
        std::get<SlotRef>(item).concept_name.clear();

  ladder.ner = make_task("ner", ner_templates(),
                         {"ent_number", "ent_place", "ent_time"}, opts.n_ner,
                         2);
  ladder.sf_a = make_task(
      "sf_hotel", hotel_templates(true),
      {"nb_room", "room_type", "city", "date", "hotel_service"},
      opts.n_sf_domain, 3);
  ladder.sf_b = make_task(
      "sf_theater", theater_templates(true),
      {"nb_ticket", "show_type", "seat_zone", "city", "date"},
      opts.n_sf_domain, 4);
  ladder.sf_merged = make_task(
      "sf_merged", merge_templates(hotel_templates(true),
                                   theater_templates(true)),
      {"nb_room", "room_type", "city", "date", "hotel_service", "nb_ticket",
       "show_type", "seat_zone"},
      opts.n_sf_merged, 5);
  return ladder;
}

Alphabet Ladder::task_alphabet(const TaskSpec &task) const {
  std::vector<char32_t> symbols(inventory.base_alphabet().begin(),
                                inventory.base_alphabet().end());
  for (const auto &name : task.concepts)
    symbols.push_back(inventory.open_symbol(name));
  if (!task.concepts.empty()) {
    symbols.push_back(inventory.close_symbol());
    symbols.push_back(inventory.star_symbol());
  }
  return Alphabet(symbols);
}

namespace {

TaggedTranscript sample_transcript(const TaskSpec &task, Rng &rng) {
  SLU_CHECK(!task.templates.empty(), "degenerate grammar for task ",
            task.task_id);
  double total = 0.0;
  for (const auto &t : task.templates) total += t.weight;
  double pick = rng.uniform(0.0, total);
  const GrammarTemplate *chosen = &task.templates.back();
  for (const auto &t : task.templates) {
    if (pick < t.weight) {
      chosen = &t;
      break;
    }
    pick -= t.weight;
  }

  TaggedTranscript out;
  for (const auto &item : chosen->items) {
    if (std::holds_alternative<std::string>(item)) {
      out.items.emplace_back(Word{std::get<std::string>(item)});
      continue;
    }
    const auto &sref = std::get<SlotRef>(item);
    const auto &values = task.lexicon.at(sref.value_class);
    const auto &value = values[rng.below(values.size())];
    if (sref.concept_name.empty()) {
      for (const auto &w : value) out.items.emplace_back(Word{w});
    } else {
      ConceptSpan span;
      span.name = sref.concept_name;
      span.words = value;
      out.items.emplace_back(std::move(span));
    }
  }
  SLU_CHECK(!out.items.empty(), "degenerate grammar for task ", task.task_id);
  return out;
}

std::string spoken_text(const TaggedTranscript &t) {
  std::string out;
  for (const auto &w : word_sequence(t)) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace

GeneratedUtterance synthesize_utterance(const Ladder &ladder,
                                        const TaskSpec &task, int index) {
  Rng rng(derive_seed(task.seed, 0x5EED, static_cast<uint64_t>(index)));
  GeneratedUtterance utt;
  utt.id = str_cat(task.task_id, "-", index);
  utt.transcript = sample_transcript(task, rng);
  const std::u32string target = encode(utt.transcript, ladder.inventory, false);
  utt.target_text = utf8_encode(target);

  // CTC feasibility floor: keep T comfortably above twice the target's
  // minimum frame need so a time stride of 2 still admits an alignment
  std::size_t repeats = 0;
  for (std::size_t i = 1; i < target.size(); ++i)
    if (target[i] == target[i - 1]) ++repeats;
  const std::size_t min_frames = 2 * (target.size() + repeats) + 2;

  const std::u32string speech = utf8_decode(spoken_text(utt.transcript));
  const int k_frames = ladder.opts.frames_per_char;
  const int f_dim = ladder.opts.feature_dim;

  std::vector<std::vector<double>> frames;
  for (bool jitter : {task.duration_jitter, false}) {
    frames.clear();
    for (char32_t c : speech) {
      auto it = ladder.prototypes.find(c);
      SLU_CHECK(it != ladder.prototypes.end(), "no prototype for character '",
                utf8_encode(c), "'");
      const Tensor<double> &proto = it->second;
      // per-instance style offset, shared directions across characters
      std::vector<double> style_w(ladder.style_basis.size());
      for (auto &w : style_w) w = ladder.opts.style_strength * rng.normal();
      // inter-word pauses last twice as long as a regular character
      const int stretch = c == U' ' ? 3 : 1;
      int dup = -1, drop = -1;
      if (jitter) {
        double roll = rng.uniform();
        if (roll < 0.2) {
          dup = static_cast<int>(rng.below(k_frames));
        } else if (roll < 0.4 && k_frames > 1) {
          drop = static_cast<int>(rng.below(k_frames));
        }
      }
      for (int k = 0; k < k_frames; ++k) {
        if (k == drop) continue;
        int copies = stretch * ((k == dup) ? 2 : 1);
        for (int r = 0; r < copies; ++r) {
          std::vector<double> row(static_cast<std::size_t>(f_dim));
          for (int f = 0; f < f_dim; ++f) {
            double noise =
                task.noise_sigma > 0.0 ? task.noise_sigma * rng.normal() : 0.0;
            double style = 0.0;
            for (std::size_t si = 0; si < style_w.size(); ++si)
              style += style_w[si] * ladder.style_basis[si](k, f);
            row[static_cast<std::size_t>(f)] = proto(k, f) + style + noise;
          }
          frames.push_back(std::move(row));
        }
      }
    }
    if (frames.size() >= min_frames || !jitter) break;
  }
  SLU_CHECK(frames.size() >= min_frames,
            "template too dense for CTC: utterance ", utt.id, " has ",
            frames.size(), " frames for a target needing ", min_frames);

  utt.features = Tensor<double>({static_cast<int>(frames.size()), f_dim});
  for (std::size_t t = 0; t < frames.size(); ++t)
    for (int f = 0; f < f_dim; ++f)
      utt.features(static_cast<int>(t), f) = frames[t][static_cast<std::size_t>(f)];
  return utt;
}

Split split_of(const std::string &id, uint64_t seed) {
  uint64_t h = derive_seed(seed, fnv1a64(id));
  uint64_t bucket = h % 100;
  if (bucket < 80) return Split::kTrain;
  if (bucket < 90) return Split::kDev;
  return Split::kTest;
}

std::vector<ManifestEntry> read_manifest(const std::string &path) {
  std::vector<ManifestEntry> out;
  std::istringstream is(read_text_file(path));
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception &e) {
      throw Error(str_cat(path, ":", lineno, ": bad manifest line: ",
                          e.what()));
    }
    ManifestEntry entry;
    entry.id = j.at("id").get<std::string>();
    entry.feature_path = j.at("feature_path").get<std::string>();
    entry.target_text = j.value("target_text", std::string());
    entry.duration_frames = j.value("duration_frames", 0);
    out.push_back(std::move(entry));
  }
  return out;
}

void write_manifest(const std::string &path,
                    const std::vector<ManifestEntry> &entries) {
  std::ostringstream os;
  for (const auto &e : entries) {
    nlohmann::json j{{"id", e.id},
                     {"feature_path", e.feature_path},
                     {"target_text", e.target_text},
                     {"duration_frames", e.duration_frames}};
    os << j.dump() << '\n';
  }
  write_text_file(path, os.str());
}

CorpusPaths gen_corpus(const Ladder &ladder, const TaskSpec &task,
                       const std::string &out_dir, int workers) {
  namespace fs = std::filesystem;
  fs::path root = fs::path(out_dir) / task.task_id;
  fs::create_directories(root / "feats");

  std::vector<GeneratedUtterance> utts(
      static_cast<std::size_t>(task.n_utterances));
  parallel_for(static_cast<std::size_t>(task.n_utterances), workers,
               [&](std::size_t i) {
                 utts[i] = synthesize_utterance(ladder, task,
                                                static_cast<int>(i));
                 Spectrogram spec;
                 spec.id = utts[i].id;
                 spec.frames = utts[i].features;
                 write_features(
                     (root / "feats" / (utts[i].id + ".sluf")).string(), spec);
               });

  std::vector<ManifestEntry> train, dev, test;
  for (const auto &utt : utts) {
    ManifestEntry e;
    e.id = utt.id;
    e.feature_path = (root / "feats" / (utt.id + ".sluf")).string();
    e.target_text = utt.target_text;
    e.duration_frames = utt.features.shape[0];
    switch (split_of(utt.id, task.seed)) {
      case Split::kTrain:
        train.push_back(std::move(e));
        break;
      case Split::kDev:
        dev.push_back(std::move(e));
        break;
      case Split::kTest:
        test.push_back(std::move(e));
        break;
    }
  }

  CorpusPaths paths;
  paths.train_manifest = (root / "train.jsonl").string();
  paths.dev_manifest = (root / "dev.jsonl").string();
  paths.test_manifest = (root / "test.jsonl").string();
  paths.alphabet_file = (root / "alphabet.txt").string();
  write_manifest(paths.train_manifest, train);
  write_manifest(paths.dev_manifest, dev);
  write_manifest(paths.test_manifest, test);
  ladder.task_alphabet(task).save(paths.alphabet_file);
  return paths;
}

}  // namespace slu
