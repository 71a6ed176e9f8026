// Copyright 2026 The HSCJN Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dialogue corpora: parsing of `__eou__`-delimited lines, length filtering,
// capped vocabularies, (context -> target) example construction and padding.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hscjn::corpus {

using Tokens = std::vector<std::string>;

inline constexpr std::string_view kEouDelimiter = "__eou__";

struct Dialogue {
  std::vector<Tokens> utterances;

  std::size_t token_count() const;
  friend bool operator==(const Dialogue&, const Dialogue&) = default;
};

struct ParsedCorpus {
  std::vector<Dialogue> dialogues;
  std::size_t dropped = 0;  // lines with fewer than two non-empty utterances
};

// Lowercases and splits on whitespace.
Tokens tokenize_utterance(std::string_view raw);

// One dialogue per line. Throws FormatError when no line yields a dialogue.
ParsedCorpus parse_corpus_text(std::string_view text);
// Throws IoError if the file cannot be read.
ParsedCorpus parse_corpus(const std::filesystem::path& path);

struct FilterResult {
  std::vector<Dialogue> kept;
  std::size_t removed = 0;
};

// Keeps dialogues with at most max_tokens tokens in total.
FilterResult filter_dialogues(std::vector<Dialogue> dialogues, std::size_t max_tokens = 300);

enum SpecialToken : int { kPad = 0, kUnk = 1, kSos = 2, kEou = 3 };
inline constexpr int kNumSpecial = 4;

class Vocabulary {
 public:
  // Most frequent `cap` tokens; frequency ties go to the lexicographically smaller token.
  static Vocabulary build(const std::vector<Dialogue>& dialogues, std::size_t cap);
  // Rebuilds from non-reserved tokens listed in id order (checkpoint restore).
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  std::size_t size() const { return tokens_.size(); }
  // UNK for anything not in the vocabulary.
  int id(std::string_view token) const;
  const std::string& token(int id) const;
  std::size_t count(int id) const { return counts_.at(static_cast<std::size_t>(id)); }
  // Every entry, reserved ones first.
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(const Tokens& tokens) const;
  // PAD, SOS and EOU are dropped; UNK renders as "<unk>".
  Tokens decode(std::span<const int> ids) const;

  // `token<TAB>id<TAB>count` per line.
  std::string dump() const;

 private:
  void add(std::string token, std::size_t count);

  std::vector<std::string> tokens_;
  std::vector<std::size_t> counts_;
  std::map<std::string, int, std::less<>> index_;
};

enum class ExampleMode { kNextTurn, kTwoPrevSource, kTwoTurnTarget };

ExampleMode parse_example_mode(std::string_view name);
std::string_view to_string(ExampleMode mode);

struct TextExample {
  std::vector<Tokens> context;
  std::vector<Tokens> targets;  // one, or two in two-turn mode
  friend bool operator==(const TextExample&, const TextExample&) = default;
};

std::vector<TextExample> make_examples(const std::vector<Dialogue>& dialogues, ExampleMode mode);

// Id-space example. Every context utterance and every target ends in exactly one EOU.
struct TrainingExample {
  std::vector<std::vector<int>> context;
  std::vector<std::vector<int>> targets;
  friend bool operator==(const TrainingExample&, const TrainingExample&) = default;
};

TrainingExample encode_example(const TextExample& example, const Vocabulary& vocab);
TextExample decode_example(const TrainingExample& example, const Vocabulary& vocab);

// rows x cols id matrix, PAD beyond each row's length.
struct PaddedSequences {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<int> ids;
  std::vector<std::size_t> lengths;
  std::vector<std::uint8_t> mask;  // mask[r * cols + t] == 1 iff t < lengths[r]

  std::span<const int> unpadded(std::size_t r) const { return {ids.data() + r * cols, lengths[r]}; }
};

struct Batch {
  std::size_t size = 0;
  std::vector<std::size_t> utterance_counts;  // context utterances per example
  std::vector<PaddedSequences> context;       // one per utterance slot; length 0 where absent
  std::vector<PaddedSequences> targets;       // one per target turn

  TrainingExample example(std::size_t i) const;
};

PaddedSequences pad_sequences(const std::vector<std::vector<int>>& seqs);
// Consecutive chunks of batch_size in input order; the last one may be short.
std::vector<Batch> batch_examples(const std::vector<TrainingExample>& examples, std::size_t batch_size);

}  // namespace hscjn::corpus
