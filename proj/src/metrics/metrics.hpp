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

// Automatic response evaluation: corpus BLEU-1..4, Distinct-1..3 and
// word-frequency profiles.

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "corpus/corpus.hpp"

namespace hscjn::metrics {

using corpus::Tokens;

struct NgramCounts {
  std::size_t matches = 0;  // clipped
  std::size_t total = 0;    // candidate n-grams
};

// Clipped n-gram matches of one candidate against one reference.
NgramCounts clipped_ngrams(const Tokens& candidate, const Tokens& reference, std::size_t n);

enum class BleuSmoothing {
  kNone,
  kAddOne,  // orders >= 2 with zero matches get +1 on matches and total
};

struct BleuOptions {
  std::size_t max_n = 4;
  BleuSmoothing smoothing = BleuSmoothing::kAddOne;
  bool sentence_level = false;  // average of per-pair scores instead of corpus aggregation
};

// BLEU-1..max_n on a 0..100 scale; BLEU-n uses uniform weights over orders 1..n.
// Throws UsageError on an empty corpus or mismatched list lengths.
std::vector<double> bleu_score(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references,
                               const BleuOptions& opts = {});

struct Distinct {
  double ratio = 0.0;
  std::size_t count = 0;  // unique n-grams
  std::size_t total = 0;  // n-gram tokens

  // "0.031/247"
  std::string format() const;
};

// Unique n-grams pooled over all responses; n-grams containing `ignore_token`
// (when given) are left out of both count and total.
Distinct distinct_n(const std::vector<Tokens>& responses, std::size_t n,
                    const std::optional<std::string>& ignore_token = std::nullopt);

// True when the token contains no alphanumeric character.
bool is_punctuation(const std::string& token);

// Top-k tokens by frequency, ties broken lexicographically.
std::vector<std::pair<std::string, std::size_t>> word_frequency_profile(const std::vector<Tokens>& responses,
                                                                       std::size_t k, bool exclude_punct);

struct EvalReport {
  std::size_t pairs = 0;
  std::array<double, 4> bleu{};
  std::array<Distinct, 3> distinct{};
  std::vector<std::pair<std::string, std::size_t>> top_words;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

struct EvalOptions {
  BleuOptions bleu;
  std::size_t top_k = 10;
  std::optional<std::string> ignore_token = std::string("<unk>");
};

EvalReport evaluate(const std::vector<Tokens>& responses, const std::vector<Tokens>& references,
                    const EvalOptions& opts = {});

// One response per line; `__eou__` markers (two-turn output) are dropped and
// the turns of a line are scored as one token sequence.
std::vector<Tokens> read_responses(const std::filesystem::path& path);

EvalReport eval_report(const std::filesystem::path& responses, const std::filesystem::path& references,
                       const EvalOptions& opts = {});

// `rank<TAB>token<TAB>frequency` lines.
std::string frequency_table(const std::vector<std::pair<std::string, std::size_t>>& profile);

}  // namespace hscjn::metrics
