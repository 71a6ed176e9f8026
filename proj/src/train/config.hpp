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

// Training configuration. Every field has a string key shared by config files
// (`key=value` lines, `#` comments) and command-line flags.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "corpus/corpus.hpp"
#include "loss/hscjn_loss.hpp"
#include "model/model.hpp"

namespace hscjn::train {

enum class Precision {
  kSingle,  // parameters and optimizer moments are kept representable as 32-bit floats
  kDouble,
};

struct TrainConfig {
  double alpha = 1.0;
  double beta = 0.13;
  double learning_rate = 2e-4;
  std::size_t batch_size = 8;
  double dropout = 0.25;
  std::size_t epochs = 20;
  bool fixed_epochs = false;  // run exactly `epochs`, no early stopping
  std::size_t patience = 3;
  std::uint64_t seed = 1;
  std::size_t vocab_cap = 2000;
  std::size_t max_dialogue_tokens = 300;
  std::size_t beam_width = 5;
  std::size_t max_len = 50;
  bool length_norm = false;
  bool wo_me = false;  // forces beta = 0
  bool wo_pn = false;  // forces alpha = 0
  bool paper_scale = false;
  bool wp_negatives = false;
  bool shuffle = true;
  bool sentence_bleu = false;
  corpus::ExampleMode mode = corpus::ExampleMode::kNextTurn;
  double init_std = 0.01;
  double clip_norm = 0.0;  // 0 disables gradient clipping
  Precision precision = Precision::kSingle;
  std::size_t threads = 0;  // evaluation workers; 0 picks hardware concurrency

  std::size_t embed_dim = 64;
  std::size_t word_enc_dim = 64;
  std::size_t utt_enc_dim = 128;
  std::size_t dec_dim = 64;
  std::size_t attn_dim = 64;
  std::size_t head_hidden_dim = 64;
  bool bidirectional = false;
  model::AttentionForm attention = model::AttentionForm::kAdditive;

  std::string train_path;
  std::string valid_path;
  std::string test_path;
  std::string checkpoint_path;
  std::string resume_path;
  std::string log_path;
  std::string output_path;
  std::string references_path;
  std::string out_dir;

  // alpha/beta after the ablation switches.
  loss::LossWeights loss_weights() const;
  model::ModelConfig model_config(std::size_t vocab_size) const;

  // Throws UsageError for an unknown key or an unparsable value.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  // Throws UsageError when a value is out of range.
  void validate() const;

  static const std::vector<std::string>& keys();
  // Every key with its current value, in keys() order.
  std::map<std::string, std::string> to_map() const;
};

// Applies `key=value` lines; blank lines and `#` comments are skipped.
void apply_config_text(TrainConfig& cfg, std::string_view text);
void apply_config_file(TrainConfig& cfg, const std::filesystem::path& path);
// HSCJN_SEED, when set, replaces the seed.
void apply_environment(TrainConfig& cfg);

}  // namespace hscjn::train
