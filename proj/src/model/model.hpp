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

// Hierarchical recurrent encoder-decoder with additive attention.
//
// A word-level GRU runs over each context utterance with shared weights; its
// final state per utterance feeds an utterance-level GRU. The decoder is an
// LSTM fed with [e(y_prev); c_j], where c_j attends over every word-level
// state using the previous decoder state as query, and the output layer reads
// [s_j; c_j]. The future-word prediction head lives here too so that all
// trainable weights share one parameter set.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tensor/ops.hpp"
#include "tensor/tensor.hpp"

namespace hscjn::model {

using tensor::Parameter;
using tensor::Tape;
using tensor::Tensor;
using tensor::Var;

enum class AttentionForm {
  kAdditive,  // v . tanh(W_c [s; h])
  kScalarWc,  // tanh(w_c . [s; h]), single-row W_c and no v
};

AttentionForm parse_attention_form(std::string_view name);
std::string_view to_string(AttentionForm form);

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 64;
  std::size_t word_enc_dim = 64;
  std::size_t utt_enc_dim = 128;
  std::size_t dec_dim = 64;
  std::size_t attn_dim = 64;
  std::size_t head_hidden_dim = 64;
  double dropout_rate = 0.25;
  double init_std = 0.01;
  bool bidirectional_word_encoder = false;
  AttentionForm attention = AttentionForm::kAdditive;

  // Published sizes: 300-d embeddings, 500/1000-d GRU encoders, 500-d LSTM decoder.
  static ModelConfig paper_scale(std::size_t vocab_size);

  // Throws UsageError on a zero dimension, vocab_size < 5 or an invalid rate.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct GruWeights {
  Parameter *Wz, *Uz, *bz;
  Parameter *Wr, *Ur, *br;
  Parameter *Wh, *Uh, *bh;
};

struct LstmWeights {
  Parameter *Wi, *Ui, *bi;
  Parameter *Wf, *Uf, *bf;
  Parameter *Wo, *Uo, *bo;
  Parameter *Wg, *Ug, *bg;
};

struct AttentionWeights {
  Parameter* query;  // [attn x dec]
  Parameter* key;    // [enc x attn], applied as h . key
  Parameter* v;      // [attn]; null for the scalar form
};

struct HeadWeights {
  Parameter *W1_step, *b1_step;  // input [e(y_prev); s_j; c_j]
  Parameter *W1_init, *b1_init;  // input [s_0; c_0]
  Parameter *W2, *b2;
  Parameter *W3, *b3;            // vocabulary-wide sigmoid layer
};

class ModelParams {
 public:
  // Recurrent (hidden-to-hidden) matrices orthogonal, biases zero, everything
  // else N(0, init_std^2). Deterministic in the seed.
  static ModelParams init(const ModelConfig& config, std::uint64_t seed);

  ModelParams(ModelParams&&) = default;
  ModelParams& operator=(ModelParams&&) = default;

  const ModelConfig& config() const { return config_; }
  std::size_t encoder_dim() const { return config_.word_enc_dim; }

  // All parameters in a fixed creation order.
  std::span<Parameter* const> all() const { return view_; }
  Parameter& get(std::string_view name) const;
  std::vector<Parameter*> recurrent_matrices() const;
  std::size_t count() const;
  void zero_grad();

  Parameter* embedding;
  GruWeights word_fwd;
  GruWeights word_bwd;  // unused unless bidirectional
  GruWeights utterance;
  LstmWeights decoder;
  AttentionWeights attention;
  Parameter *W_init, *b_init;
  Parameter *W_out, *b_out;
  HeadWeights head;

 private:
  explicit ModelParams(ModelConfig config) : config_(std::move(config)) {}
  Parameter* add(std::string name, tensor::Shape shape);

  ModelConfig config_;
  std::vector<std::unique_ptr<Parameter>> owned_;
  std::vector<Parameter*> view_;
  std::vector<std::string> recurrent_;
};

// Orthogonal square matrix from the QR decomposition of a standard Gaussian
// matrix, columns sign-corrected so that R has a positive diagonal.
Tensor orthogonal_matrix(std::size_t n, std::mt19937_64& rng);

struct ForwardOptions {
  bool training = false;
  std::mt19937_64* rng = nullptr;  // required when training with dropout
};

// z = s(Wz x + Uz h + bz), r = s(Wr x + Ur h + br),
// h~ = tanh(Wh x + Uh (r . h) + bh), h' = (1 - z) . h + z . h~
Var gru_step(Tape& tape, const GruWeights& w, Var x, Var h);

struct LstmState {
  Var h;
  Var c;
};

// i, f, o = s(...), g = tanh(...), c' = f . c + i . g, h' = o . tanh(c')
LstmState lstm_step(Tape& tape, const LstmWeights& w, Var x, LstmState state);

struct EncoderOutput {
  Var word_states;  // [T x enc]: every word-level state of every context utterance
  Var keys;         // [T x attn]: word_states projected by the attention key matrix
  std::vector<bool> mask;
  Var utterance_summary;  // final utterance-level state [utt_enc]

  std::size_t length() const { return mask.size(); }
};

// Embedding lookup with dropout applied in training.
Var embed(Tape& tape, const ModelParams& params, int token, const ForwardOptions& opts);

// Throws UsageError on an empty context or an empty utterance.
EncoderOutput encode_dialogue(Tape& tape, const ModelParams& params, std::span<const std::vector<int>> context,
                              const ForwardOptions& opts = {});

struct Attention {
  Var context;  // c_j [enc]
  Var weights;  // a_j [T]
};

Attention attend(Tape& tape, const ModelParams& params, Var query, const EncoderOutput& enc);

struct DecoderState {
  LstmState lstm;
  Var context;          // c_0 for the initial state; invalid after the first step
  std::size_t step = 0;
};

// s_0 = tanh(W_init u + b_init), cell 0, plus c_0 attended with s_0 as query.
DecoderState init_decoder_state(Tape& tape, const ModelParams& params, const EncoderOutput& enc);

struct StepOutput {
  Var embedding;  // e(y_prev) as fed to the LSTM
  Var context;    // c_j
  Var logits;
  Var log_probs;
  DecoderState state;
};

StepOutput decoder_step(Tape& tape, const ModelParams& params, int prev_token, const DecoderState& state,
                        const EncoderOutput& enc, const ForwardOptions& opts = {});

}  // namespace hscjn::model
