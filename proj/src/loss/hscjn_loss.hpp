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

// Future-word-set prediction and maximum-entropy regularization.
//
// At every decoder step j the prediction head scores the whole vocabulary with
// independent sigmoids and is rewarded for the tokens y_j..y_m that remain to
// be generated; from the initial state it predicts the full target multiset.
// The word-prediction loss averages each of these log-likelihoods over the
// size of its set. The entropy term sums the negative entropy of every output
// distribution over the full vocabulary. The training objective is
//
//   L = NLL + alpha * L_WP + beta * L_ME.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "corpus/corpus.hpp"
#include "model/model.hpp"
#include "tensor/ops.hpp"

namespace hscjn::loss {

using tensor::Tape;
using tensor::Var;

// Lower clamp on sigmoid scores before taking logs.
inline constexpr double kScoreFloor = 1e-12;

class TargetWordSets {
 public:
  // Throws UsageError on an empty target.
  explicit TargetWordSets(std::span<const int> target);

  std::size_t length() const { return target_.size(); }
  // Multiset (y_j, ..., y_m) for 1-based step j.
  std::span<const int> at_step(std::size_t j) const;
  // Every target token; what the initial state predicts.
  std::span<const int> full() const { return target_; }

 private:
  std::vector<int> target_;
};

TargetWordSets build_target_sets(std::span<const int> target);

// Head logits from [e(y_prev); s_j; c_j] and from [s_0; c_0]: two tanh layers,
// then one vocabulary-wide output layer (sigmoid applied by the log-likelihood).
Var head_step_logits(Tape& tape, const model::ModelParams& params, Var e_prev, Var s_j, Var c_j);
Var head_initial_logits(Tape& tape, const model::ModelParams& params, Var s_0, Var c_0);

// sum over positions t of log sigmoid(logits[set[t]]), clamped below at log(kScoreFloor).
Var set_log_likelihood(Var logits, std::span<const int> set);

// -sum over w not in set of log(1 - sigmoid(logits[w])), divided by |V|.
// Only used by the optional negative-sampling extension.
Var negative_set_penalty(Var logits, std::span<const int> set);

Var head_step_logprob(Tape& tape, const model::ModelParams& params, Var e_prev, Var s_j, Var c_j,
                      std::span<const int> set);
Var head_initial_logprob(Tape& tape, const model::ModelParams& params, Var s_0, Var c_0,
                         std::span<const int> full_set);

// -(1/m) log P_0 - sum_j log P_j / (m - j + 1). step_logprobs holds log P_1..log P_m.
Var loss_wp(Var initial_logprob, std::span<const Var> step_logprobs);
double loss_wp(double initial_logprob, std::span<const double> step_logprobs);

// H = -sum_i exp(lp_i) * lp_i from a log-probability vector.
Var entropy(Var log_probs);
// -sum_t H_t over the given steps.
Var loss_me(std::span<const Var> step_log_probs);
// Direct form over probability vectors, 0 log 0 := 0. Each must sum to 1 within 1e-6.
double entropy(std::span<const double> probs);
double loss_me(std::span<const std::vector<double>> step_distributions);

struct LossWeights {
  double alpha = 1.0;
  double beta = 0.13;
  bool wp_negatives = false;

  // Throws UsageError unless alpha and beta lie in [0, 1].
  void validate() const;
};

struct LossBreakdown {
  double nll = 0.0;
  double l_wp = 0.0;
  double l_me = 0.0;
  double total = 0.0;
  double mean_entropy = 0.0;  // average per-step output entropy
  std::size_t tokens = 0;     // supervised target tokens
  std::vector<double> step_entropies;
};

// total = nll + alpha * l_wp + beta * l_me.
LossBreakdown loss_total(double nll, double l_wp, double l_me, double alpha, double beta);

struct ExampleLoss {
  Var nll;
  Var l_wp;
  Var l_me;
  std::size_t tokens = 0;
  std::vector<double> step_entropies;
};

// Teacher-forced forward pass over one example. With two targets the second
// turn is scored against the context extended by the first target.
// The prediction head is skipped (l_wp == 0) when alpha == 0.
ExampleLoss example_loss(Tape& tape, const model::ModelParams& params, const corpus::TrainingExample& example,
                         const LossWeights& weights, const model::ForwardOptions& opts = {});

struct BatchLoss {
  Var total;
  LossBreakdown breakdown;
};

// Component-wise mean over the examples, then the weighted sum.
BatchLoss batch_loss(Tape& tape, const model::ModelParams& params, std::span<const corpus::TrainingExample> examples,
                     const LossWeights& weights, const model::ForwardOptions& opts = {});

}  // namespace hscjn::loss
