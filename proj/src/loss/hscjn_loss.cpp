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

#include "loss/hscjn_loss.hpp"

#include <cmath>
#include <string>

#include "common/errors.hpp"

namespace hscjn::loss {

namespace ops = hscjn::tensor;
using model::ModelParams;

TargetWordSets::TargetWordSets(std::span<const int> target) : target_(target.begin(), target.end()) {
  if (target_.empty()) throw UsageError("target word sets need a non-empty target");
}

std::span<const int> TargetWordSets::at_step(std::size_t j) const {
  if (j < 1 || j > target_.size()) {
    throw UsageError("step " + std::to_string(j) + " outside 1.." + std::to_string(target_.size()));
  }
  return std::span<const int>(target_).subspan(j - 1);
}

TargetWordSets build_target_sets(std::span<const int> target) { return TargetWordSets(target); }

namespace {

Var head_trunk(Tape& t, const ModelParams& p, Var first_hidden) {
  Var h1 = ops::tanh(first_hidden);
  Var h2 = ops::tanh(ops::add(ops::matmul(t.param(*p.head.W2), h1), t.param(*p.head.b2)));
  return ops::add(ops::matmul(t.param(*p.head.W3), h2), t.param(*p.head.b3));
}

}  // namespace

Var head_step_logits(Tape& t, const ModelParams& p, Var e_prev, Var s_j, Var c_j) {
  const Var parts[] = {e_prev, s_j, c_j};
  Var in = ops::concat(parts);
  return head_trunk(t, p, ops::add(ops::matmul(t.param(*p.head.W1_step), in), t.param(*p.head.b1_step)));
}

Var head_initial_logits(Tape& t, const ModelParams& p, Var s_0, Var c_0) {
  const Var parts[] = {s_0, c_0};
  Var in = ops::concat(parts);
  return head_trunk(t, p, ops::add(ops::matmul(t.param(*p.head.W1_init), in), t.param(*p.head.b1_init)));
}

Var set_log_likelihood(Var logits, std::span<const int> set) {
  if (set.empty()) throw UsageError("prediction target set is empty");
  return ops::sum(ops::log_sigmoid(ops::gather(logits, set), std::log(kScoreFloor)));
}

Var negative_set_penalty(Var logits, std::span<const int> set) {
  const std::size_t vocab = logits.value().size();
  tensor::Tensor outside({vocab}, 1.0);
  for (int id : set) outside[static_cast<std::size_t>(id)] = 0.0;
  // log(1 - sigmoid(x)) = log sigmoid(-x); clamp keeps 1 - q >= kScoreFloor.
  Var log_miss = ops::log_sigmoid(ops::neg(logits), std::log(kScoreFloor));
  Var masked = ops::mul(log_miss, logits.tape()->constant(std::move(outside)));
  return ops::scale(ops::sum(masked), -1.0 / static_cast<double>(vocab));
}

Var head_step_logprob(Tape& t, const ModelParams& p, Var e_prev, Var s_j, Var c_j, std::span<const int> set) {
  return set_log_likelihood(head_step_logits(t, p, e_prev, s_j, c_j), set);
}

Var head_initial_logprob(Tape& t, const ModelParams& p, Var s_0, Var c_0, std::span<const int> full_set) {
  return set_log_likelihood(head_initial_logits(t, p, s_0, c_0), full_set);
}

Var loss_wp(Var initial_logprob, std::span<const Var> step_logprobs) {
  const std::size_t m = step_logprobs.size();
  if (m == 0) throw UsageError("loss_wp needs at least one step");
  std::vector<Var> terms;
  terms.push_back(ops::scale(initial_logprob, -1.0 / static_cast<double>(m)));
  for (std::size_t j = 1; j <= m; ++j) {
    terms.push_back(ops::scale(step_logprobs[j - 1], -1.0 / static_cast<double>(m - j + 1)));
  }
  return ops::add_n(terms);
}

double loss_wp(double initial_logprob, std::span<const double> step_logprobs) {
  const std::size_t m = step_logprobs.size();
  if (m == 0) throw UsageError("loss_wp needs at least one step");
  double l = -initial_logprob / static_cast<double>(m);
  for (std::size_t j = 1; j <= m; ++j) l -= step_logprobs[j - 1] / static_cast<double>(m - j + 1);
  return l;
}

Var entropy(Var log_probs) { return ops::neg(ops::sum(ops::mul(ops::exp(log_probs), log_probs))); }

Var loss_me(std::span<const Var> step_log_probs) {
  if (step_log_probs.empty()) throw UsageError("loss_me needs at least one step");
  std::vector<Var> hs;
  for (Var lp : step_log_probs) hs.push_back(entropy(lp));
  return ops::neg(ops::add_n(hs));
}

double entropy(std::span<const double> probs) {
  double total = 0.0;
  double h = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw UsageError("negative probability in distribution");
    total += p;
    if (p > 0.0) h -= p * std::log(p);
  }
  if (std::abs(total - 1.0) > 1e-6) throw UsageError("distribution sums to " + std::to_string(total) + ", not 1");
  return h;
}

double loss_me(std::span<const std::vector<double>> step_distributions) {
  double l = 0.0;
  for (const auto& d : step_distributions) l -= entropy(d);
  return l;
}

void LossWeights::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("alpha must lie in [0, 1], got " + std::to_string(alpha));
  if (!(beta >= 0.0 && beta <= 1.0)) throw UsageError("beta must lie in [0, 1], got " + std::to_string(beta));
}

LossBreakdown loss_total(double nll, double l_wp, double l_me, double alpha, double beta) {
  LossWeights{alpha, beta}.validate();
  LossBreakdown b;
  b.nll = nll;
  b.l_wp = l_wp;
  b.l_me = l_me;
  b.total = nll + alpha * l_wp + beta * l_me;
  return b;
}

namespace {

struct TurnTerms {
  std::vector<Var> nll;
  std::vector<Var> wp;
  std::vector<Var> me;
  std::size_t tokens = 0;
  std::vector<double> entropies;
};

void score_turn(Tape& t, const ModelParams& p, std::span<const std::vector<int>> context,
                const std::vector<int>& target, const LossWeights& w, const model::ForwardOptions& opts,
                TurnTerms& out) {
  const TargetWordSets sets(target);
  const std::size_t m = target.size();
  const model::EncoderOutput enc = model::encode_dialogue(t, p, context, opts);
  model::DecoderState state = model::init_decoder_state(t, p, enc);
  const bool use_head = w.alpha > 0.0;

  Var initial_lp;
  std::vector<Var> step_lps;
  if (use_head) {
    Var logits = head_initial_logits(t, p, state.lstm.h, state.context);
    initial_lp = set_log_likelihood(logits, sets.full());
    if (w.wp_negatives) out.wp.push_back(negative_set_penalty(logits, sets.full()));
  }

  std::vector<Var> picked;
  std::vector<Var> dists;
  int prev = corpus::kSos;
  for (std::size_t j = 1; j <= m; ++j) {
    const int y = target[j - 1];
    model::StepOutput step = model::decoder_step(t, p, prev, state, enc, opts);
    const int ids[] = {y};
    picked.push_back(ops::gather(step.log_probs, ids));
    dists.push_back(step.log_probs);
    if (use_head) {
      Var logits = head_step_logits(t, p, step.embedding, step.state.lstm.h, step.context);
      step_lps.push_back(set_log_likelihood(logits, sets.at_step(j)));
      if (w.wp_negatives) out.wp.push_back(negative_set_penalty(logits, sets.at_step(j)));
    }
    state = step.state;
    prev = y;
  }

  out.nll.push_back(ops::neg(ops::sum(ops::concat(picked))));
  Var me = loss_me(dists);
  out.me.push_back(me);
  for (Var lp : dists) {
    double h = 0.0;
    for (double v : lp.value().values()) h -= std::exp(v) * v;
    out.entropies.push_back(h);
  }
  if (use_head) out.wp.push_back(loss_wp(initial_lp, step_lps));
  out.tokens += m;
}

}  // namespace

ExampleLoss example_loss(Tape& t, const ModelParams& p, const corpus::TrainingExample& ex, const LossWeights& w,
                         const model::ForwardOptions& opts) {
  w.validate();
  if (ex.targets.empty()) throw UsageError("example has no target");
  TurnTerms terms;
  std::vector<std::vector<int>> context = ex.context;
  for (const std::vector<int>& target : ex.targets) {
    score_turn(t, p, context, target, w, opts, terms);
    context.push_back(target);
  }
  ExampleLoss out;
  out.nll = ops::add_n(terms.nll);
  out.l_me = ops::add_n(terms.me);
  out.l_wp = terms.wp.empty() ? t.constant(tensor::Tensor::scalar(0.0)) : ops::add_n(terms.wp);
  out.tokens = terms.tokens;
  out.step_entropies = std::move(terms.entropies);
  return out;
}

BatchLoss batch_loss(Tape& t, const ModelParams& p, std::span<const corpus::TrainingExample> examples,
                     const LossWeights& w, const model::ForwardOptions& opts) {
  if (examples.empty()) throw UsageError("batch_loss over an empty batch");
  std::vector<Var> nll, wp, me;
  BatchLoss out;
  for (const corpus::TrainingExample& ex : examples) {
    ExampleLoss l = example_loss(t, p, ex, w, opts);
    nll.push_back(l.nll);
    wp.push_back(l.l_wp);
    me.push_back(l.l_me);
    out.breakdown.tokens += l.tokens;
    out.breakdown.step_entropies.insert(out.breakdown.step_entropies.end(), l.step_entropies.begin(),
                                        l.step_entropies.end());
  }
  const double inv = 1.0 / static_cast<double>(examples.size());
  Var nll_mean = ops::scale(ops::add_n(nll), inv);
  Var wp_mean = ops::scale(ops::add_n(wp), inv);
  Var me_mean = ops::scale(ops::add_n(me), inv);
  out.total = ops::add(ops::add(nll_mean, ops::scale(wp_mean, w.alpha)), ops::scale(me_mean, w.beta));

  LossBreakdown b = loss_total(nll_mean.item(), wp_mean.item(), me_mean.item(), w.alpha, w.beta);
  b.tokens = out.breakdown.tokens;
  b.step_entropies = std::move(out.breakdown.step_entropies);
  double hsum = 0.0;
  for (double h : b.step_entropies) hsum += h;
  b.mean_entropy = b.step_entropies.empty() ? 0.0 : hsum / static_cast<double>(b.step_entropies.size());
  out.breakdown = std::move(b);
  return out;
}

}  // namespace hscjn::loss
