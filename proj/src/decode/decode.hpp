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

// Greedy and beam-search decoding.
//
// The search routines are generic over a step model:
//
//   typename M::State;
//   State start();
//   std::pair<std::vector<double>, State> step(const State& s, int prev_token);
//
// step() returns next-token log-probabilities and the successor state. The
// first call receives corpus::kSos as prev_token.

#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "common/errors.hpp"
#include "corpus/corpus.hpp"
#include "model/model.hpp"

namespace hscjn::decode {

struct DecodeOptions {
  std::size_t width = 5;
  std::size_t max_len = 50;
  bool length_norm = false;  // rank by log-prob / length instead of log-prob
  int eou = corpus::kEou;
  int sos = corpus::kSos;
};

struct DecodeResult {
  std::vector<int> tokens;  // EOU stripped
  double log_prob = 0.0;    // sum of step log-probs, including EOU when finished
  bool finished = false;    // ended with EOU rather than hitting max_len
};

namespace detail {

// Indices of the k largest entries; ties go to the lower index.
inline std::vector<int> top_k(std::span<const double> logp, std::size_t k) {
  std::vector<int> idx(logp.size());
  std::iota(idx.begin(), idx.end(), 0);
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), [&](int a, int b) {
    return logp[static_cast<std::size_t>(a)] != logp[static_cast<std::size_t>(b)]
               ? logp[static_cast<std::size_t>(a)] > logp[static_cast<std::size_t>(b)]
               : a < b;
  });
  idx.resize(k);
  return idx;
}

inline double rank_score(double log_prob, std::size_t len, bool length_norm) {
  return length_norm ? log_prob / static_cast<double>(std::max<std::size_t>(len, 1)) : log_prob;
}

}  // namespace detail

template <typename M>
DecodeResult greedy_decode(M& model, std::size_t max_len, int eou = corpus::kEou, int sos = corpus::kSos) {
  if (max_len < 1) throw UsageError("max_len must be at least 1");
  DecodeResult r;
  auto state = model.start();
  int prev = sos;
  for (std::size_t t = 0; t < max_len; ++t) {
    auto [logp, next] = model.step(state, prev);
    const int best = detail::top_k(logp, 1).front();
    r.log_prob += logp[static_cast<std::size_t>(best)];
    if (best == eou) {
      r.finished = true;
      return r;
    }
    r.tokens.push_back(best);
    state = std::move(next);
    prev = best;
  }
  return r;
}

// Every live hypothesis is expanded by its `width` best tokens. Expansions
// ending in EOU retire to the finished pool; the best `width` of the rest stay
// live. Returns the best finished hypothesis, or the best live one if nothing
// finished within max_len. Ties prefer the earlier-ranked parent, then the
// lower token id.
template <typename M>
DecodeResult beam_search(M& model, const DecodeOptions& opts) {
  if (opts.width < 1) throw UsageError("beam width must be at least 1");
  if (opts.max_len < 1) throw UsageError("max_len must be at least 1");
  using State = typename M::State;
  struct Hyp {
    std::vector<int> tokens;
    double log_prob = 0.0;
    State state;
    int last = 0;
  };
  struct Candidate {
    double score;
    double log_prob;
    std::size_t parent;
    int token;
  };

  std::vector<Hyp> live;
  live.push_back(Hyp{{}, 0.0, model.start(), opts.sos});
  std::vector<DecodeResult> finished;
  double best_finished = -std::numeric_limits<double>::infinity();

  for (std::size_t t = 0; t < opts.max_len && !live.empty(); ++t) {
    std::vector<Candidate> cands;
    std::vector<State> next_states;
    for (std::size_t h = 0; h < live.size(); ++h) {
      auto [logp, next] = model.step(live[h].state, live[h].last);
      next_states.push_back(std::move(next));
      for (int tok : detail::top_k(logp, opts.width)) {
        const double lp = live[h].log_prob + logp[static_cast<std::size_t>(tok)];
        const std::size_t len = live[h].tokens.size() + 1;
        cands.push_back({detail::rank_score(lp, len, opts.length_norm), lp, h, tok});
      }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent != b.parent) return a.parent < b.parent;
      return a.token < b.token;
    });

    std::vector<Hyp> survivors;
    for (const Candidate& c : cands) {
      const Hyp& parent = live[c.parent];
      if (c.token == opts.eou) {
        finished.push_back(DecodeResult{parent.tokens, c.log_prob, true});
        best_finished = std::max(best_finished, c.score);
      } else if (survivors.size() < opts.width) {
        Hyp h{parent.tokens, c.log_prob, next_states[c.parent], c.token};
        h.tokens.push_back(c.token);
        survivors.push_back(std::move(h));
      }
    }
    live = std::move(survivors);
    // Without length normalization scores only fall, so no live hypothesis can
    // overtake a finished one that already beats it.
    if (!opts.length_norm && !live.empty() && best_finished >= live.front().log_prob) break;
  }

  auto better = [&](const DecodeResult& a, const DecodeResult& b) {
    const double sa = detail::rank_score(a.log_prob, a.tokens.size() + 1, opts.length_norm);
    const double sb = detail::rank_score(b.log_prob, b.tokens.size() + 1, opts.length_norm);
    return sa > sb;
  };
  if (!finished.empty()) {
    DecodeResult best = finished.front();
    for (const DecodeResult& r : finished) {
      if (better(r, best)) best = r;
    }
    return best;
  }
  // live is sorted best-first.
  return DecodeResult{live.front().tokens, live.front().log_prob, false};
}

// Step model backed by the neural decoder; owns an inference-only tape.
class NeuralStepModel {
 public:
  using State = model::DecoderState;

  NeuralStepModel(const model::ModelParams& params, std::span<const std::vector<int>> context);

  State start() const { return initial_; }
  std::pair<std::vector<double>, State> step(const State& state, int prev_token);

 private:
  const model::ModelParams& params_;
  tensor::Tape tape_{false};
  model::EncoderOutput enc_;
  State initial_;
};

DecodeResult beam_search(const model::ModelParams& params, std::span<const std::vector<int>> context,
                         const DecodeOptions& opts);
DecodeResult greedy_decode(const model::ModelParams& params, std::span<const std::vector<int>> context,
                           std::size_t max_len);

// Generates `turns` consecutive responses. After each turn the generated
// tokens plus EOU are appended to the context and the dialogue is re-encoded.
std::vector<std::vector<int>> generate_turns(const model::ModelParams& params, std::vector<std::vector<int>> context,
                                             std::size_t turns, const DecodeOptions& opts);

}  // namespace hscjn::decode
