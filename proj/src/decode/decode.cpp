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

#include "decode/decode.hpp"

namespace hscjn::decode {

NeuralStepModel::NeuralStepModel(const model::ModelParams& params, std::span<const std::vector<int>> context)
    : params_(params) {
  enc_ = model::encode_dialogue(tape_, params_, context);
  initial_ = model::init_decoder_state(tape_, params_, enc_);
}

std::pair<std::vector<double>, NeuralStepModel::State> NeuralStepModel::step(const State& state, int prev_token) {
  model::StepOutput out = model::decoder_step(tape_, params_, prev_token, state, enc_);
  const auto lp = out.log_probs.value().values();
  return {std::vector<double>(lp.begin(), lp.end()), out.state};
}

DecodeResult beam_search(const model::ModelParams& params, std::span<const std::vector<int>> context,
                         const DecodeOptions& opts) {
  NeuralStepModel m(params, context);
  return beam_search(m, opts);
}

DecodeResult greedy_decode(const model::ModelParams& params, std::span<const std::vector<int>> context,
                           std::size_t max_len) {
  NeuralStepModel m(params, context);
  return greedy_decode(m, max_len);
}

std::vector<std::vector<int>> generate_turns(const model::ModelParams& params, std::vector<std::vector<int>> context,
                                             std::size_t turns, const DecodeOptions& opts) {
  std::vector<std::vector<int>> out;
  for (std::size_t k = 0; k < turns; ++k) {
    DecodeResult r = beam_search(params, context, opts);
    out.push_back(r.tokens);
    std::vector<int> utt = r.tokens;
    utt.push_back(opts.eou);
    context.push_back(std::move(utt));
  }
  return out;
}

}  // namespace hscjn::decode
