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

#include "model/model.hpp"

#include <Eigen/Dense>
#include <algorithm>

#include "common/errors.hpp"

namespace hscjn::model {

namespace ops = hscjn::tensor;

AttentionForm parse_attention_form(std::string_view name) {
  if (name == "additive") return AttentionForm::kAdditive;
  if (name == "scalar_wc") return AttentionForm::kScalarWc;
  throw UsageError("unknown attention form '" + std::string(name) + "' (expected additive or scalar_wc)");
}

std::string_view to_string(AttentionForm form) {
  return form == AttentionForm::kScalarWc ? "scalar_wc" : "additive";
}

ModelConfig ModelConfig::paper_scale(std::size_t vocab_size) {
  ModelConfig c;
  c.vocab_size = vocab_size;
  c.embed_dim = 300;
  c.word_enc_dim = 500;
  c.utt_enc_dim = 1000;
  c.dec_dim = 500;
  c.attn_dim = 500;
  c.head_hidden_dim = 500;
  return c;
}

void ModelConfig::validate() const {
  if (vocab_size < 5) throw UsageError("vocab_size must be at least 5 (4 reserved ids + 1), got " + std::to_string(vocab_size));
  const std::pair<const char*, std::size_t> dims[] = {
      {"embed_dim", embed_dim}, {"word_enc_dim", word_enc_dim}, {"utt_enc_dim", utt_enc_dim},
      {"dec_dim", dec_dim},     {"attn_dim", attn_dim},         {"head_hidden_dim", head_hidden_dim}};
  for (const auto& [name, d] : dims) {
    if (d < 1) throw UsageError(std::string(name) + " must be at least 1");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw UsageError("dropout_rate must lie in [0, 1)");
  if (!(init_std > 0.0)) throw UsageError("init_std must be positive");
}

Tensor orthogonal_matrix(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = gauss(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index c = 0; c < q.cols(); ++c) {
    if (r(c, c) < 0) q.col(c) *= -1.0;
  }
  Tensor out({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) = q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  return out;
}

Parameter* ModelParams::add(std::string name, tensor::Shape shape) {
  owned_.push_back(std::make_unique<Parameter>(std::move(name), Tensor(std::move(shape))));
  view_.push_back(owned_.back().get());
  return view_.back();
}

Parameter& ModelParams::get(std::string_view name) const {
  for (Parameter* p : view_) {
    if (p->name == name) return *p;
  }
  throw UsageError("no parameter named '" + std::string(name) + "'");
}

std::vector<Parameter*> ModelParams::recurrent_matrices() const {
  std::vector<Parameter*> out;
  for (const std::string& n : recurrent_) out.push_back(&get(n));
  return out;
}

std::size_t ModelParams::count() const {
  std::size_t n = 0;
  for (const Parameter* p : view_) n += p->value.size();
  return n;
}

void ModelParams::zero_grad() {
  for (Parameter* p : view_) p->zero_grad();
}

ModelParams ModelParams::init(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ModelParams m(cfg);
  const std::size_t V = cfg.vocab_size, E = cfg.embed_dim, H = cfg.word_enc_dim, U = cfg.utt_enc_dim,
                    D = cfg.dec_dim, K = cfg.head_hidden_dim;
  const std::size_t A = cfg.attention == AttentionForm::kScalarWc ? 1 : cfg.attn_dim;

  // Recurrent matrices are recorded by name; biases are left at zero.
  auto gru = [&](const std::string& prefix, std::size_t in, std::size_t hid) {
    GruWeights g{};
    Parameter** slots[3][3] = {{&g.Wz, &g.Uz, &g.bz}, {&g.Wr, &g.Ur, &g.br}, {&g.Wh, &g.Uh, &g.bh}};
    const char* gates = "zrh";
    for (int k = 0; k < 3; ++k) {
      *slots[k][0] = m.add(prefix + ".W" + gates[k], {hid, in});
      *slots[k][1] = m.add(prefix + ".U" + gates[k], {hid, hid});
      *slots[k][2] = m.add(prefix + ".b" + gates[k], {hid});
      m.recurrent_.push_back((*slots[k][1])->name);
    }
    return g;
  };

  m.embedding = m.add("embedding", {V, E});
  m.word_fwd = gru("word_enc", E, H);
  if (cfg.bidirectional_word_encoder) m.word_bwd = gru("word_enc_bwd", E, H);
  m.utterance = gru("utt_enc", H, U);
  {
    LstmWeights& l = m.decoder;
    Parameter** slots[4][3] = {{&l.Wi, &l.Ui, &l.bi}, {&l.Wf, &l.Uf, &l.bf}, {&l.Wo, &l.Uo, &l.bo}, {&l.Wg, &l.Ug, &l.bg}};
    const char* gates = "ifog";
    for (int k = 0; k < 4; ++k) {
      *slots[k][0] = m.add(std::string("decoder.W") + gates[k], {D, E + H});
      *slots[k][1] = m.add(std::string("decoder.U") + gates[k], {D, D});
      *slots[k][2] = m.add(std::string("decoder.b") + gates[k], {D});
      m.recurrent_.push_back((*slots[k][1])->name);
    }
  }
  m.attention.query = m.add("attention.query", {A, D});
  m.attention.key = m.add("attention.key", {H, A});
  m.attention.v = cfg.attention == AttentionForm::kAdditive ? m.add("attention.v", {A}) : nullptr;
  m.W_init = m.add("init.W", {D, U});
  m.b_init = m.add("init.b", {D});
  m.W_out = m.add("output.W", {V, D + H});
  m.b_out = m.add("output.b", {V});
  m.head.W1_step = m.add("head.W1_step", {K, E + D + H});
  m.head.b1_step = m.add("head.b1_step", {K});
  m.head.W1_init = m.add("head.W1_init", {K, D + H});
  m.head.b1_init = m.add("head.b1_init", {K});
  m.head.W2 = m.add("head.W2", {K, K});
  m.head.b2 = m.add("head.b2", {K});
  m.head.W3 = m.add("head.W3", {V, K});
  m.head.b3 = m.add("head.b3", {V});

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, cfg.init_std);
  for (Parameter* p : m.view_) {
    const bool recurrent = std::find(m.recurrent_.begin(), m.recurrent_.end(), p->name) != m.recurrent_.end();
    if (recurrent) {
      p->value = orthogonal_matrix(p->value.dim(0), rng);
    } else if (p->value.rank() == 1 && p != m.attention.v) {
      p->value.fill(0.0);  // bias
    } else {
      for (double& v : p->value.values()) v = gauss(rng);
    }
  }
  return m;
}

namespace {

Var affine(Tape& t, Parameter* W, Var x, Parameter* b) { return ops::add(ops::matmul(t.param(*W), x), t.param(*b)); }

Var affine2(Tape& t, Parameter* W, Var x, Parameter* U, Var h, Parameter* b) {
  return ops::add(ops::add(ops::matmul(t.param(*W), x), ops::matmul(t.param(*U), h)), t.param(*b));
}

void check_dim(const char* what, Var v, std::size_t expected) {
  const auto& s = v.shape();
  if (s.size() != 1 || s[0] != expected) {
    throw DimensionError(std::string(what) + ": expected a vector of length " + std::to_string(expected) + ", got " +
                         tensor::to_string(s));
  }
}

Var zeros(Tape& t, std::size_t n) { return t.constant(Tensor({n})); }

Var maybe_dropout(Var x, double rate, const ForwardOptions& opts) {
  if (!opts.training || rate == 0.0) return x;
  if (!opts.rng) throw UsageError("training forward pass with dropout needs an RNG");
  return ops::dropout(x, rate, true, *opts.rng);
}

}  // namespace

Var gru_step(Tape& t, const GruWeights& w, Var x, Var h) {
  check_dim("gru_step input", x, w.Wz->value.dim(1));
  check_dim("gru_step state", h, w.Uz->value.dim(0));
  Var z = ops::sigmoid(affine2(t, w.Wz, x, w.Uz, h, w.bz));
  Var r = ops::sigmoid(affine2(t, w.Wr, x, w.Ur, h, w.br));
  Var cand = ops::tanh(affine2(t, w.Wh, x, w.Uh, ops::mul(r, h), w.bh));
  Var keep = ops::mul(ops::add_scalar(ops::neg(z), 1.0), h);
  return ops::add(keep, ops::mul(z, cand));
}

LstmState lstm_step(Tape& t, const LstmWeights& w, Var x, LstmState st) {
  check_dim("lstm_step input", x, w.Wi->value.dim(1));
  check_dim("lstm_step hidden", st.h, w.Ui->value.dim(0));
  check_dim("lstm_step cell", st.c, w.Ui->value.dim(0));
  Var i = ops::sigmoid(affine2(t, w.Wi, x, w.Ui, st.h, w.bi));
  Var f = ops::sigmoid(affine2(t, w.Wf, x, w.Uf, st.h, w.bf));
  Var o = ops::sigmoid(affine2(t, w.Wo, x, w.Uo, st.h, w.bo));
  Var g = ops::tanh(affine2(t, w.Wg, x, w.Ug, st.h, w.bg));
  Var c = ops::add(ops::mul(f, st.c), ops::mul(i, g));
  return {ops::mul(o, ops::tanh(c)), c};
}

Var embed(Tape& t, const ModelParams& params, int token, const ForwardOptions& opts) {
  if (token < 0 || static_cast<std::size_t>(token) >= params.config().vocab_size) {
    throw UsageError("token id " + std::to_string(token) + " outside vocabulary of size " +
                     std::to_string(params.config().vocab_size));
  }
  Var e = ops::row(t.param(*params.embedding), static_cast<std::size_t>(token));
  return maybe_dropout(e, params.config().dropout_rate, opts);
}

EncoderOutput encode_dialogue(Tape& t, const ModelParams& params, std::span<const std::vector<int>> context,
                              const ForwardOptions& opts) {
  if (context.empty()) throw UsageError("encode_dialogue: empty context");
  const ModelConfig& cfg = params.config();
  std::vector<Var> states;
  std::vector<Var> summaries;
  for (const std::vector<int>& utt : context) {
    if (utt.empty()) throw UsageError("encode_dialogue: empty context utterance");
    std::vector<Var> emb;
    for (int tok : utt) emb.push_back(embed(t, params, tok, opts));

    std::vector<Var> fwd;
    Var h = zeros(t, cfg.word_enc_dim);
    for (Var e : emb) fwd.push_back(h = gru_step(t, params.word_fwd, e, h));
    if (cfg.bidirectional_word_encoder) {
      std::vector<Var> bwd(emb.size());
      Var hb = zeros(t, cfg.word_enc_dim);
      for (std::size_t k = emb.size(); k-- > 0;) bwd[k] = hb = gru_step(t, params.word_bwd, emb[k], hb);
      for (std::size_t k = 0; k < emb.size(); ++k) states.push_back(ops::add(fwd[k], bwd[k]));
      summaries.push_back(ops::add(fwd.back(), bwd.front()));
    } else {
      states.insert(states.end(), fwd.begin(), fwd.end());
      summaries.push_back(fwd.back());
    }
  }

  Var u = zeros(t, cfg.utt_enc_dim);
  for (Var s : summaries) u = gru_step(t, params.utterance, s, u);

  EncoderOutput out;
  out.word_states = ops::stack(states);
  out.keys = ops::matmul(out.word_states, t.param(*params.attention.key));
  out.mask.assign(states.size(), true);
  out.utterance_summary = u;
  return out;
}

Attention attend(Tape& t, const ModelParams& params, Var query, const EncoderOutput& enc) {
  check_dim("attention query", query, params.config().dec_dim);
  if (enc.length() == 0) throw UsageError("attention over an empty encoder output");
  Var q = ops::matmul(t.param(*params.attention.query), query);  // [A]
  Var hidden = ops::tanh(ops::add(enc.keys, q));                  // [T x A]
  Var scores = params.attention.v ? ops::matmul(hidden, t.param(*params.attention.v))
                                  : ops::reshape(hidden, {enc.length()});
  Var a = ops::masked_softmax(scores, enc.mask);
  return {ops::matmul(a, enc.word_states), a};
}

DecoderState init_decoder_state(Tape& t, const ModelParams& params, const EncoderOutput& enc) {
  check_dim("utterance summary", enc.utterance_summary, params.config().utt_enc_dim);
  DecoderState st;
  st.lstm.h = ops::tanh(affine(t, params.W_init, enc.utterance_summary, params.b_init));
  st.lstm.c = zeros(t, params.config().dec_dim);
  st.context = attend(t, params, st.lstm.h, enc).context;
  return st;
}

StepOutput decoder_step(Tape& t, const ModelParams& params, int prev_token, const DecoderState& state,
                        const EncoderOutput& enc, const ForwardOptions& opts) {
  StepOutput out;
  out.embedding = embed(t, params, prev_token, opts);
  out.context = state.context.valid() ? state.context : attend(t, params, state.lstm.h, enc).context;
  const Var input[] = {out.embedding, out.context};
  out.state.lstm = lstm_step(t, params.decoder, ops::concat(input), state.lstm);
  out.state.step = state.step + 1;
  const Var feats[] = {out.state.lstm.h, out.context};
  Var features = maybe_dropout(ops::concat(feats), params.config().dropout_rate, opts);
  out.logits = affine(t, params.W_out, features, params.b_out);
  out.log_probs = ops::log_softmax(out.logits);
  return out;
}

}  // namespace hscjn::model
