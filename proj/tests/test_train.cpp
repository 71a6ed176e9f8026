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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <sstream>

#include "common/errors.hpp"
#include "decode/decode.hpp"
#include "support.hpp"
#include "train/checkpoint.hpp"
#include "train/trainer.hpp"

using namespace hscjn;
using namespace hscjn::train;
using tensor::Parameter;
using tensor::Tensor;

namespace {

TrainConfig small_config(const testing::TempDir& dir) {
  TrainConfig c;
  c.embed_dim = c.word_enc_dim = c.utt_enc_dim = c.dec_dim = c.attn_dim = c.head_hidden_dim = 8;
  c.learning_rate = 0.01;
  c.batch_size = 4;
  c.epochs = 3;
  c.fixed_epochs = true;
  c.init_std = 0.1;
  c.dropout = 0.1;
  c.seed = 11;
  c.beam_width = 2;
  c.max_len = 8;
  c.threads = 2;
  testing::write_file(dir / "train.txt", testing::toy_corpus_20());
  c.train_path = (dir / "train.txt").string();
  return c;
}

// Log lines without the wall clock.
std::vector<std::string> stable_log(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    nlohmann::json j = nlohmann::json::parse(line);
    j.erase("wall_time");
    out.push_back(j.dump());
  }
  return out;
}

}  // namespace

TEST_CASE("Adam: zero gradient changes nothing") {
  Parameter p("w", Tensor::vector({0.5, -1.0, 2.0}));
  Tensor m = Tensor(tensor::Shape{3}), v = Tensor(tensor::Shape{3});
  p.grad = Tensor(tensor::Shape{3});
  adam_update(p, m, v, 1, {});
  CHECK(p.value.values()[0] == 0.5);
  CHECK(p.value.values()[2] == 2.0);
  for (double x : m.values()) CHECK(x == 0.0);
  for (double x : v.values()) CHECK(x == 0.0);
}

TEST_CASE("Adam: bias-corrected first step moves each weight by about lr") {
  for (double g : {0.3, -7.0, 1e-2}) {
    Parameter p("w", Tensor::scalar(1.0));
    Tensor m = Tensor(tensor::Shape{}), v = Tensor(tensor::Shape{});
    p.grad = Tensor::scalar(g);
    AdamOptions o;
    o.learning_rate = 0.01;
    adam_update(p, m, v, 1, o);
    const double delta = p.value.item() - 1.0;
    CHECK(std::abs(std::abs(delta) - 0.01) < 1e-6);
    CHECK((delta < 0) == (g > 0));
  }
  Parameter p("w", Tensor::scalar(1.0));
  Tensor m = Tensor(tensor::Shape{}), v = Tensor(tensor::Shape{});
  CHECK_THROWS_AS(adam_update(p, m, v, 0, {}), UsageError);
}

TEST_CASE("Adam: second step follows the textbook recurrence") {
  Parameter p("w", Tensor::scalar(0.0));
  Tensor m = Tensor(tensor::Shape{}), v = Tensor(tensor::Shape{});
  AdamOptions o;
  o.learning_rate = 0.1;
  double w = 0.0, mm = 0.0, vv = 0.0;
  const double grads[] = {1.0, -0.5, 2.0};
  for (std::size_t t = 1; t <= 3; ++t) {
    const double g = grads[t - 1];
    p.grad = Tensor::scalar(g);
    adam_update(p, m, v, t, o);
    mm = 0.9 * mm + 0.1 * g;
    vv = 0.999 * vv + 0.001 * g * g;
    const double mh = mm / (1 - std::pow(0.9, static_cast<double>(t)));
    const double vh = vv / (1 - std::pow(0.999, static_cast<double>(t)));
    w -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    CHECK(p.value.item() == doctest::Approx(w).epsilon(1e-12));
  }
}

TEST_CASE("gradient clipping") {
  Parameter a("a", Tensor::vector({0, 0})), b("b", Tensor::scalar(0));
  a.grad = Tensor::vector({3, 0});
  b.grad = Tensor::scalar(4);
  Parameter* ps[] = {&a, &b};
  CHECK(clip_grad_norm(ps, 1.0) == doctest::Approx(5.0));
  CHECK(a.grad.values()[0] == doctest::Approx(0.6));
  CHECK(b.grad.item() == doctest::Approx(0.8));
  CHECK(clip_grad_norm(ps, 10.0) == doctest::Approx(1.0));
  CHECK(b.grad.item() == doctest::Approx(0.8));
}

TEST_CASE("dropout keeps the expectation") {
  std::mt19937_64 rng(5);
  tensor::Tape t(false);
  const tensor::Var x = t.constant(Tensor(tensor::Shape{100000}, 1.0));
  const Tensor y = tensor::dropout(x, 0.25, true, rng).value();
  double s = 0.0;
  for (double v : y.values()) s += v;
  CHECK(std::abs(s / 1e5 - 1.0) < 0.01);
  CHECK(tensor::dropout(x, 0.25, false, rng).value().values()[7] == 1.0);
  CHECK(tensor::dropout(x, 0.0, true, rng).value().values()[7] == 1.0);
}

TEST_CASE("config defaults, parsing and validation") {
  TrainConfig c;
  CHECK(c.alpha == 1.0);
  CHECK(c.beta == 0.13);
  CHECK(c.learning_rate == 2e-4);
  CHECK(c.batch_size == 8);
  CHECK(c.beam_width == 5);
  CHECK(c.max_dialogue_tokens == 300);
  apply_config_text(c, "# comment\nalpha = 0.5\n\nbeta=0  # trailing\nmode=two_turn_target\nwo_pn=yes\n");
  CHECK(c.alpha == 0.5);
  CHECK(c.beta == 0.0);
  CHECK(c.mode == corpus::ExampleMode::kTwoTurnTarget);
  CHECK(c.loss_weights().alpha == 0.0);
  CHECK_THROWS_AS(apply_config_text(c, "nonsense\n"), UsageError);
  CHECK_THROWS_AS(c.set("no_such_key", "1"), UsageError);
  CHECK_THROWS_AS(c.set("batch_size", "-3"), UsageError);
  CHECK_THROWS_AS(c.set("alpha", "abc"), UsageError);
  TrainConfig bad;
  bad.alpha = 1.5;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = {};
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = {};
  bad.dropout = 1.0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  for (const std::string& k : TrainConfig::keys()) {
    TrainConfig d, e;
    e.set(k, d.get(k));
    CHECK(e.get(k) == d.get(k));
  }
}

TEST_CASE("paper-scale switch restores the paper's sizes") {
  TrainConfig c;
  c.paper_scale = true;
  const model::ModelConfig mc = c.model_config(100);
  CHECK(mc.embed_dim == 300);
  CHECK(mc.word_enc_dim == 500);
  CHECK(mc.utt_enc_dim == 1000);
  CHECK(mc.dec_dim == 500);
}

TEST_CASE("environment seed override") {
  TrainConfig c;
  ::setenv("HSCJN_SEED", "4242", 1);
  apply_environment(c);
  ::unsetenv("HSCJN_SEED");
  CHECK(c.seed == 4242);
}

TEST_CASE("logged totals decompose exactly") {
  testing::TempDir dir("bookkeeping");
  TrainConfig c = small_config(dir);
  c.epochs = 1;
  const TrainResult r = train::train(c);
  const std::size_t n_batches = (prepare_examples(c.train_path, c, r.state.vocab).size() + 3) / 4;
  REQUIRE(r.log.size() == n_batches);
  for (const LogEntry& e : r.log) {
    CHECK(e.loss.total == e.loss.nll + c.alpha * e.loss.l_wp + c.beta * e.loss.l_me);
    const nlohmann::json j = e.to_json();
    for (const char* k : {"step", "epoch", "batch", "nll", "l_wp", "l_me", "total", "mean_entropy", "wall_time"}) {
      CHECK(j.contains(k));
    }
  }
  CHECK(r.state.step == n_batches);
}

TEST_CASE("same seed gives identical parameters and metrics") {
  testing::TempDir dir("determinism");
  const TrainConfig c = small_config(dir);
  const TrainResult a = train::train(c);
  const TrainResult b = train::train(c);
  const auto pa = a.state.params.all();
  const auto pb = b.state.params.all();
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(std::ranges::equal(pa[i]->value.values(), pb[i]->value.values()));
  const auto ex = prepare_examples(c.train_path, c, a.state.vocab);
  const EvalOutput ea = evaluate_split(a.state.params, a.state.vocab, ex, c);
  const EvalOutput eb = evaluate_split(b.state.params, b.state.vocab, ex, c);
  CHECK(ea.report.to_json() == eb.report.to_json());
  CHECK(ea.responses == eb.responses);

  TrainConfig other = c;
  other.seed = 12;
  const TrainResult o = train::train(other);
  CHECK_FALSE(std::ranges::equal(o.state.params.all()[0]->value.values(), pa[0]->value.values()));
}

TEST_CASE("width-1 evaluation equals greedy decoding") {
  testing::TempDir dir("greedy");
  TrainConfig c = small_config(dir);
  c.epochs = 2;
  const TrainResult r = train::train(c);
  c.beam_width = 1;
  const auto ex = prepare_examples(c.train_path, c, r.state.vocab);
  const EvalOutput e = evaluate_split(r.state.params, r.state.vocab, ex, c);
  REQUIRE(e.responses.size() == ex.size());
  for (std::size_t i = 0; i < ex.size(); ++i) {
    const decode::DecodeResult g = decode::greedy_decode(r.state.params, ex[i].context, c.max_len);
    std::string line;
    for (const std::string& w : r.state.vocab.decode(g.tokens)) line += (line.empty() ? "" : " ") + w;
    CHECK(e.responses[i] == line);
  }
}

TEST_CASE("checkpoint round trip is byte-identical") {
  testing::TempDir dir("ckpt");
  TrainConfig c = small_config(dir);
  c.epochs = 1;
  c.checkpoint_path = (dir / "a.ckpt").string();
  const TrainResult r = train::train(c);
  const std::string bytes = testing::read_file(dir / "a.ckpt");
  CHECK(bytes == serialize_checkpoint(r.state));
  const TrainState back = load_checkpoint(dir / "a.ckpt");
  save_checkpoint(back, dir / "b.ckpt");
  CHECK(testing::read_file(dir / "b.ckpt") == bytes);
  CHECK(back.step == r.state.step);
  CHECK(back.adam.t == r.state.adam.t);
  CHECK(back.vocab.size() == r.state.vocab.size());

  std::string broken = bytes;
  broken[0] = 'X';
  CHECK_THROWS_WITH_AS(deserialize_checkpoint(broken), doctest::Contains("not an HSCJN checkpoint"), FormatError);
  std::string version = bytes;
  version[5] = '9';
  CHECK_THROWS_WITH_AS(deserialize_checkpoint(version), doctest::Contains("unsupported checkpoint version"),
                       FormatError);
  std::string header = bytes;
  header[12] = '\x01';
  CHECK_THROWS_AS(deserialize_checkpoint(header), FormatError);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)), FormatError);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes + "x"), FormatError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), IoError);
}

TEST_CASE("resume reproduces the unbroken loss log bit-exactly") {
  testing::TempDir dir("resume");
  TrainConfig c = small_config(dir);
  c.epochs = 4;
  c.log_path = (dir / "full.log").string();
  train::train(c);

  TrainConfig first = c;
  first.epochs = 2;
  first.log_path = (dir / "split.log").string();
  first.checkpoint_path = (dir / "mid.ckpt").string();
  train::train(first);
  TrainConfig second = c;
  second.log_path = first.log_path;
  second.resume_path = first.checkpoint_path;
  const TrainResult resumed = train::train(second);
  CHECK(resumed.state.epoch == 4);

  const auto full = stable_log(testing::read_file(dir / "full.log"));
  const auto split = stable_log(testing::read_file(dir / "split.log"));
  REQUIRE(full.size() == 4 * ((prepare_examples(c.train_path, c, resumed.state.vocab).size() + 3) / 4));
  CHECK(split == full);

  TrainConfig mismatch = second;
  mismatch.dec_dim = 16;
  CHECK_THROWS_AS(train::train(mismatch), UsageError);
}

TEST_CASE("early stopping halts once validation stops improving") {
  testing::TempDir dir("early");
  TrainConfig c = small_config(dir);
  c.fixed_epochs = false;
  c.epochs = 200;
  c.patience = 1;
  c.learning_rate = 0.05;
  testing::write_file(dir / "valid.txt", "hello there __eou__ where is the cat __eou__\nbig dog __eou__ red bus __eou__\n");
  c.valid_path = (dir / "valid.txt").string();
  const TrainResult r = train::train(c);
  CHECK(r.early_stopped);
  CHECK(r.state.epoch < 200);
  CHECK(r.state.bad_epochs == 1);
}

TEST_CASE("non-finite loss aborts with a diagnostic") {
  testing::TempDir dir("nan");
  TrainConfig c = small_config(dir);
  const auto vocab = corpus::Vocabulary::build(corpus::parse_corpus(c.train_path).dialogues, c.vocab_cap);
  TrainState s = TrainState::create(c, vocab);
  for (Parameter* p : s.params.all()) {
    if (p->name == "output.b") p->value.fill(std::nan(""));
  }
  const auto ex = prepare_examples(c.train_path, c, vocab);
  CHECK_THROWS_WITH_AS(train_epoch(s, corpus::batch_examples(ex, 4)), doctest::Contains("step"), NumericError);
}

TEST_CASE("L_WP falls by half on the toy corpus") {
  testing::TempDir dir("wp");
  TrainConfig c = small_config(dir);
  c.dropout = 0.0;
  c.epochs = 40;
  const TrainResult r = train::train(c);
  const auto ex = prepare_examples(c.train_path, c, r.state.vocab);
  TrainState fresh = TrainState::create(c, r.state.vocab);
  const double before = dataset_loss(fresh, ex).mean.l_wp;
  const double after = dataset_loss(r.state, ex).mean.l_wp;
  MESSAGE("L_WP " << before << " -> " << after);
  CHECK(after <= 0.5 * before);
}
