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

#include <map>
#include <random>
#include <sstream>

#include "common/errors.hpp"
#include "corpus/corpus.hpp"
#include "loss/hscjn_loss.hpp"
#include "support.hpp"

using namespace hscjn;
using namespace hscjn::corpus;
using hscjn::testing::TempDir;
using hscjn::testing::write_file;

namespace {

Dialogue dialogue(std::initializer_list<Tokens> utts) { return Dialogue{std::vector<Tokens>(utts)}; }

Dialogue dialogue_with_tokens(std::size_t n) {
  Dialogue d;
  d.utterances.push_back(Tokens(n / 2, "a"));
  d.utterances.push_back(Tokens(n - n / 2, "b"));
  return d;
}

}  // namespace

TEST_CASE("parse a single dialogue line") {
  const ParsedCorpus c = parse_corpus_text("hi __eou__ hello there __eou__\n");
  REQUIRE(c.dialogues.size() == 1);
  CHECK(c.dialogues[0] == dialogue({{"hi"}, {"hello", "there"}}));
  CHECK(c.dropped == 0);
}

TEST_CASE("one-utterance lines are dropped and counted") {
  CHECK_THROWS_AS(parse_corpus_text("hi __eou__\n"), FormatError);
  const ParsedCorpus c = parse_corpus_text("a __eou__ b __eou__\nhi __eou__\nc __eou__ d __eou__ e __eou__\n");
  CHECK(c.dialogues.size() == 2);
  CHECK(c.dropped == 1);
}

TEST_CASE("empty utterances vanish and trailing delimiters are optional") {
  const ParsedCorpus c = parse_corpus_text("a __eou__ __eou__   __eou__ B c\n\n");
  REQUIRE(c.dialogues.size() == 1);
  CHECK(c.dialogues[0] == dialogue({{"a"}, {"b", "c"}}));
}

TEST_CASE("file errors") {
  CHECK_THROWS_AS(parse_corpus("/nonexistent/dir/corpus.txt"), IoError);
  TempDir dir("corpus");
  write_file(dir / "empty.txt", "");
  CHECK_THROWS_AS(parse_corpus(dir / "empty.txt"), FormatError);
  write_file(dir / "ok.txt", "x __eou__ y __eou__\n");
  CHECK(parse_corpus(dir / "ok.txt").dialogues.size() == 1);
}

TEST_CASE("tokenizer") {
  CHECK(tokenize_utterance("How are you ?") == Tokens{"how", "are", "you", "?"});
  CHECK(tokenize_utterance("").empty());
  CHECK(tokenize_utterance(" a  b ") == Tokens{"a", "b"});
  CHECK(tokenize_utterance("A\tB\r") == Tokens{"a", "b"});
}

TEST_CASE("length filter keeps the boundary") {
  std::vector<Dialogue> ds = {dialogue_with_tokens(300), dialogue_with_tokens(301), dialogue_with_tokens(5)};
  const FilterResult r = filter_dialogues(ds, 300);
  REQUIRE(r.kept.size() == 2);
  CHECK(r.kept[0].token_count() == 300);
  CHECK(r.kept[1].token_count() == 5);
  CHECK(r.removed == 1);
  CHECK(filter_dialogues({}, 300).kept.empty());
}

TEST_CASE("vocabulary ranking, cap and ties") {
  const std::vector<Dialogue> ds = {dialogue({{"c", "a", "b"}, {"a", "b", "a"}})};
  const Vocabulary v = Vocabulary::build(ds, 2);
  CHECK(v.size() == 6);
  CHECK(v.token(kNumSpecial) == "a");
  CHECK(v.token(kNumSpecial + 1) == "b");
  CHECK(v.id("c") == kUnk);
  CHECK(v.count(kNumSpecial) == 3);
  CHECK(v.token(kPad) == "<pad>");
  CHECK(v.token(kUnk) == "<unk>");
  CHECK(v.token(kSos) == "<sos>");
  CHECK(v.token(kEou) == "<eou>");

  const Vocabulary tie = Vocabulary::build({dialogue({{"b", "a"}, {"b", "a"}})}, 1);
  CHECK(tie.size() == 5);
  CHECK(tie.token(kNumSpecial) == "a");
}

TEST_CASE("vocabulary size never exceeds cap + 4 and is deterministic") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Dialogue> ds;
    for (int d = 0; d < 10; ++d) {
      Dialogue dl;
      for (int u = 0; u < 3; ++u) {
        Tokens t;
        for (int k = 0; k < 6; ++k) t.push_back("w" + std::to_string(rng() % 40));
        dl.utterances.push_back(t);
      }
      ds.push_back(dl);
    }
    const std::size_t cap = 1 + rng() % 50;
    const Vocabulary a = Vocabulary::build(ds, cap);
    const Vocabulary b = Vocabulary::build(ds, cap);
    CHECK(a.size() <= cap + 4);
    CHECK(a.tokens() == b.tokens());
    for (std::size_t i = kNumSpecial; i < a.size(); ++i) {
      CHECK(a.id(a.token(static_cast<int>(i))) == static_cast<int>(i));
      if (i + 1 < a.size()) {
        const auto c0 = a.count(static_cast<int>(i));
        const auto c1 = a.count(static_cast<int>(i + 1));
        CHECK((c0 > c1 || (c0 == c1 && a.token(static_cast<int>(i)) < a.token(static_cast<int>(i + 1)))));
      }
    }
  }
}

TEST_CASE("vocabulary dump and restore") {
  const Vocabulary v = Vocabulary::build({dialogue({{"x", "y"}, {"x"}})}, 10);
  std::istringstream in(v.dump());
  std::string line;
  std::getline(in, line);
  CHECK(line == "<pad>\t0\t0");
  const std::string dump = v.dump();
  CHECK(dump.find("x\t4\t2\n") != std::string::npos);
  CHECK(dump.find("y\t5\t1\n") != std::string::npos);
  const Vocabulary r = Vocabulary::from_tokens({"x", "y"});
  CHECK(r.tokens() == v.tokens());
}

TEST_CASE("example modes") {
  const std::vector<Dialogue> three = {dialogue({{"a"}, {"b"}, {"c"}})};
  const auto next = make_examples(three, ExampleMode::kNextTurn);
  REQUIRE(next.size() == 2);
  CHECK(next[0] == TextExample{{{"a"}}, {{"b"}}});
  CHECK(next[1] == TextExample{{{"a"}, {"b"}}, {{"c"}}});

  const auto prev = make_examples(three, ExampleMode::kTwoPrevSource);
  REQUIRE(prev.size() == 1);
  CHECK(prev[0] == TextExample{{{"a"}, {"b"}}, {{"c"}}});

  const std::vector<Dialogue> five = {dialogue({{"a"}, {"b"}, {"c"}, {"d"}, {"e"}})};
  const auto prev5 = make_examples(five, ExampleMode::kTwoPrevSource);
  REQUIRE(prev5.size() == 3);
  CHECK(prev5[2] == TextExample{{{"c"}, {"d"}}, {{"e"}}});

  const std::vector<Dialogue> four = {dialogue({{"a"}, {"b"}, {"c"}, {"d"}})};
  const auto two = make_examples(four, ExampleMode::kTwoTurnTarget);
  REQUIRE(two.size() == 2);
  CHECK(two[0] == TextExample{{{"a"}}, {{"b"}, {"c"}}});
  CHECK(two[1] == TextExample{{{"a"}, {"b"}}, {{"c"}, {"d"}}});

  CHECK(parse_example_mode("two_turn_target") == ExampleMode::kTwoTurnTarget);
  CHECK(to_string(ExampleMode::kTwoPrevSource) == "two_prev_source");
  CHECK_THROWS_AS(parse_example_mode("three_turn"), UsageError);
}

TEST_CASE("encoding appends EOU and maps unseen words to UNK") {
  const Vocabulary v = Vocabulary::from_tokens({"hi", "there"});
  const TrainingExample ex = encode_example(TextExample{{{"there", "hi"}}, {{"hi"}}}, v);
  CHECK(ex.targets[0] == std::vector<int>{v.id("hi"), kEou});
  CHECK(ex.context[0] == std::vector<int>{v.id("there"), v.id("hi"), kEou});
  const TrainingExample unk = encode_example(TextExample{{{"hi"}}, {{"zzzz"}}}, v);
  CHECK(unk.targets[0] == std::vector<int>{kUnk, kEou});
}

TEST_CASE("decode(encode(x)) is the identity for in-vocabulary text") {
  const Vocabulary v = Vocabulary::from_tokens({"a", "b", "c"});
  std::mt19937_64 rng(6);
  const Tokens words = {"a", "b", "c"};
  for (int trial = 0; trial < 50; ++trial) {
    TextExample x;
    for (int u = 0; u < 1 + static_cast<int>(rng() % 3); ++u) {
      Tokens t;
      for (int k = 0; k < 1 + static_cast<int>(rng() % 5); ++k) t.push_back(words[rng() % 3]);
      x.context.push_back(t);
    }
    x.targets.push_back({words[rng() % 3]});
    const TrainingExample e = encode_example(x, v);
    for (const auto& t : e.targets) CHECK(t.back() == kEou);
    CHECK(decode_example(e, v) == x);
  }
}

TEST_CASE("padding and masks") {
  const PaddedSequences p = pad_sequences({{4, 5, 6}, {4, 5, 6, 7, 8}});
  CHECK(p.rows == 2);
  CHECK(p.cols == 5);
  CHECK(p.ids[3] == kPad);
  std::size_t m0 = 0, m1 = 0;
  for (std::size_t t = 0; t < 5; ++t) {
    m0 += p.mask[t];
    m1 += p.mask[5 + t];
    CHECK((p.mask[t] == 1) == (t < p.lengths[0]));
  }
  CHECK(m0 == 3);
  CHECK(m1 == 5);
  CHECK_THROWS_AS(pad_sequences({{4, kPad, 5}}), UsageError);
}

TEST_CASE("batching") {
  std::vector<TrainingExample> exs;
  for (int i = 0; i < 10; ++i) exs.push_back(testing::tiny_example({{4 + i % 3}, {5, 6}}, {{4, 5, 6}}));
  exs[3] = testing::tiny_example({{4}}, {{5}});
  const auto batches = batch_examples(exs, 8);
  REQUIRE(batches.size() == 2);
  CHECK(batches[0].size == 8);
  CHECK(batches[1].size == 2);
  for (std::size_t i = 0; i < 10; ++i) CHECK(batches[i / 8].example(i % 8) == exs[i]);
  CHECK(batches[0].utterance_counts[3] == 1);
  CHECK(batches[0].context[1].lengths[3] == 0);

  std::vector<TrainingExample> mixed = {testing::tiny_example({{4}}, {{5}}), testing::tiny_example({{4}}, {{5}, {6}})};
  CHECK_THROWS_AS(batch_examples(mixed, 2), UsageError);
  CHECK_THROWS_AS(batch_examples(exs, 0), UsageError);
}

TEST_CASE("batch loss equals the sum of per-example losses") {
  const model::ModelParams params = model::ModelParams::init(testing::tiny_config(9), 5);
  std::vector<TrainingExample> exs = {
      testing::tiny_example({{4, 5}, {6}}, {{7, 8, 4}}),
      testing::tiny_example({{8}}, {{5}}),
      testing::tiny_example({{4, 4, 4, 4, 4}, {5}, {6, 7}}, {{6, 6}}),
  };
  const loss::LossWeights w{1.0, 0.13, false};
  const auto batches = batch_examples(exs, 3);
  tensor::Tape tape(false);
  const auto members = std::vector<TrainingExample>{batches[0].example(0), batches[0].example(1), batches[0].example(2)};
  const loss::BatchLoss bl = loss::batch_loss(tape, params, members, w);
  double sum = 0.0;
  for (const auto& ex : exs) {
    tensor::Tape t(false);
    const loss::ExampleLoss el = loss::example_loss(t, params, ex, w);
    sum += loss::loss_total(el.nll.item(), el.l_wp.item(), el.l_me.item(), w.alpha, w.beta).total;
  }
  CHECK(std::abs(bl.breakdown.total * 3.0 - sum) < 1e-6);
}

TEST_CASE("PAD never influences the loss") {
  model::ModelParams params = model::ModelParams::init(testing::tiny_config(9), 5);
  const std::vector<TrainingExample> exs = {testing::tiny_example({{4, 5}}, {{7, 8}}),
                                            testing::tiny_example({{8, 8, 8, 8}}, {{5}})};
  const auto batch = batch_examples(exs, 2).front();
  const loss::LossWeights w{1.0, 0.13, false};
  auto total = [&] {
    tensor::Tape tape(false);
    const std::vector<TrainingExample> m = {batch.example(0), batch.example(1)};
    return loss::batch_loss(tape, params, m, w).breakdown.total;
  };
  const double before = total();
  for (std::size_t c = 0; c < params.embedding->value.dim(1); ++c) params.embedding->value.at(kPad, c) += 3.0;
  CHECK(total() == before);
}
