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
#include <random>

#include "common/errors.hpp"
#include "loss/hscjn_loss.hpp"
#include "support.hpp"
#include "tensor/grad_check.hpp"

using namespace hscjn;
using namespace hscjn::loss;
using hscjn::testing::tiny_config;
using hscjn::testing::tiny_example;
using tensor::Tensor;

namespace {

// Head whose output layer is constant: every sigmoid score equals sigmoid(bias).
model::ModelParams constant_head(double bias) {
  model::ModelParams p = model::ModelParams::init(tiny_config(), 3);
  p.head.W3->value.fill(0.0);
  p.head.b3->value.fill(bias);
  return p;
}

struct HeadInputs {
  Var e, s, c;
};

HeadInputs random_inputs(Tape& t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return {t.constant(testing::random_tensor({4}, rng)), t.constant(testing::random_tensor({4}, rng)),
          t.constant(testing::random_tensor({4}, rng))};
}

}  // namespace

TEST_CASE("target sets by definition") {
  const std::vector<int> y = {10, 11, 10, 12};
  const TargetWordSets s = build_target_sets(y);
  CHECK(s.length() == 4);
  CHECK(std::vector<int>(s.at_step(1).begin(), s.at_step(1).end()) == y);
  CHECK(std::vector<int>(s.at_step(3).begin(), s.at_step(3).end()) == std::vector<int>{10, 12});
  CHECK(std::vector<int>(s.full().begin(), s.full().end()) == y);
  const std::vector<int> one = {7};
  CHECK(build_target_sets(one).at_step(1).size() == 1);
  CHECK_THROWS_AS(build_target_sets(std::vector<int>{}), UsageError);
  CHECK_THROWS_AS(s.at_step(0), UsageError);
  CHECK_THROWS_AS(s.at_step(5), UsageError);
}

TEST_CASE("target sets: sizes and telescoping on random multisets") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = 1 + rng() % 12;
    std::vector<int> y(m);
    for (int& v : y) v = static_cast<int>(rng() % 4);  // small alphabet forces duplicates
    const TargetWordSets s = build_target_sets(y);
    std::multiset<int> full(y.begin(), y.end());
    CHECK(std::multiset<int>(s.full().begin(), s.full().end()) == full);
    CHECK(std::multiset<int>(s.at_step(1).begin(), s.at_step(1).end()) == full);
    for (std::size_t j = 1; j <= m; ++j) {
      CHECK(s.at_step(j).size() == m - j + 1);
      if (j < m) {
        std::multiset<int> expect(s.at_step(j).begin(), s.at_step(j).end());
        expect.erase(expect.find(y[j - 1]));
        CHECK(std::multiset<int>(s.at_step(j + 1).begin(), s.at_step(j + 1).end()) == expect);
      }
    }
  }
}

TEST_CASE("step log-probability with constant scores") {
  Tape t;
  const HeadInputs in = random_inputs(t, 1);
  const model::ModelParams half = constant_head(0.0);
  const int three[] = {4, 5, 6};
  CHECK(head_step_logprob(t, half, in.e, in.s, in.c, three).item() == doctest::Approx(3.0 * std::log(0.5)));
  CHECK(head_step_logprob(t, half, in.e, in.s, in.c, three).item() == doctest::Approx(-2.0794).epsilon(1e-4));
  const int dup[] = {4, 4};
  CHECK(head_step_logprob(t, half, in.e, in.s, in.c, dup).item() == doctest::Approx(2.0 * std::log(0.5)));
  const model::ModelParams sat = constant_head(1000.0);
  CHECK(head_step_logprob(t, sat, in.e, in.s, in.c, three).item() == 0.0);
  const model::ModelParams dead = constant_head(-1000.0);
  CHECK(head_step_logprob(t, dead, in.e, in.s, in.c, three).item() == doctest::Approx(3.0 * std::log(1e-12)));
}

TEST_CASE("sigmoid head scores lie in (0, 1) and are not normalised") {
  const model::ModelParams p = model::ModelParams::init(tiny_config(), 8);
  Tape t;
  const HeadInputs in = random_inputs(t, 2);
  const Tensor logits = head_step_logits(t, p, in.e, in.s, in.c).value();
  double s = 0.0;
  for (double z : logits.values()) {
    const double q = 1.0 / (1.0 + std::exp(-z));
    CHECK(q > 0.0);
    CHECK(q < 1.0);
    s += q;
  }
  CHECK(std::abs(s - 1.0) > 0.1);
}

TEST_CASE("initial log-probability") {
  Tape t;
  const HeadInputs in = random_inputs(t, 3);
  const int one[] = {5};
  CHECK(head_initial_logprob(t, constant_head(0.0), in.s, in.c, one).item() == doctest::Approx(std::log(0.5)));
  CHECK(head_initial_logprob(t, constant_head(1000.0), in.s, in.c, one).item() == 0.0);

  // The initial variant differs from the step variant only in its first layer.
  model::ModelParams p = model::ModelParams::init(tiny_config(), 4);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 8; ++c) p.head.W1_init->value.at(r, c) = p.head.W1_step->value.at(r, c + 4);
  }
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) p.head.W1_step->value.at(r, c) = 0.0;
  }
  p.head.b1_init->value = p.head.b1_step->value;
  const int set[] = {4, 6, 4};
  CHECK(head_initial_logprob(t, p, in.s, in.c, set).item() ==
        doctest::Approx(head_step_logprob(t, p, in.e, in.s, in.c, set).item()).epsilon(1e-14));
}

TEST_CASE("L_WP hand values") {
  const double ln_half = std::log(0.5);
  const std::vector<double> steps2 = {2 * ln_half, ln_half};
  CHECK(std::abs(loss_wp(2 * ln_half, steps2) - 3.0 * std::log(2.0)) < 1e-9);
  const std::vector<double> steps1 = {ln_half};
  CHECK(std::abs(loss_wp(ln_half, steps1) - 2.0 * std::log(2.0)) < 1e-9);
  const std::vector<double> perfect = {0.0, 0.0, 0.0};
  CHECK(loss_wp(0.0, perfect) == 0.0);
  CHECK_THROWS_AS(loss_wp(0.0, std::vector<double>{}), UsageError);

  Tape t;
  const Var vs[] = {t.constant(Tensor::scalar(2 * ln_half)), t.constant(Tensor::scalar(ln_half))};
  CHECK(loss_wp(t.constant(Tensor::scalar(2 * ln_half)), vs).item() == loss_wp(2 * ln_half, steps2));
}

TEST_CASE("L_WP is non-negative and matches an independent weighting") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-30.0, 0.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng() % 10;
    std::vector<double> lp(m);
    for (double& v : lp) v = u(rng);
    const double p0 = u(rng);
    double want = -p0 / static_cast<double>(m);
    for (std::size_t k = 0; k < m; ++k) want += -lp[k] / static_cast<double>(m - k);
    const double got = loss_wp(p0, lp);
    CHECK(got >= 0.0);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("entropy and L_ME hand values") {
  const std::vector<double> two = {0.9, 0.1};
  CHECK(std::abs(entropy(two) - 0.32508) < 1e-5);
  const std::vector<std::vector<double>> uniform = {{0.25, 0.25, 0.25, 0.25}};
  CHECK(std::abs(loss_me(uniform) + std::log(4.0)) < 1e-9);
  const std::vector<std::vector<double>> onehot = {{0.0, 1.0, 0.0, 0.0}};
  CHECK(loss_me(onehot) == 0.0);
  const std::vector<std::vector<double>> bad = {{0.5, 0.6}};
  CHECK_THROWS_AS(loss_me(bad), UsageError);

  Tape t;
  const Var lp[] = {tensor::log_softmax(t.constant(Tensor::vector({0, 0, 0, 0})))};
  CHECK(std::abs(loss_me(lp).item() + std::log(4.0)) < 1e-9);
}

TEST_CASE("L_ME bounds on random distribution sequences") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng() % 6;
    const std::size_t v = 2 + rng() % 9;
    std::vector<std::vector<double>> dists;
    for (std::size_t s = 0; s < m; ++s) {
      std::vector<double> p(v);
      double z = 0.0;
      for (double& x : p) z += (x = std::exp(std::uniform_real_distribution<double>(-5, 5)(rng)));
      for (double& x : p) x /= z;
      dists.push_back(p);
    }
    const double l = loss_me(dists);
    CHECK(l <= 0.0);
    CHECK(l >= -static_cast<double>(m) * std::log(static_cast<double>(v)) - 1e-12);
  }
}

TEST_CASE("loss_total arithmetic and ablation identities") {
  CHECK(loss_total(2.0, 1.0, -0.5, 1.0, 0.13).total == doctest::Approx(2.935).epsilon(1e-12));
  const double nll = 1.2345678901234567;
  CHECK(loss_total(nll, 3.3, -7.7, 0.0, 0.0).total == nll);
  CHECK(loss_total(nll, 3.3, -7.7, 1.0, 0.0).total == loss_total(nll, 3.3, 100.0, 1.0, 0.0).total);
  LossWeights w{1.5, 0.1, false};
  CHECK_THROWS_AS(w.validate(), UsageError);
  w = {0.5, -0.1, false};
  CHECK_THROWS_AS(w.validate(), UsageError);
}

TEST_CASE("entropy gradient touches every vocabulary logit") {
  std::mt19937_64 rng(31);
  const double err = tensor::grad_check(
      [](Tape&, Var z) {
        const Var lp[] = {tensor::log_softmax(z)};
        return tensor::scale(loss_me(lp), 0.13);
      },
      testing::random_tensor({7}, rng));
  CHECK(err < 1e-5);

  Tape t;
  Var z = t.leaf(testing::random_tensor({7}, rng));
  const Var lp[] = {tensor::log_softmax(z)};
  t.backward(loss_me(lp));
  for (double g : t.grad(z).values()) CHECK(g != 0.0);
}

TEST_CASE("negative-set extension") {
  Tape t;
  Var logits = t.constant(Tensor::vector({0, 0, 0, 0, 0}));
  const int set[] = {1, 1, 3};
  CHECK(negative_set_penalty(logits, set).item() == doctest::Approx(-3.0 * std::log(0.5) / 5.0));
}

TEST_CASE("example loss components") {
  const model::ModelParams p = model::ModelParams::init(tiny_config(), 9);
  const corpus::TrainingExample ex = tiny_example({{4, 5}, {6}}, {{5, 6}});
  Tape t(false);
  const ExampleLoss l = example_loss(t, p, ex, {1.0, 0.13, false});
  CHECK(l.tokens == 3);
  CHECK(l.step_entropies.size() == 3);
  CHECK(l.nll.item() > 0.0);
  CHECK(l.l_wp.item() > 0.0);
  CHECK(l.l_me.item() < 0.0);
  double hs = 0.0;
  for (double h : l.step_entropies) hs += h;
  CHECK(l.l_me.item() == doctest::Approx(-hs).epsilon(1e-12));

  Tape t2(false);
  const ExampleLoss no_head = example_loss(t2, p, ex, {0.0, 0.13, false});
  CHECK(no_head.l_wp.item() == 0.0);
  CHECK(no_head.nll.item() == l.nll.item());
  CHECK(no_head.l_me.item() == l.l_me.item());

  const corpus::TrainingExample two = tiny_example({{4}}, {{5}, {6, 4}});
  Tape t3(false);
  const ExampleLoss l2 = example_loss(t3, p, two, {1.0, 0.13, false});
  CHECK(l2.tokens == 5);
}

TEST_CASE("two-turn loss scores the second turn against the extended context") {
  const model::ModelParams p = model::ModelParams::init(tiny_config(), 9);
  const LossWeights w{1.0, 0.13, false};
  const corpus::TrainingExample both = tiny_example({{4}}, {{5}, {6, 4}});
  const corpus::TrainingExample first = tiny_example({{4}}, {{5}});
  const corpus::TrainingExample second = tiny_example({{4}, {5}}, {{6, 4}});
  Tape a(false), b(false), c(false);
  const ExampleLoss lb = example_loss(a, p, both, w);
  const ExampleLoss l1 = example_loss(b, p, first, w);
  const ExampleLoss l2 = example_loss(c, p, second, w);
  CHECK(lb.nll.item() == doctest::Approx(l1.nll.item() + l2.nll.item()).epsilon(1e-12));
  CHECK(lb.l_wp.item() == doctest::Approx(l1.l_wp.item() + l2.l_wp.item()).epsilon(1e-12));
}

TEST_CASE("batch loss bookkeeping") {
  const model::ModelParams p = model::ModelParams::init(tiny_config(), 9);
  const std::vector<corpus::TrainingExample> exs = {tiny_example({{4, 5}}, {{5, 6}}), tiny_example({{6}}, {{4}})};
  for (const LossWeights w : {LossWeights{1.0, 0.13, false}, LossWeights{0.0, 0.0, false}, LossWeights{0.3, 1.0, true}}) {
    Tape t(false);
    const BatchLoss b = batch_loss(t, p, exs, w);
    const LossBreakdown& d = b.breakdown;
    CHECK(d.total == d.nll + w.alpha * d.l_wp + w.beta * d.l_me);
    CHECK(b.total.item() == d.total);
    if (w.alpha == 0.0 && w.beta == 0.0) CHECK(d.total == d.nll);
  }
}

TEST_CASE("full objective gradient check on a tiny model") {
  model::ModelParams p = model::ModelParams::init(tiny_config(), 22);
  const corpus::TrainingExample ex = tiny_example({{4, 5}, {6}}, {{5, 6}});  // m = 3 with EOU
  const LossWeights w{1.0, 0.13, false};
  CHECK(tensor::grad_check_params([&](Tape& t) { return batch_loss(t, p, std::vector{ex}, w).total; }, p.all()) <
        1e-4);
  const LossWeights neg{1.0, 0.13, true};
  CHECK(tensor::grad_check_params([&](Tape& t) { return batch_loss(t, p, std::vector{ex}, neg).total; }, p.all()) <
        1e-4);
}
