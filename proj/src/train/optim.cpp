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

#include "train/optim.hpp"

#include <cmath>

#include "common/errors.hpp"

namespace hscjn::train {

void round_to_single(Tensor& t) {
  for (double& x : t.values()) x = static_cast<double>(static_cast<float>(x));
}

void adam_update(Parameter& p, Tensor& m, Tensor& v, std::size_t t, const AdamOptions& o) {
  if (t < 1) throw UsageError("Adam step count starts at 1");
  if (m.shape() != p.value.shape() || v.shape() != p.value.shape() || p.grad.shape() != p.value.shape()) {
    throw DimensionError("Adam state shape mismatch for parameter " + p.name);
  }
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    const double g = p.grad[i];
    m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g;
    v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g * g;
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    p.value[i] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + o.epsilon);
  }
  if (o.single_precision) {
    round_to_single(p.value);
    round_to_single(m);
    round_to_single(v);
  }
}

Adam::Adam(std::span<Parameter* const> params, AdamOptions opts) : opts_(opts) {
  for (const Parameter* p : params) {
    m.emplace_back(p->value.shape());
    v.emplace_back(p->value.shape());
  }
}

void Adam::step(std::span<Parameter* const> params) {
  if (params.size() != m.size()) throw UsageError("Adam was built for a different parameter list");
  ++t;
  for (std::size_t k = 0; k < params.size(); ++k) adam_update(*params[k], m[k], v[k], t, opts_);
}

double clip_grad_norm(std::span<Parameter* const> params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params) {
    for (double g : p->grad.values()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (Parameter* p : params) {
      for (double& g : p->grad.values()) g *= s;
    }
  }
  return norm;
}

}  // namespace hscjn::train
