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

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tensor/tensor.hpp"

namespace hscjn::train {

using tensor::Parameter;
using tensor::Tensor;

struct AdamOptions {
  double learning_rate = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool single_precision = false;  // round parameters and moments to float after each update
};

// One bias-corrected Adam update of `p` from p.grad. t is the 1-based step count.
void adam_update(Parameter& p, Tensor& m, Tensor& v, std::size_t t, const AdamOptions& opts);

class Adam {
 public:
  Adam(std::span<Parameter* const> params, AdamOptions opts);

  void step(std::span<Parameter* const> params);

  const AdamOptions& options() const { return opts_; }
  void set_options(const AdamOptions& opts) { opts_ = opts; }
  std::size_t t = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

 private:
  AdamOptions opts_;
};

// Rescales gradients so their global L2 norm is at most max_norm; returns the
// norm before clipping.
double clip_grad_norm(std::span<Parameter* const> params, double max_norm);

void round_to_single(Tensor& t);

}  // namespace hscjn::train
