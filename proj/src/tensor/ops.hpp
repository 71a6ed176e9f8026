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

// Differentiable operations over Tape Vars. Every op validates shapes and
// throws DimensionError naming the offending shapes; nothing broadcasts
// silently except the cases documented on add/sub/mul.

#pragma once

#include <cstddef>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "tensor/tensor.hpp"

namespace hscjn::tensor {

// [m x k] * [k x n] -> [m x n]. A rank-1 right operand is a column ([m x k] * [k] -> [m]);
// a rank-1 left operand is a row ([k] * [k x n] -> [n]).
Var matmul(Var a, Var b);

// Elementwise. Shapes must match, or one side has a single element, or a is
// [r x c] and b is [c] (b added to every row).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var add_n(std::span<const Var> xs);

Var scale(Var x, double factor);
Var add_scalar(Var x, double c);
Var neg(Var x);
Var sigmoid(Var x);
Var tanh(Var x);
Var exp(Var x);
// Throws DomainError on any non-positive input.
Var log(Var x);
// log(sigmoid(x)) in log1p form; outputs below `floor` are clamped (zero gradient there).
Var log_sigmoid(Var x, double floor = -std::numeric_limits<double>::infinity());

// Max-subtracted softmax / log-softmax along `axis` (rank 1 or 2).
Var softmax(Var x, std::size_t axis = 0);
Var log_softmax(Var x, std::size_t axis = 0);
// Softmax over the positions where mask is true; masked outputs are exactly 0.
Var masked_softmax(Var x, const std::vector<bool>& mask);

Var concat(std::span<const Var> xs, std::size_t axis = 0);

Var sum(Var x);
Var sum(Var x, std::size_t axis);
Var mean(Var x);
Var mean(Var x, std::size_t axis);

// y[i] = x[ids[i]] for rank-1 x; repeated ids receive repeated gradient.
Var gather(Var x, std::span<const int> ids);
// Same values, new shape with the same element count.
Var reshape(Var x, Shape shape);
// Equal-length rank-1 tensors as the rows of an [n x d] matrix.
Var stack(std::span<const Var> rows);

// Inverted dropout: in training, each element is zeroed with probability `rate`
// and survivors are scaled by 1/(1-rate). Identity otherwise or when rate == 0.
Var dropout(Var x, double rate, bool training, std::mt19937_64& rng);

// Row `r` of a rank-2 tensor, as a rank-1 tensor.
Var row(Var m, std::size_t r);

}  // namespace hscjn::tensor
