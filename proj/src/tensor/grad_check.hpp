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

// Central-difference gradient checking, used as the test oracle for every
// backward rule.

#pragma once

#include <functional>
#include <span>

#include "tensor/tensor.hpp"

namespace hscjn::tensor {

// |analytic - numeric| / (|analytic| + |numeric| + 1e-12)
double relative_error(double analytic, double numeric);

// Max relative error between the tape gradient of f at x and fourth-order
// central differences with step eps.
// f must return a one-element Var built from its argument.
double grad_check(const std::function<Var(Tape&, Var)>& f, const Tensor& x, double eps = 1e-3);

// Same check over every coordinate of every parameter. Parameter gradients are
// zeroed first and left holding the analytic gradient afterwards.
double grad_check_params(const std::function<Var(Tape&)>& f, std::span<Parameter* const> params,
                         double eps = 1e-3);

}  // namespace hscjn::tensor
