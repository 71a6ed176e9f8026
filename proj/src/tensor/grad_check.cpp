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

#include "tensor/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace hscjn::tensor {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / (std::abs(analytic) + std::abs(numeric) + 1e-12);
}

namespace {

// Fourth-order central difference (x - 2h, x - h, x + h, x + 2h). The step
// is re-derived from the rounded probe points.
template <typename Eval>
double central_difference(double& slot, double eps, Eval&& eval) {
  const double orig = slot;
  const double hi = orig + eps;
  const double h = hi - orig;
  double f[4];
  const double offsets[4] = {-2.0, -1.0, 1.0, 2.0};
  for (int k = 0; k < 4; ++k) {
    slot = orig + offsets[k] * h;
    f[k] = eval();
  }
  slot = orig;
  // Differences first, so a flat function yields exactly zero.
  return (8.0 * (f[2] - f[1]) - (f[3] - f[0])) / (12.0 * h);
}

}  // namespace

double grad_check(const std::function<Var(Tape&, Var)>& f, const Tensor& x, double eps) {
  Tensor analytic;
  {
    Tape tape;
    Var xv = tape.leaf(x);
    tape.backward(f(tape, xv));
    analytic = tape.grad(xv);
  }
  Tensor probe = x;
  auto eval = [&] {
    Tape tape(false);
    return f(tape, tape.constant(probe)).item();
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    worst = std::max(worst, relative_error(analytic[i], central_difference(probe[i], eps, eval)));
  }
  return worst;
}

double grad_check_params(const std::function<Var(Tape&)>& f, std::span<Parameter* const> params, double eps) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    tape.backward(f(tape));
  }
  auto eval = [&] {
    Tape tape(false);
    return f(tape).item();
  };
  double worst = 0.0;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      worst = std::max(worst, relative_error(p->grad[i], central_difference(p->value[i], eps, eval)));
    }
  }
  return worst;
}

}  // namespace hscjn::tensor
