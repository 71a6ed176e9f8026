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

#include "tensor/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "common/errors.hpp"

namespace hscjn::tensor {
namespace {

Tape& common_tape(Var a, Var b) {
  if (!a.valid() || !b.valid() || a.tape() != b.tape()) {
    throw UsageError("operands are not recorded on the same tape");
  }
  return *a.tape();
}

Tape& tape_of(Var x) {
  if (!x.valid()) throw UsageError("operation on an unbound Var");
  return *x.tape();
}

std::string shapes(const char* op, const Shape& a, const Shape& b) {
  return std::string(op) + ": incompatible shapes " + to_string(a) + " and " + to_string(b);
}

// Splits a shape around `axis` into (outer, axis length, inner) strides.
struct AxisView {
  std::size_t outer = 1;
  std::size_t n = 1;
  std::size_t inner = 1;
};

AxisView axis_view(const Shape& s, std::size_t axis, const char* op) {
  if (axis >= s.size()) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for shape " +
                         to_string(s));
  }
  AxisView v;
  for (std::size_t i = 0; i < axis; ++i) v.outer *= s[i];
  v.n = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) v.inner *= s[i];
  return v;
}

template <typename F, typename D>
Var unary(Var x, F f, D dfdx) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  Tensor y(xv.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(xv[i]);
  return t.record(std::move(y), t.requires_grad(x), [x, dfdx](Tape& tp, const Tensor&, const Tensor& g) {
    const Tensor& xv = tp.value(x);
    Tensor& gx = tp.grad_buffer(x.id());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * dfdx(xv[i]);
  });
}

enum class Broadcast { kSame, kScalarA, kScalarB, kRowB };

Broadcast broadcast_mode(const char* op, const Shape& a, const Shape& b) {
  if (a == b) return Broadcast::kSame;
  if (numel(b) == 1) return Broadcast::kScalarB;
  if (numel(a) == 1) return Broadcast::kScalarA;
  if (a.size() == 2 && b.size() == 1 && a[1] == b[0]) return Broadcast::kRowB;
  throw DimensionError(shapes(op, a, b));
}

// Index of b's element paired with output element i.
std::size_t b_index(Broadcast mode, std::size_t i, std::size_t row_len) {
  switch (mode) {
    case Broadcast::kSame:
    case Broadcast::kScalarA:
      return i;
    case Broadcast::kScalarB:
      return 0;
    case Broadcast::kRowB:
      return i % row_len;
  }
  return i;
}

template <typename F, typename DA, typename DB>
Var binary(const char* op, Var a, Var b, F f, DA dfda, DB dfdb) {
  Tape& t = common_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const Broadcast mode = broadcast_mode(op, av.shape(), bv.shape());
  const Shape out_shape = mode == Broadcast::kScalarA ? bv.shape() : av.shape();
  const std::size_t row_len = mode == Broadcast::kRowB ? bv.size() : 1;
  Tensor y(out_shape);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double x1 = mode == Broadcast::kScalarA ? av[0] : av[i];
    y[i] = f(x1, bv[b_index(mode, i, row_len)]);
  }
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.record(std::move(y), rg, [a, b, mode, row_len, dfda, dfdb](Tape& tp, const Tensor&, const Tensor& g) {
    const Tensor& av = tp.value(a);
    const Tensor& bv = tp.value(b);
    const bool ga = tp.requires_grad(a);
    const bool gb = tp.requires_grad(b);
    Tensor* gra = ga ? &tp.grad_buffer(a.id()) : nullptr;
    Tensor* grb = gb ? &tp.grad_buffer(b.id()) : nullptr;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const std::size_t ia = mode == Broadcast::kScalarA ? 0 : i;
      const std::size_t ib = b_index(mode, i, row_len);
      if (gra) (*gra)[ia] += g[i] * dfda(av[ia], bv[ib]);
      if (grb) (*grb)[ib] += g[i] * dfdb(av[ia], bv[ib]);
    }
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = common_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const bool rg = t.requires_grad(a) || t.requires_grad(b);

  if (A.rank() == 2 && B.rank() == 2) {
    const std::size_t m = A.dim(0), k = A.dim(1), n = B.dim(1);
    if (B.dim(0) != k) throw DimensionError(shapes("matmul", A.shape(), B.shape()));
    Tensor C({m, n});
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = A.at(i, p);
        const double* brow = B.data() + p * n;
        double* crow = C.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
      }
    }
    return t.record(std::move(C), rg, [a, b, m, k, n](Tape& tp, const Tensor&, const Tensor& g) {
      const Tensor& A = tp.value(a);
      const Tensor& B = tp.value(b);
      if (tp.requires_grad(a)) {  // dA = dC * B^T
        Tensor& ga = tp.grad_buffer(a.id());
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * B[p * n + j];
            ga[i * k + p] += s;
          }
        }
      }
      if (tp.requires_grad(b)) {  // dB = A^T * dC
        Tensor& gb = tp.grad_buffer(b.id());
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            const double aip = A[i * k + p];
            for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
          }
        }
      }
    });
  }

  if (A.rank() == 2 && B.rank() == 1) {
    const std::size_t m = A.dim(0), k = A.dim(1);
    if (B.dim(0) != k) throw DimensionError(shapes("matmul", A.shape(), B.shape()));
    Tensor C({m});
    for (std::size_t i = 0; i < m; ++i) {
      const double* arow = A.data() + i * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * B[p];
      C[i] = s;
    }
    return t.record(std::move(C), rg, [a, b, m, k](Tape& tp, const Tensor&, const Tensor& g) {
      const Tensor& A = tp.value(a);
      const Tensor& B = tp.value(b);
      if (tp.requires_grad(a)) {
        Tensor& ga = tp.grad_buffer(a.id());
        for (std::size_t i = 0; i < m; ++i) {
          const double gi = g[i];
          double* grow = ga.data() + i * k;
          for (std::size_t p = 0; p < k; ++p) grow[p] += gi * B[p];
        }
      }
      if (tp.requires_grad(b)) {
        Tensor& gb = tp.grad_buffer(b.id());
        for (std::size_t i = 0; i < m; ++i) {
          const double gi = g[i];
          const double* arow = A.data() + i * k;
          for (std::size_t p = 0; p < k; ++p) gb[p] += arow[p] * gi;
        }
      }
    });
  }

  if (A.rank() == 1 && B.rank() == 2) {
    const std::size_t k = A.dim(0), n = B.dim(1);
    if (B.dim(0) != k) throw DimensionError(shapes("matmul", A.shape(), B.shape()));
    Tensor C({n});
    for (std::size_t p = 0; p < k; ++p) {
      const double ap = A[p];
      const double* brow = B.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) C[j] += ap * brow[j];
    }
    return t.record(std::move(C), rg, [a, b, k, n](Tape& tp, const Tensor&, const Tensor& g) {
      const Tensor& A = tp.value(a);
      const Tensor& B = tp.value(b);
      if (tp.requires_grad(a)) {
        Tensor& ga = tp.grad_buffer(a.id());
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = B.data() + p * n;
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += brow[j] * g[j];
          ga[p] += s;
        }
      }
      if (tp.requires_grad(b)) {
        Tensor& gb = tp.grad_buffer(b.id());
        for (std::size_t p = 0; p < k; ++p) {
          const double ap = A[p];
          double* grow = gb.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) grow[j] += ap * g[j];
        }
      }
    });
  }

  throw DimensionError(shapes("matmul", A.shape(), B.shape()));
}

Var add(Var a, Var b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Var add_n(std::span<const Var> xs) {
  if (xs.empty()) throw UsageError("add_n of an empty list");
  Tape& t = tape_of(xs[0]);
  Tensor y = xs[0].value();
  bool rg = t.requires_grad(xs[0]);
  for (std::size_t k = 1; k < xs.size(); ++k) {
    common_tape(xs[0], xs[k]);
    const Tensor& v = xs[k].value();
    if (v.shape() != y.shape()) throw DimensionError(shapes("add_n", y.shape(), v.shape()));
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += v[i];
    rg = rg || t.requires_grad(xs[k]);
  }
  std::vector<Var> inputs(xs.begin(), xs.end());
  return t.record(std::move(y), rg, [inputs](Tape& tp, const Tensor&, const Tensor& g) {
    for (const Var& x : inputs) {
      if (!tp.requires_grad(x)) continue;
      Tensor& gx = tp.grad_buffer(x.id());
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
  });
}

Var scale(Var x, double factor) {
  return unary(x, [factor](double v) { return v * factor; }, [factor](double) { return factor; });
}

Var add_scalar(Var x, double c) {
  return unary(x, [c](double v) { return v + c; }, [](double) { return 1.0; });
}

Var neg(Var x) {
  return unary(x, [](double v) { return -v; }, [](double) { return -1.0; });
}

Var sigmoid(Var x) {
  auto f = [](double v) { return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); };
  return unary(x, f, [f](double v) {
    const double s = f(v);
    return s * (1.0 - s);
  });
}

Var tanh(Var x) {
  return unary(x, [](double v) { return std::tanh(v); }, [](double v) {
    const double th = std::tanh(v);
    return 1.0 - th * th;
  });
}

Var exp(Var x) {
  return unary(x, [](double v) { return std::exp(v); }, [](double v) { return std::exp(v); });
}

Var log(Var x) {
  const Tensor& xv = x.value();
  for (std::size_t i = 0; i < xv.size(); ++i) {
    if (!(xv[i] > 0.0)) {
      throw DomainError("log of non-positive value " + std::to_string(xv[i]) + " at index " + std::to_string(i));
    }
  }
  return unary(x, [](double v) { return std::log(v); }, [](double v) { return 1.0 / v; });
}

Var log_sigmoid(Var x, double floor) {
  auto raw = [](double v) { return -(std::max(-v, 0.0) + std::log1p(std::exp(-std::abs(v)))); };
  auto f = [raw, floor](double v) { return std::max(raw(v), floor); };
  auto d = [raw, floor](double v) {
    if (raw(v) < floor) return 0.0;
    // d/dx log sigmoid(x) = sigmoid(-x)
    return v >= 0 ? std::exp(-v) / (1.0 + std::exp(-v)) : 1.0 / (1.0 + std::exp(v));
  };
  return unary(x, f, d);
}


Var softmax(Var x, std::size_t axis) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  const AxisView v = axis_view(xv.shape(), axis, "softmax");
  Tensor y(xv.shape());
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t in = 0; in < v.inner; ++in) {
      const std::size_t base = o * v.n * v.inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < v.n; ++i) mx = std::max(mx, xv[base + i * v.inner]);
      double z = 0.0;
      for (std::size_t i = 0; i < v.n; ++i) {
        const double e = std::exp(xv[base + i * v.inner] - mx);
        y[base + i * v.inner] = e;
        z += e;
      }
      for (std::size_t i = 0; i < v.n; ++i) y[base + i * v.inner] /= z;
    }
  }
  return t.record(std::move(y), t.requires_grad(x), [x, v](Tape& tp, const Tensor& y, const Tensor& g) {
    Tensor& gx = tp.grad_buffer(x.id());
    for (std::size_t o = 0; o < v.outer; ++o) {
      for (std::size_t in = 0; in < v.inner; ++in) {
        const std::size_t base = o * v.n * v.inner + in;
        double dot = 0.0;
        for (std::size_t i = 0; i < v.n; ++i) dot += g[base + i * v.inner] * y[base + i * v.inner];
        for (std::size_t i = 0; i < v.n; ++i) {
          const std::size_t k = base + i * v.inner;
          gx[k] += y[k] * (g[k] - dot);
        }
      }
    }
  });
}

Var log_softmax(Var x, std::size_t axis) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  const AxisView v = axis_view(xv.shape(), axis, "log_softmax");
  Tensor y(xv.shape());
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t in = 0; in < v.inner; ++in) {
      const std::size_t base = o * v.n * v.inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < v.n; ++i) mx = std::max(mx, xv[base + i * v.inner]);
      double z = 0.0;
      for (std::size_t i = 0; i < v.n; ++i) z += std::exp(xv[base + i * v.inner] - mx);
      const double lse = mx + std::log(z);
      for (std::size_t i = 0; i < v.n; ++i) y[base + i * v.inner] = xv[base + i * v.inner] - lse;
    }
  }
  return t.record(std::move(y), t.requires_grad(x), [x, v](Tape& tp, const Tensor& y, const Tensor& g) {
    Tensor& gx = tp.grad_buffer(x.id());
    for (std::size_t o = 0; o < v.outer; ++o) {
      for (std::size_t in = 0; in < v.inner; ++in) {
        const std::size_t base = o * v.n * v.inner + in;
        double gsum = 0.0;
        for (std::size_t i = 0; i < v.n; ++i) gsum += g[base + i * v.inner];
        for (std::size_t i = 0; i < v.n; ++i) {
          const std::size_t k = base + i * v.inner;
          gx[k] += g[k] - std::exp(y[k]) * gsum;
        }
      }
    }
  });
}

Var masked_softmax(Var x, const std::vector<bool>& mask) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  if (xv.rank() != 1 || mask.size() != xv.size()) {
    throw DimensionError("masked_softmax: scores " + to_string(xv.shape()) + " vs mask of length " +
                         std::to_string(mask.size()));
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < xv.size(); ++i) {
    if (mask[i]) mx = std::max(mx, xv[i]);
  }
  if (mx == -std::numeric_limits<double>::infinity()) throw UsageError("masked_softmax: every position is masked");
  Tensor y(xv.shape());
  double z = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    if (!mask[i]) continue;
    y[i] = std::exp(xv[i] - mx);
    z += y[i];
  }
  for (std::size_t i = 0; i < y.size(); ++i) y[i] /= z;
  return t.record(std::move(y), t.requires_grad(x), [x](Tape& tp, const Tensor& y, const Tensor& g) {
    Tensor& gx = tp.grad_buffer(x.id());
    double dot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) dot += g[i] * y[i];
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] += y[i] * (g[i] - dot);
  });
}

Var concat(std::span<const Var> xs, std::size_t axis) {
  if (xs.empty()) throw UsageError("concat of an empty list");
  Tape& t = tape_of(xs[0]);
  const Shape& first = xs[0].value().shape();
  if (axis >= first.size()) throw DimensionError("concat: axis out of range for shape " + to_string(first));
  Shape out = first;
  out[axis] = 0;
  bool rg = false;
  std::vector<std::size_t> lens;
  for (const Var& x : xs) {
    common_tape(xs[0], x);
    const Shape& s = x.value().shape();
    bool ok = s.size() == first.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d) ok = d == axis || s[d] == first[d];
    if (!ok) throw DimensionError(shapes("concat", first, s));
    out[axis] += s[axis];
    lens.push_back(s[axis]);
    rg = rg || t.requires_grad(x);
  }
  const AxisView ov = axis_view(out, axis, "concat");
  Tensor y(out);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const Tensor& xv = xs[k].value();
    const std::size_t chunk = lens[k] * ov.inner;
    for (std::size_t o = 0; o < ov.outer; ++o) {
      std::copy_n(xv.data() + o * chunk, chunk, y.data() + o * ov.n * ov.inner + offset * ov.inner);
    }
    offset += lens[k];
  }
  std::vector<Var> inputs(xs.begin(), xs.end());
  return t.record(std::move(y), rg, [inputs, lens, ov](Tape& tp, const Tensor&, const Tensor& g) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      const std::size_t chunk = lens[k] * ov.inner;
      if (tp.requires_grad(inputs[k])) {
        Tensor& gx = tp.grad_buffer(inputs[k].id());
        for (std::size_t o = 0; o < ov.outer; ++o) {
          const double* src = g.data() + o * ov.n * ov.inner + offset * ov.inner;
          double* dst = gx.data() + o * chunk;
          for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
        }
      }
      offset += lens[k];
    }
  });
}

Var sum(Var x) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  double s = 0.0;
  for (double v : xv.values()) s += v;
  return t.record(Tensor::scalar(s), t.requires_grad(x), [x](Tape& tp, const Tensor&, const Tensor& g) {
    Tensor& gx = tp.grad_buffer(x.id());
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[0];
  });
}

Var sum(Var x, std::size_t axis) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  const AxisView v = axis_view(xv.shape(), axis, "sum");
  Shape out = xv.shape();
  out.erase(out.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor y(out);
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t i = 0; i < v.n; ++i) {
      for (std::size_t in = 0; in < v.inner; ++in) y[o * v.inner + in] += xv[(o * v.n + i) * v.inner + in];
    }
  }
  return t.record(std::move(y), t.requires_grad(x), [x, v](Tape& tp, const Tensor&, const Tensor& g) {
    Tensor& gx = tp.grad_buffer(x.id());
    for (std::size_t o = 0; o < v.outer; ++o) {
      for (std::size_t i = 0; i < v.n; ++i) {
        for (std::size_t in = 0; in < v.inner; ++in) gx[(o * v.n + i) * v.inner + in] += g[o * v.inner + in];
      }
    }
  });
}

Var mean(Var x) {
  const std::size_t n = x.value().size();
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

Var mean(Var x, std::size_t axis) {
  const std::size_t n = axis_view(x.value().shape(), axis, "mean").n;
  return scale(sum(x, axis), 1.0 / static_cast<double>(n));
}

Var gather(Var x, std::span<const int> ids) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  if (xv.rank() != 1) throw DimensionError("gather expects a rank-1 tensor, got " + to_string(xv.shape()));
  Tensor y({ids.size()});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= xv.size()) {
      throw DimensionError("gather: index " + std::to_string(ids[i]) + " outside " + to_string(xv.shape()));
    }
    y[i] = xv[static_cast<std::size_t>(ids[i])];
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return t.record(std::move(y), t.requires_grad(x), [x, idx](Tape& tp, const Tensor&, const Tensor& g) {
    Tensor& gx = tp.grad_buffer(x.id());
    for (std::size_t i = 0; i < idx.size(); ++i) gx[static_cast<std::size_t>(idx[i])] += g[i];
  });
}

Var row(Var m, std::size_t r) {
  Tape& t = tape_of(m);
  const Tensor& mv = m.value();
  if (mv.rank() != 2 || r >= mv.dim(0)) {
    throw DimensionError("row " + std::to_string(r) + " of tensor with shape " + to_string(mv.shape()));
  }
  const std::size_t cols = mv.dim(1);
  Tensor y({cols});
  std::copy_n(mv.data() + r * cols, cols, y.data());
  return t.record(std::move(y), t.requires_grad(m), [m, r, cols](Tape& tp, const Tensor&, const Tensor& g) {
    Tensor& gm = tp.grad_buffer(m.id());
    for (std::size_t j = 0; j < cols; ++j) gm[r * cols + j] += g[j];
  });
}

Var reshape(Var x, Shape shape) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  if (numel(shape) != xv.size()) throw DimensionError(shapes("reshape", xv.shape(), shape));
  std::vector<double> vals(xv.values().begin(), xv.values().end());
  return t.record(Tensor(std::move(shape), std::move(vals)), t.requires_grad(x),
                  [x](Tape& tp, const Tensor&, const Tensor& g) {
                    Tensor& gx = tp.grad_buffer(x.id());
                    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                  });
}

Var stack(std::span<const Var> rows) {
  if (rows.empty()) throw UsageError("stack of an empty list");
  const Shape& s = rows[0].value().shape();
  if (s.size() != 1) throw DimensionError("stack expects rank-1 rows, got " + to_string(s));
  for (const Var& r : rows) {
    if (r.value().shape() != s) throw DimensionError(shapes("stack", s, r.value().shape()));
  }
  return reshape(concat(rows, 0), Shape{rows.size(), s[0]});
}

Var dropout(Var x, double rate, bool training, std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw UsageError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return x;
  Tape& t = tape_of(x);
  std::bernoulli_distribution keep(1.0 - rate);
  Tensor mask(x.value().shape());
  const double survivor = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = keep(rng) ? survivor : 0.0;
  return mul(x, t.constant(std::move(mask)));
}

}  // namespace hscjn::tensor
