// Copyright 2026 The MMFDL Authors.
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

// Reverse-mode differentiation over a recorded tape.
//
// A Tape owns every intermediate value created while evaluating a model. Ops
// append nodes in evaluation order, so the reverse of insertion order is a
// valid topological order for the backward sweep. Parameter leaves forward
// their gradient into Parameter::grad, which outlives the tape; everything
// else is released with the tape. A tape belongs to one thread at a time.

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "mmfdl/tensor.hpp"

namespace mmfdl {
class Rng;
}

namespace mmfdl::nn {

class Tape;

/// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double item() const;
};

class Tape {
 public:
  using BackwardFn = std::function<void(const Tensor& out_grad)>;

  Tape() = default;
  /// With track_gradients == false, parameters enter as constants and no
  /// backward closures are kept.
  explicit Tape(bool track_gradients) : track_(track_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var parameter(Parameter& param);

  /// Appends a computed node. `backward` receives d(loss)/d(output) and must
  /// accumulate into the inputs' gradients via accumulate().
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn backward);

  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }

  /// Gradient buffer of an input; returns nullptr when the input does not
  /// require a gradient. Allocated on first use.
  Tensor* grad_buffer(Var v);

  /// Seeds d(loss)/d(loss) = 1 for a 1x1 node and sweeps the tape backwards.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };
  std::deque<Node> nodes_;
  bool track_ = true;
};

// ---- differentiable operations ----------------------------------------------
// All ops throw Error(kShapeMismatch) naming both shapes on incompatible input.

Var matmul(Var a, Var b);
/// Elementwise a + b; b may also be a 1 x cols row broadcast over a's rows.
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise product of equal shapes.
Var mul(Var a, Var b);
/// alpha * a + beta
Var affine(Var a, double alpha, double beta);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var transpose(Var a);
Var relu(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
/// 1 x cols mean over rows.
Var mean_pool_rows(Var a);
/// 1 x 1 sum of all entries.
Var sum(Var a);
/// Row-wise softmax with max subtraction. Columns with key_valid[c] == false
/// get probability zero. Throws Error(kNonFiniteInput) on NaN/inf input.
Var softmax_rows(Var a, std::span<const bool> key_valid = {});
/// Row-wise (x - mean) / sqrt(var + eps) * gain + bias with population
/// variance; gain and bias are 1 x cols.
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
/// Rows of `table` selected by ids.
Var gather_rows(Var table, std::span<const std::int32_t> ids);
/// Mean squared error against a constant target of the same shape.
Var mse(Var prediction, const Tensor& target);
/// Inverted dropout; identity when rng is null or p == 0.
Var dropout(Var a, double p, Rng* rng);

// ---- non-differentiable helpers ---------------------------------------------

/// Sinusoidal table PE[pos, 2i] = sin(pos / 10000^(2i/d)),
/// PE[pos, 2i+1] = cos(...). Throws Error(kOddDimension) for odd d.
Tensor positional_encoding(std::size_t max_len, std::size_t d);

/// Uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) fill.
Tensor uniform_init(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng);

}  // namespace mmfdl::nn
