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

#include "mmfdl/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmfdl/error.hpp"
#include "mmfdl/rng.hpp"

namespace mmfdl::nn {

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw Error(Errc::kShapeMismatch,
              std::string(op) + ": " + a.shape_string() + " vs " + b.shape_string());
}


template <typename Fn>
Var unary(Var a, Fn&& forward_fn, std::function<double(double x, double y)> derivative) {
  const Tensor& x = a.value();
  Tensor y({x.rows(), x.cols()});
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = forward_fn(x[i]);
  Tape* tape = a.tape;
  const std::size_t out_id = tape->size();
  const Var inputs[] = {a};
  return tape->record(std::move(y), inputs, [tape, a, out_id, derivative](const Tensor& g) {
    Tensor* ga = tape->grad_buffer(a);
    if (!ga) return;
    const Tensor& x = tape->value(a);
    const Tensor& y = tape->value(Var{tape, out_id});
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * derivative(x[i], y[i]);
  });
}

}  // namespace

const Tensor& Var::value() const { return tape->value(*this); }

double Var::item() const {
  const Tensor& v = value();
  if (v.size() != 1) throw Error(Errc::kShapeMismatch, "item() on " + v.shape_string());
  return v[0];
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor{}, false, nullptr, {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::parameter(Parameter& param) {
  if (!track_) return constant(param.value);
  nodes_.push_back(Node{param.value, Tensor{}, true, &param, {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  const bool needs = std::any_of(inputs.begin(), inputs.end(),
                                 [this](Var v) { return nodes_[v.id].requires_grad; });
  nodes_.push_back(Node{std::move(value), Tensor{}, needs, nullptr,
                        needs ? std::move(backward) : BackwardFn{}});
  return Var{this, nodes_.size() - 1};
}

Tensor* Tape::grad_buffer(Var v) {
  Node& node = nodes_[v.id];
  if (!node.requires_grad) return nullptr;
  if (node.grad.size() != node.value.size()) node.grad = Tensor(node.value.shape());
  return &node.grad;
}

void Tape::backward(Var loss) {
  if (nodes_[loss.id].value.size() != 1) {
    throw Error(Errc::kShapeMismatch,
                "backward needs a scalar loss, got " + nodes_[loss.id].value.shape_string());
  }
  Tensor* seed = grad_buffer(loss);
  if (!seed) return;
  (*seed)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || node.grad.size() == 0) continue;
    if (node.param) {
      if (node.param->grad.size() != node.value.size()) node.param->grad = Tensor(node.value.shape());
      for (std::size_t k = 0; k < node.grad.size(); ++k) node.param->grad[k] += node.grad[k];
    } else if (node.backward) {
      node.backward(node.grad);
    }
  }
}

Var matmul(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.cols() != y.rows()) shape_error("matmul", x, y);
  Tensor out({x.rows(), y.cols()});
  out.mat().noalias() = x.mat() * y.mat();
  Tape* tape = a.tape;
  const Var inputs[] = {a, b};
  return tape->record(std::move(out), inputs, [tape, a, b](const Tensor& g) {
    if (Tensor* ga = tape->grad_buffer(a)) ga->mat().noalias() += g.mat() * tape->value(b).mat().transpose();
    if (Tensor* gb = tape->grad_buffer(b)) gb->mat().noalias() += tape->value(a).mat().transpose() * g.mat();
  });
}

Var add(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  const bool broadcast = y.rows() == 1 && x.rows() != 1 && y.cols() == x.cols();
  if (!broadcast && (x.rows() != y.rows() || x.cols() != y.cols())) shape_error("add", x, y);
  Tensor out({x.rows(), x.cols()});
  const std::size_t cols = x.cols();
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[broadcast ? i % cols : i];
  Tape* tape = a.tape;
  const Var inputs[] = {a, b};
  return tape->record(std::move(out), inputs, [tape, a, b, broadcast, cols](const Tensor& g) {
    if (Tensor* ga = tape->grad_buffer(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    }
    if (Tensor* gb = tape->grad_buffer(b)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[broadcast ? i % cols : i] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.rows() != y.rows() || x.cols() != y.cols()) shape_error("sub", x, y);
  Tensor out({x.rows(), x.cols()});
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
  Tape* tape = a.tape;
  const Var inputs[] = {a, b};
  return tape->record(std::move(out), inputs, [tape, a, b](const Tensor& g) {
    if (Tensor* ga = tape->grad_buffer(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    }
    if (Tensor* gb = tape->grad_buffer(b)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.rows() != y.rows() || x.cols() != y.cols()) shape_error("mul", x, y);
  Tensor out({x.rows(), x.cols()});
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
  Tape* tape = a.tape;
  const Var inputs[] = {a, b};
  return tape->record(std::move(out), inputs, [tape, a, b](const Tensor& g) {
    const Tensor& x = tape->value(a);
    const Tensor& y = tape->value(b);
    if (Tensor* ga = tape->grad_buffer(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * y[i];
    }
    if (Tensor* gb = tape->grad_buffer(b)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * x[i];
    }
  });
}

Var affine(Var a, double alpha, double beta) {
  return unary(a, [alpha, beta](double x) { return alpha * x + beta; },
               [alpha](double, double) { return alpha; });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw Error(Errc::kShapeMismatch, "concat_rows of nothing");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) shape_error("concat_rows", parts.front().value(), p.value());
    rows += p.rows();
  }
  Tensor out({rows, cols});
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const auto v = p.value().values();
    std::copy(v.begin(), v.end(), out.values().begin() + static_cast<std::ptrdiff_t>(offset));
    offset += v.size();
  }
  Tape* tape = parts.front().tape;
  std::vector<Var> inputs(parts.begin(), parts.end());
  return tape->record(std::move(out), parts, [tape, inputs](const Tensor& g) {
    std::size_t offset = 0;
    for (const Var& p : inputs) {
      const std::size_t n = tape->value(p).size();
      if (Tensor* gp = tape->grad_buffer(p)) {
        for (std::size_t i = 0; i < n; ++i) (*gp)[i] += g[offset + i];
      }
      offset += n;
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw Error(Errc::kShapeMismatch, "concat_cols of nothing");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) shape_error("concat_cols", parts.front().value(), p.value());
    cols += p.cols();
  }
  Tensor out({rows, cols});
  std::size_t col_offset = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < v.cols(); ++c) out.at(r, col_offset + c) = v.at(r, c);
    }
    col_offset += v.cols();
  }
  Tape* tape = parts.front().tape;
  std::vector<Var> inputs(parts.begin(), parts.end());
  return tape->record(std::move(out), parts, [tape, inputs, rows, cols](const Tensor& g) {
    std::size_t col_offset = 0;
    for (const Var& p : inputs) {
      const std::size_t pc = tape->value(p).cols();
      if (Tensor* gp = tape->grad_buffer(p)) {
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < pc; ++c) gp->at(r, c) += g[r * cols + col_offset + c];
        }
      }
      col_offset += pc;
    }
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  const Tensor& x = a.value();
  if (begin + count > x.rows()) {
    throw Error(Errc::kShapeMismatch, "slice_rows [" + std::to_string(begin) + ", " +
                                          std::to_string(begin + count) + ") of " +
                                          x.shape_string());
  }
  const std::size_t cols = x.cols();
  Tensor out({count, cols});
  std::copy_n(x.values().begin() + static_cast<std::ptrdiff_t>(begin * cols), count * cols,
              out.values().begin());
  Tape* tape = a.tape;
  const Var inputs[] = {a};
  return tape->record(std::move(out), inputs, [tape, a, begin, cols](const Tensor& g) {
    if (Tensor* ga = tape->grad_buffer(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[begin * cols + i] += g[i];
    }
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& x = a.value();
  if (begin + count > x.cols()) {
    throw Error(Errc::kShapeMismatch, "slice_cols [" + std::to_string(begin) + ", " +
                                          std::to_string(begin + count) + ") of " +
                                          x.shape_string());
  }
  const std::size_t rows = x.rows();
  Tensor out({rows, count});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < count; ++c) out.at(r, c) = x.at(r, begin + c);
  }
  Tape* tape = a.tape;
  const Var inputs[] = {a};
  return tape->record(std::move(out), inputs, [tape, a, begin, count, rows](const Tensor& g) {
    if (Tensor* ga = tape->grad_buffer(a)) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < count; ++c) ga->at(r, begin + c) += g[r * count + c];
      }
    }
  });
}

Var transpose(Var a) {
  const Tensor& x = a.value();
  Tensor out({x.cols(), x.rows()});
  out.mat() = x.mat().transpose();
  Tape* tape = a.tape;
  const Var inputs[] = {a};
  return tape->record(std::move(out), inputs, [tape, a](const Tensor& g) {
    if (Tensor* ga = tape->grad_buffer(a)) ga->mat() += g.mat().transpose();
  });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(a,
               [](double x) {
                 if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
                 const double e = std::exp(x);
                 return e / (1.0 + e);
               },
               [](double, double y) { return y * (1.0 - y); });
}

Var mean_pool_rows(Var a) {
  const Tensor& x = a.value();
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  if (rows == 0) throw Error(Errc::kShapeMismatch, "mean_pool_rows of an empty matrix");
  Tensor out({1, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c] += x.at(r, c);
  }
  for (std::size_t c = 0; c < cols; ++c) out[c] /= static_cast<double>(rows);
  Tape* tape = a.tape;
  const Var inputs[] = {a};
  return tape->record(std::move(out), inputs, [tape, a, rows, cols](const Tensor& g) {
    if (Tensor* ga = tape->grad_buffer(a)) {
      const double inv = 1.0 / static_cast<double>(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) ga->at(r, c) += g[c] * inv;
      }
    }
  });
}

Var sum(Var a) {
  double total = 0.0;
  for (const double v : a.value().values()) total += v;
  Tape* tape = a.tape;
  const Var inputs[] = {a};
  return tape->record(Tensor::scalar(total), inputs, [tape, a](const Tensor& g) {
    if (Tensor* ga = tape->grad_buffer(a)) {
      for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += g[0];
    }
  });
}

Var softmax_rows(Var a, std::span<const bool> key_valid) {
  const Tensor& x = a.value();
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  if (!key_valid.empty() && key_valid.size() != cols) {
    throw Error(Errc::kShapeMismatch, "softmax mask of " + std::to_string(key_valid.size()) +
                                          " entries for " + x.shape_string());
  }
  if (!x.all_finite()) throw Error(Errc::kNonFiniteInput, "softmax input " + x.shape_string());
  const auto valid = [&](std::size_t c) { return key_valid.empty() || key_valid[c]; };
  Tensor out({rows, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    double max_v = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cols; ++c) {
      if (valid(c)) max_v = std::max(max_v, x.at(r, c));
    }
    if (!std::isfinite(max_v)) throw Error(Errc::kNonFiniteInput, "softmax row with every key masked");
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double e = valid(c) ? std::exp(x.at(r, c) - max_v) : 0.0;
      out.at(r, c) = e;
      total += e;
    }
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) /= total;
  }
  Tape* tape = a.tape;
  const std::size_t out_id = tape->size();
  const Var inputs[] = {a};
  return tape->record(std::move(out), inputs, [tape, a, out_id, rows, cols](const Tensor& g) {
    Tensor* ga = tape->grad_buffer(a);
    if (!ga) return;
    const Tensor& y = tape->value(Var{tape, out_id});
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += g[r * cols + c] * y.at(r, c);
      for (std::size_t c = 0; c < cols; ++c) ga->at(r, c) += y.at(r, c) * (g[r * cols + c] - dot);
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  const Tensor& in = x.value();
  const std::size_t rows = in.rows();
  const std::size_t cols = in.cols();
  if (gain.value().size() != cols || bias.value().size() != cols) {
    shape_error("layer_norm", in, gain.value());
  }
  Tensor normalized({rows, cols});
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mean += in.at(r, c);
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = in.at(r, c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) normalized.at(r, c) = (in.at(r, c) - mean) * inv_std[r];
  }
  Tensor out({rows, cols});
  const Tensor& g = gain.value();
  const Tensor& b = bias.value();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = normalized.at(r, c) * g[c] + b[c];
  }
  Tape* tape = x.tape;
  const Var inputs[] = {x, gain, bias};
  return tape->record(
      std::move(out), inputs,
      [tape, x, gain, bias, rows, cols, normalized = std::move(normalized),
       inv_std = std::move(inv_std)](const Tensor& dy) {
        const Tensor& g = tape->value(gain);
        if (Tensor* dg = tape->grad_buffer(gain)) {
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) (*dg)[c] += dy[r * cols + c] * normalized.at(r, c);
          }
        }
        if (Tensor* db = tape->grad_buffer(bias)) {
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) (*db)[c] += dy[r * cols + c];
          }
        }
        if (Tensor* dx = tape->grad_buffer(x)) {
          const double n = static_cast<double>(cols);
          for (std::size_t r = 0; r < rows; ++r) {
            double mean_dxhat = 0.0;
            double mean_dxhat_xhat = 0.0;
            for (std::size_t c = 0; c < cols; ++c) {
              const double dxhat = dy[r * cols + c] * g[c];
              mean_dxhat += dxhat;
              mean_dxhat_xhat += dxhat * normalized.at(r, c);
            }
            mean_dxhat /= n;
            mean_dxhat_xhat /= n;
            for (std::size_t c = 0; c < cols; ++c) {
              const double dxhat = dy[r * cols + c] * g[c];
              dx->at(r, c) +=
                  inv_std[r] * (dxhat - mean_dxhat - normalized.at(r, c) * mean_dxhat_xhat);
            }
          }
        }
      });
}

Var gather_rows(Var table, std::span<const std::int32_t> ids) {
  const Tensor& t = table.value();
  const std::size_t cols = t.cols();
  Tensor out({ids.size(), cols});
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] < 0 || static_cast<std::size_t>(ids[k]) >= t.rows()) {
      throw Error(Errc::kShapeMismatch,
                  "gather_rows index " + std::to_string(ids[k]) + " outside " + t.shape_string());
    }
    for (std::size_t c = 0; c < cols; ++c) out.at(k, c) = t.at(static_cast<std::size_t>(ids[k]), c);
  }
  Tape* tape = table.tape;
  std::vector<std::int32_t> rows(ids.begin(), ids.end());
  const Var inputs[] = {table};
  return tape->record(std::move(out), inputs, [tape, table, rows, cols](const Tensor& g) {
    if (Tensor* gt = tape->grad_buffer(table)) {
      for (std::size_t k = 0; k < rows.size(); ++k) {
        for (std::size_t c = 0; c < cols; ++c) gt->at(static_cast<std::size_t>(rows[k]), c) += g[k * cols + c];
      }
    }
  });
}

Var mse(Var prediction, const Tensor& target) {
  const Tensor& p = prediction.value();
  if (p.size() != target.size()) shape_error("mse", p, target);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - target[i];
    total += d * d;
  }
  const double n = static_cast<double>(p.size());
  Tape* tape = prediction.tape;
  const Var inputs[] = {prediction};
  return tape->record(Tensor::scalar(total / n), inputs, [tape, prediction, target, n](const Tensor& g) {
    if (Tensor* gp = tape->grad_buffer(prediction)) {
      const Tensor& p = tape->value(prediction);
      for (std::size_t i = 0; i < p.size(); ++i) (*gp)[i] += g[0] * 2.0 * (p[i] - target[i]) / n;
    }
  });
}

Var dropout(Var a, double p, Rng* rng) {
  if (rng == nullptr || p <= 0.0) return a;
  const Tensor& x = a.value();
  Tensor mask({x.rows(), x.cols()});
  const double keep_scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = rng->bernoulli(p) ? 0.0 : keep_scale;
  return mul(a, a.tape->constant(std::move(mask)));
}

Tensor positional_encoding(std::size_t max_len, std::size_t d) {
  if (d % 2 != 0) throw Error(Errc::kOddDimension, "d = " + std::to_string(d));
  if (max_len == 0) throw Error(Errc::kShapeMismatch, "max_len must be >= 1");
  Tensor pe({max_len, d});
  for (std::size_t pos = 0; pos < max_len; ++pos) {
    for (std::size_t i = 0; i < d / 2; ++i) {
      const double angle =
          static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(d));
      pe.at(pos, 2 * i) = std::sin(angle);
      pe.at(pos, 2 * i + 1) = std::cos(angle);
    }
  }
  return pe;
}

Tensor uniform_init(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = std::sqrt(1.0 / static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

}  // namespace mmfdl::nn
