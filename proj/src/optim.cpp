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

#include "mmfdl/optim.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include "mmfdl/error.hpp"
#include "mmfdl/rng.hpp"

namespace mmfdl::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void adam_step(std::span<Parameter* const> params, AdamState& state) {
  for (const Parameter* p : params) {
    if (!p->grad.all_finite()) throw Error(Errc::kNonFiniteGradient, "parameter " + p->name);
  }
  if (state.m.size() != params.size()) {
    state.m.clear();
    state.v.clear();
    for (const Parameter* p : params) {
      state.m.emplace_back(p->value.shape());
      state.v.emplace_back(p->value.shape());
    }
  }
  ++state.step;
  const AdamConfig& c = state.config;
  const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    if (!m.same_shape(p.value)) {
      throw Error(Errc::kShapeMismatch, "Adam moments " + m.shape_string() + " vs parameter " +
                                            p.value.shape_string());
    }
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad.size() ? p.grad[i] : 0.0;
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p.value[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

void zero_grads(std::span<Parameter* const> params) {
  for (Parameter* p : params) {
    if (p->grad.size() != p->value.size()) p->grad = Tensor(p->value.shape());
    p->zero_grad();
  }
}

namespace {

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool read_raw(std::ifstream& in, T& value) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&value), sizeof(T)));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, std::span<const NamedTensor> tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out.write("MMFD", 4);
  write_raw(out, kCheckpointVersion);
  for (const auto& [name, tensor] : tensors) {
    write_raw(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_raw(out, static_cast<std::uint32_t>(tensor.rank()));
    for (const auto dim : tensor.shape()) write_raw(out, static_cast<std::uint64_t>(dim));
    out.write(reinterpret_cast<const char*>(tensor.values().data()),
              static_cast<std::streamsize>(tensor.size() * sizeof(double)));
  }
  if (!out) throw Error(Errc::kIo, "short write to " + path.string());
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot read " + path.string());
  char magic[4];
  std::uint32_t version = 0;
  if (!in.read(magic, 4) || std::memcmp(magic, "MMFD", 4) != 0 || !read_raw(in, version)) {
    throw Error(Errc::kBadCheckpoint, path.string() + " is not a checkpoint");
  }
  if (version != kCheckpointVersion) {
    throw Error(Errc::kBadCheckpoint, "unsupported checkpoint version " + std::to_string(version));
  }
  std::vector<NamedTensor> out;
  std::uint32_t name_len = 0;
  while (read_raw(in, name_len)) {
    std::string name(name_len, '\0');
    std::uint32_t rank = 0;
    if (!in.read(name.data(), name_len) || !read_raw(in, rank)) {
      throw Error(Errc::kBadCheckpoint, "truncated record in " + path.string());
    }
    std::vector<std::size_t> shape(rank);
    std::size_t count = 1;
    for (auto& dim : shape) {
      std::uint64_t d = 0;
      if (!read_raw(in, d)) throw Error(Errc::kBadCheckpoint, "truncated dims for " + name);
      dim = static_cast<std::size_t>(d);
      count *= dim;
    }
    std::vector<double> values(count);
    if (!in.read(reinterpret_cast<char*>(values.data()),
                 static_cast<std::streamsize>(count * sizeof(double)))) {
      throw Error(Errc::kBadCheckpoint, "truncated values for " + name);
    }
    out.push_back({std::move(name), Tensor(std::move(shape), std::move(values))});
  }
  return out;
}

std::vector<NamedTensor> snapshot(std::span<Parameter* const> params) {
  std::vector<NamedTensor> out;
  out.reserve(params.size());
  for (const Parameter* p : params) out.push_back({p->name, p->value});
  return out;
}

void restore(std::span<Parameter* const> params, std::span<const NamedTensor> tensors) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t.tensor;
  for (Parameter* p : params) {
    const auto it = by_name.find(p->name);
    if (it == by_name.end()) throw Error(Errc::kBadCheckpoint, "missing tensor " + p->name);
    if (!it->second->same_shape(p->value)) {
      throw Error(Errc::kBadCheckpoint, p->name + ": stored " + it->second->shape_string() +
                                            ", expected " + p->value.shape_string());
    }
    p->value = *it->second;
  }
}

double gradient_check(const std::function<Var(Tape&)>& f, std::span<Parameter* const> params,
                      Rng& rng, std::size_t coordinates, double h) {
  zero_grads(params);
  {
    Tape tape;
    const Var loss = f(tape);
    tape.backward(loss);
  }
  std::size_t total = 0;
  for (const Parameter* p : params) total += p->value.size();
  if (total == 0) return 0.0;

  const auto evaluate = [&] {
    Tape tape;
    return f(tape).item();
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < coordinates; ++k) {
    std::size_t flat = rng.uniform_index(total);
    std::size_t which = 0;
    while (flat >= params[which]->value.size()) flat -= params[which++]->value.size();
    Parameter& p = *params[which];
    const double analytic = p.grad[flat];
    const double original = p.value[flat];
    p.value[flat] = original + h;
    const double plus = evaluate();
    p.value[flat] = original - h;
    const double minus = evaluate();
    p.value[flat] = original;
    const double numeric = (plus - minus) / (2.0 * h);
    const double err = std::abs(analytic - numeric) / (std::abs(analytic) + std::abs(numeric) + 1e-8);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace mmfdl::nn
