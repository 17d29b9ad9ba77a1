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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mmfdl/autodiff.hpp"
#include "mmfdl/tensor.hpp"

namespace mmfdl {
class Rng;
}

namespace mmfdl::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment buffers matching the parameter shapes.
struct AdamState {
  AdamConfig config;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::int64_t step = 0;
};

/// One bias-corrected Adam update from each parameter's grad. Moment buffers
/// are created on the first call. Throws Error(kNonFiniteGradient) before
/// touching any parameter if a gradient holds NaN or inf.
void adam_step(std::span<Parameter* const> params, AdamState& state);

void zero_grads(std::span<Parameter* const> params);

// ---- checkpoints ------------------------------------------------------------
// Little-endian file: "MMFD", u32 version, then per tensor: u32 name length,
// UTF-8 name, u32 rank, rank x u64 dims, raw f64 values. Records run to EOF.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

void save_checkpoint(const std::filesystem::path& path, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

std::vector<NamedTensor> snapshot(std::span<Parameter* const> params);
/// Copies values by name; throws Error(kBadCheckpoint) for missing names or
/// shape differences.
void restore(std::span<Parameter* const> params, std::span<const NamedTensor> tensors);

// ---- gradient checking ------------------------------------------------------

/// Compares the analytic gradient of f at the current parameter values to
/// central differences (step h) on `coordinates` randomly drawn coordinates.
/// Returns max |g_a - g_n| / (|g_a| + |g_n| + 1e-8).
double gradient_check(const std::function<Var(Tape&)>& f, std::span<Parameter* const> params,
                      Rng& rng, std::size_t coordinates = 20, double h = 1e-5);

}  // namespace mmfdl::nn
