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

// Experiment configuration: every knob of the pipeline in one value type that
// serializes to JSON and back without loss.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mmfdl/encoders.hpp"
#include "mmfdl/fusion.hpp"

namespace mmfdl::config {

struct DataConfig {
  std::string path;  // required
  std::string name;  // defaults to the file stem
  std::string smiles_col = "smiles";
  std::string target_col = "target";
  std::string id_col;
  std::string test_ids;  // optional file with one id per line
};

struct FeatureConfig {
  int radius = 2;
  std::size_t nbits = 1024;
};

struct TrainSettings {
  encoders::TrainConfig head;
  double val_fraction = 0.1;  // early-stopping split carved from train
  double noise_ratio = 0.0;   // train-time input noise, off by default
};

struct ProtocolConfig {
  std::uint64_t seed = 0;
  std::size_t repeats = 15;
  std::size_t folds = 5;
  std::vector<double> noise_ratios = {0.0, 0.05, 0.1, 0.2, 0.5};
  std::size_t knn_k = 5;
};

struct OutputConfig {
  std::string outdir = "runs";
  std::string cache_dir;  // defaults to <outdir>/cache
  std::string run_id;     // defaults to a UTC timestamp
  bool plots = true;
  bool save_checkpoints = true;
  std::size_t workers = 0;  // 0 = hardware concurrency
};

struct ExperimentConfig {
  DataConfig data;
  FeatureConfig features;
  encoders::TransformerConfig transformer;  // vocab_size and max_len come from the data
  encoders::BiGruConfig bigru;
  encoders::GcnConfig gcn;
  TrainSettings train;
  std::vector<fusion::Method> methods{fusion::kAllMethods.begin(), fusion::kAllMethods.end()};
  fusion::FusionConfig fusion;
  ProtocolConfig protocol;
  OutputConfig output;

  bool operator==(const ExperimentConfig& other) const;
};

std::string to_json(const ExperimentConfig& config);
/// Missing keys keep their defaults; unknown keys and wrong types throw
/// Error(kInvalidConfig).
ExperimentConfig from_json(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Overrides one field by dotted key ("train.epochs", "fusion.lambda").
/// The value is read as JSON when it parses, otherwise as a string.
void set_option(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Range and consistency checks; throws Error(kInvalidConfig).
void validate(const ExperimentConfig& config);

}  // namespace mmfdl::config
