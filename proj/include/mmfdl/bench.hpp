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

// Data ingestion, split protocol, noise injection, metrics and nearest
// neighbour diagnostics.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mmfdl/chemlex.hpp"
#include "mmfdl/ecfp.hpp"
#include "mmfdl/encoders.hpp"

namespace mmfdl {
class Rng;
}

namespace mmfdl::bench {

struct Record {
  std::string id;
  std::string smiles;
  double target = 0.0;
};

struct Dataset {
  std::string name;
  std::vector<Record> records;
  std::size_t dropped = 0;  // unparsable SMILES, non-finite targets, duplicate ids

  std::size_t size() const noexcept { return records.size(); }
};

/// Reads a headed CSV with double-quoted fields. Without an id column the 0-based
/// data row number is the id. Rows whose SMILES do not tokenize and parse,
/// whose target is not a finite number, or whose id repeats are dropped.
Dataset load_csv(const std::filesystem::path& path, const std::string& smiles_col,
                 const std::string& target_col, const std::string& id_col = "",
                 const std::string& name = "");

struct SplitPlan {
  std::uint64_t seed = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> tuning;
  std::vector<std::size_t> test;
};

/// test = floor(n / 10), tuning = floor((n - test) / 5), train = rest, taken
/// in that order from a seeded Fisher-Yates permutation.
SplitPlan make_split(std::size_t n, std::uint64_t seed);
/// Fixed external test set; the remainder is split into tuning and train.
SplitPlan make_fixed_split(std::size_t n, std::span<const std::size_t> test, std::uint64_t seed);
std::vector<SplitPlan> make_kfold(std::size_t n, std::size_t k, std::uint64_t seed);

// ---- noise ------------------------------------------------------------------

/// Marks each of n positions independently with probability ratio.
std::vector<bool> noise_mask(std::size_t n, double ratio, Rng& rng);

/// Non-padding ids replaced by uniform draws from 1..vocab_size.
chemlex::EncodedSeq add_noise(const chemlex::EncodedSeq& seq, std::size_t vocab_size,
                              double ratio, Rng& rng);
/// Entries of a 0/1 tensor redrawn as fair coin flips.
encoders::Tensor add_noise(const encoders::Tensor& bits, double ratio, Rng& rng);
ecfp::Fingerprint add_noise(const ecfp::Fingerprint& fp, double ratio, Rng& rng);
/// Perturbs the atom features; the adjacency is left alone.
encoders::GraphInput add_noise(const encoders::GraphInput& graph, double ratio, Rng& rng);

// ---- metrics ----------------------------------------------------------------

double rmse(std::span<const double> y, std::span<const double> y_hat);
double mae(std::span<const double> y, std::span<const double> y_hat);
double pearson(std::span<const double> y, std::span<const double> y_hat);
double cosine(std::span<const double> y, std::span<const double> y_hat);

struct Metrics {
  double rmse = 0.0;
  double mae = 0.0;
  double pearson = 0.0;
  double cosine = 0.0;
};

Metrics compute_metrics(std::span<const double> y, std::span<const double> y_hat);

struct Summary {
  double min = 0.0;
  double max = 0.0;
  double median = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for one value
};

Summary summarize(std::span<const double> values);

// ---- nearest neighbours -----------------------------------------------------

struct KnnRow {
  double max_similarity = 0.0;
  double mean_knn_distance = 0.0;
};

/// Tanimoto similarity and Hamming distance.
std::vector<KnnRow> knn_diagnostics(std::span<const ecfp::Fingerprint> train,
                                    std::span<const ecfp::Fingerprint> test, std::size_t k = 5);
/// Cosine similarity and Euclidean distance over vectors of equal length.
std::vector<KnnRow> knn_diagnostics(std::span<const std::vector<double>> train,
                                    std::span<const std::vector<double>> test, std::size_t k = 5);

}  // namespace mmfdl::bench
