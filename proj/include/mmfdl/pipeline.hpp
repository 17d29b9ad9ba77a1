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

// End-to-end experiment flow: featurize and cache a dataset, train the three
// modal heads per seed, fit fusion weights on the tuning split and score every
// method on (optionally noisy) test inputs.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmfdl/bench.hpp"
#include "mmfdl/chemlex.hpp"
#include "mmfdl/config.hpp"
#include "mmfdl/ecfp.hpp"
#include "mmfdl/encoders.hpp"
#include "mmfdl/error.hpp"

namespace mmfdl::pipeline {

inline constexpr int kFeaturizationVersion = 1;

inline constexpr std::array<std::string_view, 3> kModalNames = {"transformer", "bigru", "gcn"};

// ---- featurization and cache ------------------------------------------------

/// A dataset with all three representations. The vocabulary is built over
/// every retained molecule, so no split sees an unknown token.
struct Prepared {
  std::string name;
  std::vector<bench::Record> records;
  std::size_t dropped = 0;
  chemlex::Vocabulary vocab;
  std::size_t max_len = 0;
  std::vector<chemlex::EncodedSeq> seqs;
  std::vector<ecfp::Fingerprint> fps;
  std::vector<encoders::GraphInput> graphs;

  std::size_t size() const noexcept { return records.size(); }
};

Prepared featurize(const bench::Dataset& dataset, const config::FeatureConfig& features);

/// Hex FNV-1a digest of the dataset bytes, column names, featurization
/// settings and version.
std::string cache_key(const config::ExperimentConfig& config, int version = kFeaturizationVersion);

struct PrepareOutcome {
  Prepared data;
  std::filesystem::path cache;
  bool cache_hit = false;
};

/// Loads the cache entry for cache_key(config, version) or builds and writes it.
PrepareOutcome prepare(const config::ExperimentConfig& config, int version = kFeaturizationVersion);

// ---- models -----------------------------------------------------------------

struct Models {
  encoders::TransformerHead transformer;
  encoders::BiGruHead bigru;
  encoders::GcnHead gcn;
  std::array<encoders::TrainReport, 3> reports;
};

/// Freshly initialized heads for `seed`.
Models init_models(const Prepared& data, const config::ExperimentConfig& config, std::uint64_t seed);

/// Trains each head on plan.train minus a validation slice used for early
/// stopping. Tuning and test molecules are never seen.
Models train_models(const Prepared& data, const bench::SplitPlan& plan,
                    const config::ExperimentConfig& config, std::uint64_t seed);

void save_models(Models& models, const std::filesystem::path& dir);
/// Throws Error(kIo) when a checkpoint is missing.
Models load_models(const Prepared& data, const config::ExperimentConfig& config, std::uint64_t seed,
                   const std::filesystem::path& dir);

// ---- evaluation -------------------------------------------------------------

struct MetricsRow {
  std::string method;
  std::uint64_t seed = 0;
  double noise_ratio = 0.0;
  bench::Metrics metrics;
};

struct WeightsRow {
  std::string method;
  std::uint64_t seed = 0;
  std::array<double, 3> w{};
};

struct KnnRecord {
  std::uint64_t seed = 0;
  std::string id;
  std::string representation;  // "ecfp" or "smiles"
  bench::KnnRow row;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<MetricsRow> metrics;
  std::vector<WeightsRow> weights;
  std::vector<KnnRecord> knn;
  std::array<encoders::TrainReport, 3> reports;
};

/// Fits the configured fusion methods on clean tuning outputs, then scores
/// the three heads and every fused method on the test split at each noise
/// ratio. Noise streams depend on the seed, modality and molecule but not on
/// the ratio, so the corrupted positions grow monotonically with the ratio.
SeedResult evaluate(Models& models, const Prepared& data, const bench::SplitPlan& plan,
                    const config::ExperimentConfig& config, std::uint64_t seed,
                    std::span<const double> ratios);

// ---- multi-seed runs --------------------------------------------------------

struct Job {
  std::uint64_t seed = 0;
  bench::SplitPlan plan;
};

/// Seeds base, base+1, ... with one random (or fixed-test) split each.
std::vector<Job> repeat_jobs(const Prepared& data, const config::ExperimentConfig& config);
/// One job per fold of make_kfold(n, folds, base); fold f trains with seed base + f.
std::vector<Job> kfold_jobs(const Prepared& data, const config::ExperimentConfig& config);

struct Failure {
  std::uint64_t seed = 0;
  Errc code = Errc::kIo;
  std::string message;
};

struct SummaryRow {
  std::string method;
  double noise_ratio = 0.0;
  std::string metric;
  bench::Summary summary;
  std::size_t count = 0;
};

struct RunResult {
  std::vector<SeedResult> seeds;  // job order, failed jobs omitted
  std::vector<Failure> failures;
  std::vector<SummaryRow> summary;
};

enum class Stage {
  kTrain,     // train and checkpoint only
  kEvaluate,  // load checkpoints and evaluate
  kFull,      // train then evaluate in memory
};

/// Runs `stage` for every job on `workers` threads. A job that throws is
/// recorded in failures and the rest continue. Results come back in job
/// order whatever the worker count. Checkpoints live under
/// checkpoint_root/seed_<seed>/ when the root is nonempty.
RunResult run_jobs(const Prepared& data, const config::ExperimentConfig& config,
                   std::span<const Job> jobs, Stage stage, std::span<const double> ratios,
                   std::size_t workers, const std::filesystem::path& checkpoint_root = {});

std::vector<SummaryRow> summarize_runs(std::span<const SeedResult> seeds);

// ---- commands ---------------------------------------------------------------

enum class Command { kPrepare, kTrain, kEvaluate, kNoise, kRepeat, kKfold };

Command parse_command(std::string_view name);

struct CommandResult {
  std::filesystem::path run_dir;
  std::filesystem::path cache;
  bool cache_hit = false;
  RunResult run;
};

/// Reports land in <outdir>/<dataset>/<run_id or UTC timestamp>/. evaluate
/// and noise without a run id reuse the newest run that has checkpoints.
CommandResult run_command(Command command, const config::ExperimentConfig& config);

// ---- reports ----------------------------------------------------------------

void write_metrics_csv(const std::filesystem::path& path, std::string_view dataset,
                       std::span<const SeedResult> seeds);
void write_weights_csv(const std::filesystem::path& path, std::string_view dataset,
                       std::span<const SeedResult> seeds);
void write_knn_csv(const std::filesystem::path& path, std::string_view dataset,
                   std::span<const SeedResult> seeds);
void write_train_csv(const std::filesystem::path& path, std::string_view dataset,
                     std::span<const SeedResult> seeds);
void write_summary_csv(const std::filesystem::path& path, std::string_view dataset,
                       std::span<const SummaryRow> rows);
void write_failures_csv(const std::filesystem::path& path, std::span<const Failure> failures);
/// Mean Pearson against noise ratio, one line per method.
void write_noise_svg(const std::filesystem::path& path, std::span<const SummaryRow> rows);
/// Pearson distribution per method at the lowest noise ratio.
void write_pearson_svg(const std::filesystem::path& path, std::span<const SeedResult> seeds);

/// Shortest round-trip decimal form.
std::string format_double(double value);

}  // namespace mmfdl::pipeline
