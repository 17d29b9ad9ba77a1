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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "mmfdl/config.hpp"
#include "mmfdl/error.hpp"
#include "mmfdl/pipeline.hpp"

namespace {

using mmfdl::config::ExperimentConfig;
namespace fs = std::filesystem;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

int exit_code(mmfdl::Errc code) {
  switch (mmfdl::errc_category(code)) {
    case mmfdl::ErrorCategory::kConfig:
      return kExitConfig;
    case mmfdl::ErrorCategory::kNumeric:
      return kExitNumeric;
    default:
      return kExitData;
  }
}

struct Overrides {
  std::string config_path;
  std::optional<std::string> data, name, smiles_col, target_col, id_col, test_ids;
  std::optional<std::string> outdir, cache_dir, run_id;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> repeats, folds, epochs, workers;
  std::optional<double> lr;
  std::vector<std::string> methods;
  std::vector<double> ratios;
  std::vector<std::string> sets;
  bool deterministic = false;
  bool no_plots = false;
  bool print_config = false;
  bool quiet = false;
};

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig c = o.config_path.empty() ? ExperimentConfig{} : mmfdl::config::load_config(o.config_path);
  const auto apply = [](auto& field, const auto& value) {
    if (value) field = *value;
  };
  apply(c.data.path, o.data);
  apply(c.data.name, o.name);
  apply(c.data.smiles_col, o.smiles_col);
  apply(c.data.target_col, o.target_col);
  apply(c.data.id_col, o.id_col);
  apply(c.data.test_ids, o.test_ids);
  apply(c.output.outdir, o.outdir);
  apply(c.output.cache_dir, o.cache_dir);
  apply(c.output.run_id, o.run_id);
  apply(c.protocol.seed, o.seed);
  apply(c.protocol.repeats, o.repeats);
  apply(c.protocol.folds, o.folds);
  apply(c.train.head.epochs, o.epochs);
  apply(c.train.head.lr, o.lr);
  apply(c.output.workers, o.workers);
  if (!o.methods.empty()) {
    c.methods.clear();
    for (const auto& m : o.methods) c.methods.push_back(mmfdl::fusion::parse_method(m));
  }
  if (!o.ratios.empty()) c.protocol.noise_ratios = o.ratios;
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw mmfdl::Error(mmfdl::Errc::kInvalidConfig, "--set expects key=value, got " + kv);
    }
    mmfdl::config::set_option(c, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.no_plots) c.output.plots = false;
  if (o.deterministic) c.output.workers = 1;
  return c;
}

void add_common(CLI::App& app, Overrides& o) {
  app.add_option("-c,--config", o.config_path, "JSON configuration file");
  app.add_option("-d,--data", o.data, "Dataset CSV");
  app.add_option("--name", o.name, "Dataset name used in reports (default: file stem)");
  app.add_option("--smiles-col", o.smiles_col, "SMILES column");
  app.add_option("--target-col", o.target_col, "Target column");
  app.add_option("--id-col", o.id_col, "Identifier column (default: row number)");
  app.add_option("--test-ids", o.test_ids, "File of test-set ids, one per line");
  app.add_option("-o,--outdir", o.outdir, "Report root");
  app.add_option("--cache-dir", o.cache_dir, "Representation cache (default: <outdir>/cache)");
  app.add_option("--run-id", o.run_id, "Run directory name (default: UTC timestamp)");
  app.add_option("--seed", o.seed, "Base seed");
  app.add_option("--repeats", o.repeats, "Number of seeds");
  app.add_option("--folds", o.folds, "Folds for kfold");
  app.add_option("--epochs", o.epochs, "Training epochs per head");
  app.add_option("--lr", o.lr, "Adam learning rate");
  app.add_option("--methods", o.methods, "Fusion methods (lasso elastic rf gb sgd mean)")->delimiter(',');
  app.add_option("--ratios", o.ratios, "Noise ratios")->delimiter(',');
  app.add_option("-j,--workers", o.workers, "Worker threads (0 = all cores)");
  app.add_option("--set", o.sets, "Override any field: --set train.patience=10");
  app.add_flag("--deterministic", o.deterministic, "Single worker");
  app.add_flag("--no-plots", o.no_plots, "Skip SVG output");
  app.add_flag("--print-config", o.print_config,
               "Write the resolved configuration to <outdir>/resolved_config.json, print it and exit");
  app.add_flag("-q,--quiet", o.quiet, "Only log warnings and errors");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal molecular property prediction: SMILES Transformer, ECFP BiGRU and graph GCN "
               "heads with late fusion."};
  app.require_subcommand(1);
  Overrides o;
  add_common(app, o);
  app.fallthrough();
  const std::pair<const char*, const char*> commands[] = {
      {"prepare", "Tokenize, fingerprint and graph-encode the dataset into the cache"},
      {"train", "Train the three heads for each seed and write checkpoints"},
      {"evaluate", "Fit fusion weights and score every method on the clean test split"},
      {"noise", "Score trained models on test inputs at each noise ratio"},
      {"repeat", "Train and evaluate over all seeds and noise ratios in one pass"},
      {"kfold", "Train and evaluate over k cross-validation folds"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  auto logger = spdlog::stderr_color_mt("mmfdl");
  logger->set_pattern("[%H:%M:%S %^%l%$] %v");
  spdlog::set_default_logger(logger);
  if (o.quiet) spdlog::set_level(spdlog::level::warn);

  try {
    const ExperimentConfig config = resolve(o);
    mmfdl::config::validate(config);
    if (o.print_config) {
      const std::string text = mmfdl::config::to_json(config);
      fs::create_directories(config.output.outdir);
      std::ofstream(fs::path(config.output.outdir) / "resolved_config.json") << text;
      std::cout << text;
      return 0;
    }
    const auto command = mmfdl::pipeline::parse_command(app.get_subcommands().front()->get_name());
    const auto result = mmfdl::pipeline::run_command(command, config);
    if (command == mmfdl::pipeline::Command::kPrepare) {
      std::cout << result.cache.string() << "\n";
    } else {
      for (const auto& f : result.run.failures) {
        spdlog::warn("seed {} failed ({})", f.seed, mmfdl::errc_name(f.code));
      }
      std::cout << result.run_dir.string() << "\n";
    }
    return 0;
  } catch (const mmfdl::Error& e) {
    spdlog::error("{}", e.what());
    return exit_code(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  }
}
