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

#include "mmfdl/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "mmfdl/fusion.hpp"
#include "mmfdl/molgraph.hpp"
#include "mmfdl/optim.hpp"
#include "mmfdl/rng.hpp"

namespace mmfdl::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Stream ids for Rng::split, one per independent use of a seed.
enum Stream : std::uint64_t {
  kInitTransformer = 1,
  kInitBigru = 2,
  kInitGcn = 3,
  kValidationCarve = 4,
  kTrainTransformer = 5,
  kTrainBigru = 6,
  kTrainGcn = 7,
  kFusionBase = 20,
  kTrainNoiseBase = 40,
  kTestNoiseBase = 50,
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

std::string dataset_name(const config::ExperimentConfig& config) {
  if (!config.data.name.empty()) return config.data.name;
  return fs::path(config.data.path).stem().string();
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

fs::path cache_root(const config::ExperimentConfig& config) {
  if (!config.output.cache_dir.empty()) return config.output.cache_dir;
  return fs::path(config.output.outdir) / "cache";
}

// ---- cache files ------------------------------------------------------------

void write_cache(const Prepared& data, const fs::path& dir, const std::string& key, int version) {
  const fs::path tmp = dir.string() + ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  json meta;
  meta["key"] = key;
  meta["version"] = version;
  meta["name"] = data.name;
  meta["dropped"] = data.dropped;
  meta["max_len"] = data.max_len;
  json records = json::array();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data.records[i];
    records.push_back({{"id", r.id},
                       {"smiles", r.smiles},
                       {"target", r.target},
                       {"ids", data.seqs[i].ids},
                       {"true_len", data.seqs[i].true_len},
                       {"ecfp", data.fps[i].to_hex()}});
  }
  meta["records"] = std::move(records);
  std::ofstream(tmp / "data.json") << meta.dump() << "\n";
  data.vocab.save(tmp / "vocab.tsv");
  std::vector<nn::NamedTensor> graphs;
  for (std::size_t i = 0; i < data.size(); ++i) {
    graphs.push_back({"x" + std::to_string(i), data.graphs[i].x});
    graphs.push_back({"a" + std::to_string(i), data.graphs[i].a});
  }
  nn::save_checkpoint(tmp / "graphs.bin", graphs);
  fs::remove_all(dir);
  fs::rename(tmp, dir);
}

std::optional<Prepared> read_cache(const fs::path& dir, const std::string& key, int radius) {
  if (!fs::exists(dir / "data.json")) return std::nullopt;
  json meta;
  try {
    meta = json::parse(read_file(dir / "data.json"));
    if (meta.at("key").get<std::string>() != key) return std::nullopt;
    Prepared data;
    data.name = meta.at("name").get<std::string>();
    data.dropped = meta.at("dropped").get<std::size_t>();
    data.max_len = meta.at("max_len").get<std::size_t>();
    data.vocab = chemlex::Vocabulary::load(dir / "vocab.tsv");
    for (const auto& r : meta.at("records")) {
      data.records.push_back({r.at("id").get<std::string>(), r.at("smiles").get<std::string>(),
                              r.at("target").get<double>()});
      data.seqs.push_back({r.at("ids").get<std::vector<std::int32_t>>(), r.at("true_len").get<std::size_t>()});
      data.fps.push_back(ecfp::Fingerprint::from_hex(r.at("ecfp").get<std::string>(), radius));
    }
    const auto graphs = nn::load_checkpoint(dir / "graphs.bin");
    if (graphs.size() != 2 * data.size()) return std::nullopt;
    for (std::size_t i = 0; i < data.size(); ++i) {
      data.graphs.push_back({graphs[2 * i].tensor, graphs[2 * i + 1].tensor});
    }
    return data;
  } catch (const json::exception& e) {
    spdlog::warn("ignoring unreadable cache {}: {}", dir.string(), e.what());
    return std::nullopt;
  }
}

// ---- split inputs -----------------------------------------------------------

fusion::ModalInputs gather(const Prepared& data, std::span<const std::size_t> rows,
                           std::size_t chunk_bits) {
  fusion::ModalInputs out;
  for (const std::size_t i : rows) {
    out.seqs.push_back(data.seqs[i]);
    out.chunks.push_back(encoders::fingerprint_chunks(data.fps[i], chunk_bits));
    out.graphs.push_back(data.graphs[i]);
    out.y.push_back(data.records[i].target);
  }
  return out;
}

// Noise for molecule rows[k] in modality m comes from stream (base + m, row),
// independent of the ratio.
fusion::ModalInputs gather_noisy(const Prepared& data, std::span<const std::size_t> rows,
                                 std::size_t chunk_bits, double ratio, std::uint64_t seed,
                                 std::uint64_t stream_base) {
  if (ratio == 0.0) return gather(data, rows, chunk_bits);
  const Rng root(seed);
  const Rng seq_root = root.split(stream_base);
  const Rng fp_root = root.split(stream_base + 1);
  const Rng graph_root = root.split(stream_base + 2);
  fusion::ModalInputs out;
  for (const std::size_t i : rows) {
    Rng seq_rng = seq_root.split(i);
    Rng fp_rng = fp_root.split(i);
    Rng graph_rng = graph_root.split(i);
    out.seqs.push_back(bench::add_noise(data.seqs[i], data.vocab.size(), ratio, seq_rng));
    out.chunks.push_back(
        encoders::fingerprint_chunks(bench::add_noise(data.fps[i], ratio, fp_rng), chunk_bits));
    out.graphs.push_back(bench::add_noise(data.graphs[i], ratio, graph_rng));
    out.y.push_back(data.records[i].target);
  }
  return out;
}

template <typename Head, typename Input>
encoders::TrainReport fit_head(Head& head, const std::vector<Input>& fit_x, std::span<const double> fit_y,
                               const std::vector<Input>& val_x, std::span<const double> val_y,
                               const config::ExperimentConfig& config, Rng rng, std::uint64_t seed,
                               std::string_view name) {
  const auto report = encoders::train_head(head, std::span<const Input>(fit_x), fit_y,
                                           std::span<const Input>(val_x), val_y, config.train.head, rng);
  spdlog::info("seed {} {}: best epoch {} of {}, val loss {:.4f} ({:.1f}s)", seed, name,
               report.best_epoch, report.train_loss.size(), report.best_val_loss,
               report.wall_seconds);
  return report;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

fs::path latest_trained_run(const fs::path& dataset_dir) {
  std::vector<fs::path> runs;
  if (fs::is_directory(dataset_dir)) {
    for (const auto& entry : fs::directory_iterator(dataset_dir)) {
      if (entry.is_directory() && fs::is_directory(entry.path() / "checkpoints")) runs.push_back(entry.path());
    }
  }
  if (runs.empty()) throw Error(Errc::kIo, "no trained run with checkpoints under " + dataset_dir.string());
  std::sort(runs.begin(), runs.end());
  return runs.back();
}

}  // namespace

// ---- featurization and cache ------------------------------------------------

Prepared featurize(const bench::Dataset& dataset, const config::FeatureConfig& features) {
  Prepared out;
  out.name = dataset.name;
  out.records = dataset.records;
  out.dropped = dataset.dropped;
  std::vector<chemlex::TokenSeq> tokens;
  tokens.reserve(dataset.size());
  for (const auto& r : dataset.records) tokens.push_back(chemlex::tokenize(r.smiles));
  out.vocab = chemlex::Vocabulary::build(tokens);
  out.max_len = chemlex::max_token_length(tokens);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto mol = molgraph::parse_molecule(dataset.records[i].smiles);
    out.seqs.push_back(chemlex::encode(tokens[i], out.vocab, out.max_len));
    out.fps.push_back(ecfp::ecfp(mol, features.radius, features.nbits));
    out.graphs.push_back(encoders::graph_input(mol));
  }
  return out;
}

std::string cache_key(const config::ExperimentConfig& config, int version) {
  if (config.data.path.empty()) throw Error(Errc::kInvalidConfig, "data.path is required");
  std::uint64_t h = fnv1a(read_file(config.data.path));
  const std::string fields = '\0' + config.data.smiles_col + '\0' + config.data.target_col + '\0' +
                             config.data.id_col + '\0' + dataset_name(config) + '\0' +
                             std::to_string(config.features.radius) + '\0' +
                             std::to_string(config.features.nbits) + '\0' + std::to_string(version);
  h = fnv1a(fields, h);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PrepareOutcome prepare(const config::ExperimentConfig& config, int version) {
  const std::string key = cache_key(config, version);
  const std::string name = dataset_name(config);
  PrepareOutcome out;
  out.cache = cache_root(config) / (name + "-" + key);
  if (auto cached = read_cache(out.cache, key, config.features.radius)) {
    spdlog::info("cache hit: {} ({} molecules)", out.cache.string(), cached->size());
    out.data = std::move(*cached);
    out.cache_hit = true;
    return out;
  }
  const auto dataset = bench::load_csv(config.data.path, config.data.smiles_col, config.data.target_col,
                                       config.data.id_col, name);
  spdlog::info("loaded {}: {} molecules, {} rows dropped", name, dataset.size(), dataset.dropped);
  out.data = featurize(dataset, config.features);
  write_cache(out.data, out.cache, key, version);
  spdlog::info("cache written: {} (vocabulary {}, max length {})", out.cache.string(),
               out.data.vocab.size(), out.data.max_len);
  return out;
}

// ---- models -----------------------------------------------------------------

Models init_models(const Prepared& data, const config::ExperimentConfig& config, std::uint64_t seed) {
  const Rng root(seed);
  encoders::TransformerConfig tc = config.transformer;
  tc.vocab_size = data.vocab.size();
  tc.max_len = data.max_len;
  Rng tf_rng = root.split(kInitTransformer);
  Rng gru_rng = root.split(kInitBigru);
  Rng gcn_rng = root.split(kInitGcn);
  return Models{encoders::TransformerHead(tc, tf_rng), encoders::BiGruHead(config.bigru, gru_rng),
                encoders::GcnHead(config.gcn, gcn_rng), {}};
}

Models train_models(const Prepared& data, const bench::SplitPlan& plan,
                    const config::ExperimentConfig& config, std::uint64_t seed) {
  Models models = init_models(data, config, seed);
  const Rng root(seed);
  std::vector<std::size_t> order = plan.train;
  Rng carve = root.split(kValidationCarve);
  carve.shuffle(std::span<std::size_t>(order));
  const auto n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(config.train.val_fraction * static_cast<double>(order.size())));
  if (order.size() <= n_val) {
    throw Error(Errc::kTooSmall, "training split of " + std::to_string(order.size()) +
                                     " leaves nothing after the validation slice");
  }
  const std::span<const std::size_t> fit_rows(order.data(), order.size() - n_val);
  const std::span<const std::size_t> val_rows(order.data() + fit_rows.size(), n_val);
  const std::size_t chunk = config.bigru.chunk_bits;
  const auto fit = gather_noisy(data, fit_rows, chunk, config.train.noise_ratio, seed, kTrainNoiseBase);
  const auto val = gather(data, val_rows, chunk);

  models.reports[0] = fit_head(models.transformer, fit.seqs, fit.y, val.seqs, val.y, config,
                               root.split(kTrainTransformer), seed, kModalNames[0]);
  models.reports[1] = fit_head(models.bigru, fit.chunks, fit.y, val.chunks, val.y, config,
                               root.split(kTrainBigru), seed, kModalNames[1]);
  models.reports[2] = fit_head(models.gcn, fit.graphs, fit.y, val.graphs, val.y, config,
                               root.split(kTrainGcn), seed, kModalNames[2]);
  return models;
}

void save_models(Models& models, const fs::path& dir) {
  fs::create_directories(dir);
  encoders::save_head(models.transformer, dir / "transformer.ckpt");
  encoders::save_head(models.bigru, dir / "bigru.ckpt");
  encoders::save_head(models.gcn, dir / "gcn.ckpt");
}

Models load_models(const Prepared& data, const config::ExperimentConfig& config, std::uint64_t seed,
                   const fs::path& dir) {
  for (const auto name : kModalNames) {
    const fs::path file = dir / (std::string(name) + ".ckpt");
    if (!fs::exists(file)) throw Error(Errc::kIo, "missing checkpoint " + file.string());
  }
  Models models = init_models(data, config, seed);
  encoders::load_head(models.transformer, dir / "transformer.ckpt");
  encoders::load_head(models.bigru, dir / "bigru.ckpt");
  encoders::load_head(models.gcn, dir / "gcn.ckpt");
  return models;
}

// ---- evaluation -------------------------------------------------------------

SeedResult evaluate(Models& models, const Prepared& data, const bench::SplitPlan& plan,
                    const config::ExperimentConfig& config, std::uint64_t seed,
                    std::span<const double> ratios) {
  SeedResult out;
  out.seed = seed;
  out.reports = models.reports;
  const std::size_t chunk = config.bigru.chunk_bits;
  const fusion::Heads heads{&models.transformer, &models.bigru, &models.gcn};
  const auto tuning = fusion::collect_outputs<fusion::TuningTag>(heads, gather(data, plan.tuning, chunk));

  const Rng root(seed);
  std::vector<std::pair<std::string, fusion::FusionWeights>> fused;
  for (const fusion::Method method : config.methods) {
    Rng rng = root.split(kFusionBase + static_cast<std::uint64_t>(method));
    const auto w = fusion::fit(method, tuning, config.fusion, rng);
    fused.emplace_back("tri_" + std::string(fusion::method_name(method)), w);
    out.weights.push_back({fused.back().first, seed, w.w});
  }

  for (const double ratio : ratios) {
    const auto test = fusion::collect_outputs<fusion::TestTag>(
        heads, gather_noisy(data, plan.test, chunk, ratio, seed, kTestNoiseBase));
    const std::vector<double> y(test.y.data(), test.y.data() + test.y.size());
    for (Eigen::Index k = 0; k < 3; ++k) {
      const Eigen::VectorXd pred = test.o.col(k);
      out.metrics.push_back({std::string(kModalNames[static_cast<std::size_t>(k)]), seed, ratio,
                             bench::compute_metrics(y, std::span<const double>(pred.data(), y.size()))});
    }
    for (const auto& [name, w] : fused) {
      const Eigen::VectorXd pred = fusion::fused_predict(test, w);
      out.metrics.push_back(
          {name, seed, ratio, bench::compute_metrics(y, std::span<const double>(pred.data(), y.size()))});
    }
  }

  std::vector<ecfp::Fingerprint> train_fps;
  std::vector<std::vector<double>> train_seqs;
  for (const std::size_t i : plan.train) {
    train_fps.push_back(data.fps[i]);
    train_seqs.emplace_back(data.seqs[i].ids.begin(), data.seqs[i].ids.end());
  }
  std::vector<ecfp::Fingerprint> test_fps;
  std::vector<std::vector<double>> test_seqs;
  for (const std::size_t i : plan.test) {
    test_fps.push_back(data.fps[i]);
    test_seqs.emplace_back(data.seqs[i].ids.begin(), data.seqs[i].ids.end());
  }
  const auto fp_rows = bench::knn_diagnostics(train_fps, test_fps, config.protocol.knn_k);
  const auto seq_rows = bench::knn_diagnostics(train_seqs, test_seqs, config.protocol.knn_k);
  for (std::size_t t = 0; t < plan.test.size(); ++t) {
    const std::string& id = data.records[plan.test[t]].id;
    out.knn.push_back({seed, id, "ecfp", fp_rows[t]});
    out.knn.push_back({seed, id, "smiles", seq_rows[t]});
  }
  return out;
}

// ---- multi-seed runs --------------------------------------------------------

std::vector<Job> repeat_jobs(const Prepared& data, const config::ExperimentConfig& config) {
  std::vector<std::size_t> fixed_test;
  if (!config.data.test_ids.empty()) {
    std::map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < data.size(); ++i) by_id.emplace(data.records[i].id, i);
    std::ifstream in(config.data.test_ids);
    if (!in) throw Error(Errc::kIo, "cannot read test id list " + config.data.test_ids);
    std::string line;
    std::size_t missing = 0;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto it = by_id.find(line);
      if (it == by_id.end()) {
        ++missing;
      } else {
        fixed_test.push_back(it->second);
      }
    }
    if (missing) spdlog::warn("{} test ids not found among retained molecules", missing);
    if (fixed_test.empty()) throw Error(Errc::kEmptyDataset, "fixed test list matched no molecules");
  } else {
    std::string lower = data.name;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower.find("llinas") != std::string::npos) {
      spdlog::warn("no fixed test list given for {}; using a random 9:1 split", data.name);
    }
  }
  std::vector<Job> jobs;
  for (std::size_t r = 0; r < config.protocol.repeats; ++r) {
    const std::uint64_t seed = config.protocol.seed + r;
    jobs.push_back({seed, fixed_test.empty() ? bench::make_split(data.size(), seed)
                                             : bench::make_fixed_split(data.size(), fixed_test, seed)});
  }
  return jobs;
}

std::vector<Job> kfold_jobs(const Prepared& data, const config::ExperimentConfig& config) {
  const auto plans = bench::make_kfold(data.size(), config.protocol.folds, config.protocol.seed);
  std::vector<Job> jobs;
  for (std::size_t f = 0; f < plans.size(); ++f) jobs.push_back({config.protocol.seed + f, plans[f]});
  return jobs;
}

RunResult run_jobs(const Prepared& data, const config::ExperimentConfig& config, std::span<const Job> jobs,
                   Stage stage, std::span<const double> ratios, std::size_t workers,
                   const fs::path& checkpoint_root) {
  std::vector<std::optional<SeedResult>> slots(jobs.size());
  std::vector<std::optional<Failure>> failed(jobs.size());
  const auto seed_dir = [&](std::uint64_t seed) { return checkpoint_root / ("seed_" + std::to_string(seed)); };

  const auto run_one = [&](const Job& job) {
    if (stage == Stage::kEvaluate) {
      Models models = load_models(data, config, job.seed, seed_dir(job.seed));
      return evaluate(models, data, job.plan, config, job.seed, ratios);
    }
    Models models = train_models(data, job.plan, config, job.seed);
    if (!checkpoint_root.empty()) save_models(models, seed_dir(job.seed));
    if (stage == Stage::kTrain) {
      SeedResult result;
      result.seed = job.seed;
      result.reports = models.reports;
      return result;
    }
    return evaluate(models, data, job.plan, config, job.seed, ratios);
  };

  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
      try {
        slots[j] = run_one(jobs[j]);
      } catch (const Error& e) {
        spdlog::error("seed {} failed: {}", jobs[j].seed, e.what());
        failed[j] = Failure{jobs[j].seed, e.code(), e.what()};
      }
    }
  };
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, jobs.size());
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  RunResult out;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (slots[j]) out.seeds.push_back(std::move(*slots[j]));
    if (failed[j]) out.failures.push_back(std::move(*failed[j]));
  }
  out.summary = summarize_runs(out.seeds);
  return out;
}

std::vector<SummaryRow> summarize_runs(std::span<const SeedResult> seeds) {
  std::vector<std::pair<std::string, double>> keys;
  std::map<std::pair<std::string, double>, std::array<std::vector<double>, 4>> values;
  for (const auto& seed : seeds) {
    for (const auto& row : seed.metrics) {
      const auto key = std::make_pair(row.method, row.noise_ratio);
      auto [it, inserted] = values.try_emplace(key);
      if (inserted) keys.push_back(key);
      it->second[0].push_back(row.metrics.rmse);
      it->second[1].push_back(row.metrics.mae);
      it->second[2].push_back(row.metrics.pearson);
      it->second[3].push_back(row.metrics.cosine);
    }
  }
  static constexpr const char* kMetricNames[] = {"rmse", "mae", "pearson", "cosine"};
  std::vector<SummaryRow> out;
  for (const auto& key : keys) {
    const auto& v = values.at(key);
    for (std::size_t m = 0; m < 4; ++m) {
      out.push_back({key.first, key.second, kMetricNames[m], bench::summarize(v[m]), v[m].size()});
    }
  }
  return out;
}

// ---- commands ---------------------------------------------------------------

Command parse_command(std::string_view name) {
  static const std::map<std::string_view, Command> kCommands = {
      {"prepare", Command::kPrepare}, {"train", Command::kTrain}, {"evaluate", Command::kEvaluate},
      {"noise", Command::kNoise},     {"repeat", Command::kRepeat}, {"kfold", Command::kKfold}};
  const auto it = kCommands.find(name);
  if (it == kCommands.end()) throw Error(Errc::kInvalidConfig, "unknown command " + std::string(name));
  return it->second;
}

CommandResult run_command(Command command, const config::ExperimentConfig& config) {
  config::validate(config);
  CommandResult out;
  auto prepared = prepare(config);
  out.cache = prepared.cache;
  out.cache_hit = prepared.cache_hit;
  if (command == Command::kPrepare) return out;
  const Prepared& data = prepared.data;

  const fs::path dataset_dir = fs::path(config.output.outdir) / data.name;
  const bool reads_checkpoints = command == Command::kEvaluate || command == Command::kNoise;
  if (!config.output.run_id.empty()) {
    out.run_dir = dataset_dir / config.output.run_id;
  } else if (reads_checkpoints) {
    out.run_dir = latest_trained_run(dataset_dir);
  } else {
    out.run_dir = dataset_dir / utc_timestamp();
    for (int k = 1; fs::exists(out.run_dir); ++k) {
      out.run_dir = dataset_dir / (utc_timestamp() + "-" + std::to_string(k));
    }
  }
  fs::create_directories(out.run_dir);
  std::ofstream(out.run_dir / "config.json") << config::to_json(config);
  spdlog::info("run directory: {}", out.run_dir.string());

  const fs::path checkpoints = out.run_dir / "checkpoints";
  const auto jobs = command == Command::kKfold ? kfold_jobs(data, config) : repeat_jobs(data, config);
  const std::vector<double> clean = {0.0};
  std::span<const double> ratios = config.protocol.noise_ratios;
  Stage stage = Stage::kFull;
  fs::path root = config.output.save_checkpoints ? checkpoints : fs::path();
  switch (command) {
    case Command::kTrain:
      stage = Stage::kTrain;
      root = checkpoints;
      ratios = {};
      break;
    case Command::kEvaluate:
      stage = Stage::kEvaluate;
      root = checkpoints;
      ratios = clean;
      break;
    case Command::kNoise:
      stage = Stage::kEvaluate;
      root = checkpoints;
      break;
    default:
      break;
  }
  out.run = run_jobs(data, config, jobs, stage, ratios, config.output.workers, root);

  const fs::path& dir = out.run_dir;
  if (!out.run.failures.empty()) write_failures_csv(dir / "failures.csv", out.run.failures);
  if (out.run.seeds.empty() && !out.run.failures.empty()) {
    const auto& first = out.run.failures.front();
    throw Error(first.code, "every seed failed; first failure: " + first.message);
  }
  if (stage != Stage::kEvaluate) write_train_csv(dir / "train_reports.csv", data.name, out.run.seeds);
  if (stage == Stage::kTrain) return out;
  const std::string prefix = command == Command::kNoise ? "noise_" : "";
  write_metrics_csv(dir / (prefix + "metrics.csv"), data.name, out.run.seeds);
  write_summary_csv(dir / (prefix + "summary.csv"), data.name, out.run.summary);
  if (command != Command::kNoise) {
    write_weights_csv(dir / "weights.csv", data.name, out.run.seeds);
    write_knn_csv(dir / "knn.csv", data.name, out.run.seeds);
  }
  if (config.output.plots) {
    if (ratios.size() > 1) write_noise_svg(dir / (prefix + "noise.svg"), out.run.summary);
    write_pearson_svg(dir / (prefix + "pearson.svg"), out.run.seeds);
  }
  return out;
}

}  // namespace mmfdl::pipeline
