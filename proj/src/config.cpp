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

#include "mmfdl/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mmfdl/error.hpp"

namespace mmfdl::config {

namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& message) { throw Error(Errc::kInvalidConfig, message); }

// Serializes one field to its JSON value and back.
template <typename T>
json encode_value(const T& value) {
  return value;
}

json encode_value(const std::optional<double>& lambda) {
  return lambda ? json(*lambda) : json("auto");
}

json encode_value(const std::vector<fusion::Method>& methods) {
  json out = json::array();
  for (const auto m : methods) out.push_back(std::string(fusion::method_name(m)));
  return out;
}

template <typename T>
void decode_value(const json& j, T& out) {
  out = j.get<T>();
}

void decode_value(const json& j, std::optional<double>& lambda) {
  if (j.is_string() && j.get<std::string>() == "auto") {
    lambda.reset();
  } else if (j.is_number()) {
    lambda = j.get<double>();
  } else {
    invalid("fusion.lambda must be a number or \"auto\"");
  }
}

void decode_value(const json& j, std::vector<fusion::Method>& methods) {
  methods.clear();
  for (const auto& m : j) methods.push_back(fusion::parse_method(m.get<std::string>()));
}

void decode_value(const json& j, std::size_t& out) {
  if (!j.is_number_unsigned()) invalid("expected a nonnegative integer, got " + j.dump());
  out = j.get<std::size_t>();
}

void decode_value(const json& j, double& out) {
  if (!j.is_number()) invalid("expected a number, got " + j.dump());
  out = j.get<double>();
}

class Writer {
 public:
  template <typename T>
  void operator()(const char* pointer, const T& value) {
    root_[json::json_pointer(pointer)] = encode_value(value);
  }
  json root_ = json::object();
};

class Reader {
 public:
  explicit Reader(const json& root) : root_(root) {}

  template <typename T>
  void operator()(const char* pointer, T& value) {
    const json::json_pointer ptr(pointer);
    known_.insert(pointer);
    if (!root_.contains(ptr)) return;
    try {
      decode_value(root_.at(ptr), value);
    } catch (const json::exception& e) {
      invalid(std::string(pointer + 1) + ": " + e.what());
    } catch (const Error& e) {
      invalid(std::string(pointer + 1) + ": " + e.what());
    }
  }

  // Every leaf of the input must be a known field.
  void check_unknown() const { walk(root_, ""); }

 private:
  void walk(const json& node, const std::string& prefix) const {
    if (known_.count(prefix)) return;
    if (!node.is_object()) invalid("unknown configuration key " + prefix.substr(1));
    for (const auto& [key, child] : node.items()) walk(child, prefix + "/" + key);
  }

  const json& root_;
  std::set<std::string, std::less<>> known_;
};

template <typename Io, typename Config>
void visit(Io& io, Config& c) {
  io("/data/path", c.data.path);
  io("/data/name", c.data.name);
  io("/data/smiles_col", c.data.smiles_col);
  io("/data/target_col", c.data.target_col);
  io("/data/id_col", c.data.id_col);
  io("/data/test_ids", c.data.test_ids);
  io("/features/radius", c.features.radius);
  io("/features/nbits", c.features.nbits);
  io("/transformer/d", c.transformer.d);
  io("/transformer/heads", c.transformer.heads);
  io("/transformer/layers", c.transformer.layers);
  io("/transformer/ffn_mult", c.transformer.ffn_mult);
  io("/transformer/fc", c.transformer.fc);
  io("/transformer/dropout", c.transformer.dropout);
  io("/bigru/chunk_bits", c.bigru.chunk_bits);
  io("/bigru/hidden", c.bigru.hidden);
  io("/bigru/layers", c.bigru.layers);
  io("/bigru/heads", c.bigru.heads);
  io("/bigru/fc", c.bigru.fc);
  io("/bigru/dropout", c.bigru.dropout);
  io("/gcn/widths", c.gcn.widths);
  io("/gcn/fc", c.gcn.fc);
  io("/gcn/dropout", c.gcn.dropout);
  io("/train/epochs", c.train.head.epochs);
  io("/train/batch_size", c.train.head.batch_size);
  io("/train/patience", c.train.head.patience);
  io("/train/lr", c.train.head.lr);
  io("/train/val_fraction", c.train.val_fraction);
  io("/train/noise_ratio", c.train.noise_ratio);
  io("/fusion/methods", c.methods);
  io("/fusion/lambda", c.fusion.lambda);
  io("/fusion/alpha", c.fusion.alpha);
  io("/fusion/forest/trees", c.fusion.forest.trees);
  io("/fusion/forest/max_depth", c.fusion.forest.max_depth);
  io("/fusion/forest/features_per_split", c.fusion.forest.features_per_split);
  io("/fusion/boost/rounds", c.fusion.boost.rounds);
  io("/fusion/boost/shrinkage", c.fusion.boost.shrinkage);
  io("/fusion/boost/max_depth", c.fusion.boost.max_depth);
  io("/fusion/sgd/lr", c.fusion.sgd.lr);
  io("/fusion/sgd/epochs", c.fusion.sgd.epochs);
  io("/fusion/sgd/batch_size", c.fusion.sgd.batch_size);
  io("/protocol/seed", c.protocol.seed);
  io("/protocol/repeats", c.protocol.repeats);
  io("/protocol/folds", c.protocol.folds);
  io("/protocol/noise_ratios", c.protocol.noise_ratios);
  io("/protocol/knn_k", c.protocol.knn_k);
  io("/output/outdir", c.output.outdir);
  io("/output/cache_dir", c.output.cache_dir);
  io("/output/run_id", c.output.run_id);
  io("/output/plots", c.output.plots);
  io("/output/save_checkpoints", c.output.save_checkpoints);
  io("/output/workers", c.output.workers);
}

json to_tree(const ExperimentConfig& config) {
  Writer w;
  visit(w, config);
  return w.root_;
}

ExperimentConfig from_tree(const json& root) {
  if (!root.is_object()) invalid("configuration must be a JSON object");
  ExperimentConfig config;
  Reader r(root);
  visit(r, config);
  r.check_unknown();
  return config;
}

}  // namespace

bool ExperimentConfig::operator==(const ExperimentConfig& other) const {
  return to_tree(*this) == to_tree(other);
}

std::string to_json(const ExperimentConfig& config) { return to_tree(config).dump(2) + "\n"; }

ExperimentConfig from_json(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    invalid(e.what());
  }
  return from_tree(root);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return from_json(text.str());
}

void set_option(ExperimentConfig& config, std::string_view key, std::string_view value) {
  if (key.empty()) invalid("empty option key");
  std::string pointer = "/" + std::string(key);
  std::replace(pointer.begin(), pointer.end(), '.', '/');
  json parsed = json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = std::string(value);
  json root = to_tree(config);
  const json::json_pointer ptr(pointer);
  if (!root.contains(ptr) || root.at(ptr).is_object()) {
    invalid("unknown configuration key " + std::string(key));
  }
  root[ptr] = std::move(parsed);
  config = from_tree(root);
}

void validate(const ExperimentConfig& c) {
  const auto require = [](bool ok, const std::string& message) {
    if (!ok) invalid(message);
  };
  const auto is_rate = [](double v) { return v >= 0.0 && v <= 1.0; };
  require(c.features.radius >= 0, "features.radius must be >= 0");
  require(c.features.nbits > 0, "features.nbits must be positive");
  require(c.transformer.d > 0 && c.transformer.d % 2 == 0, "transformer.d must be positive and even");
  require(c.transformer.heads > 0 && c.transformer.d % c.transformer.heads == 0,
          "transformer.d must be divisible by transformer.heads");
  require(c.transformer.layers > 0 && c.transformer.ffn_mult > 0 && c.transformer.fc > 0,
          "transformer sizes must be positive");
  require(c.bigru.chunk_bits > 0 && c.features.nbits % c.bigru.chunk_bits == 0,
          "features.nbits must be a multiple of bigru.chunk_bits");
  require(c.bigru.hidden > 0 && c.bigru.heads > 0 && c.bigru.hidden % c.bigru.heads == 0,
          "bigru.hidden must be divisible by bigru.heads");
  require(c.bigru.layers > 0 && c.bigru.fc > 0, "bigru sizes must be positive");
  require(!c.gcn.widths.empty() && c.gcn.fc > 0 &&
              std::all_of(c.gcn.widths.begin(), c.gcn.widths.end(), [](std::size_t w) { return w > 0; }),
          "gcn widths must be positive");
  for (const double p : {c.transformer.dropout, c.bigru.dropout, c.gcn.dropout}) {
    require(p >= 0.0 && p < 1.0, "dropout must lie in [0, 1)");
  }
  require(c.train.head.batch_size > 0, "train.batch_size must be positive");
  require(c.train.head.lr > 0.0, "train.lr must be positive");
  require(c.train.val_fraction > 0.0 && c.train.val_fraction < 0.5,
          "train.val_fraction must lie in (0, 0.5)");
  require(is_rate(c.train.noise_ratio), "train.noise_ratio must lie in [0, 1]");
  require(!c.methods.empty(), "fusion.methods must not be empty");
  std::set<fusion::Method> unique(c.methods.begin(), c.methods.end());
  require(unique.size() == c.methods.size(), "fusion.methods lists a method twice");
  require(!c.fusion.lambda || *c.fusion.lambda >= 0.0, "fusion.lambda must be >= 0");
  require(is_rate(c.fusion.alpha), "fusion.alpha must lie in [0, 1]");
  require(c.protocol.repeats > 0, "protocol.repeats must be positive");
  require(c.protocol.folds >= 2, "protocol.folds must be at least 2");
  require(c.protocol.knn_k > 0, "protocol.knn_k must be positive");
  require(!c.protocol.noise_ratios.empty() &&
              std::all_of(c.protocol.noise_ratios.begin(), c.protocol.noise_ratios.end(), is_rate),
          "protocol.noise_ratios must be nonempty values in [0, 1]");
}

}  // namespace mmfdl::config
