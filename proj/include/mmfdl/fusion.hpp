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

// Late fusion of the three modal predictions: y_hat = w1 o_tf + w2 o_gru + w3 o_gcn.

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mmfdl/chemlex.hpp"
#include "mmfdl/encoders.hpp"

namespace mmfdl {
class Rng;
}

namespace mmfdl::fusion {

using OutputMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Rows are molecules; columns are (Transformer, BiGRU, GCN) predictions.
/// The tag keeps tuning and test outputs from being mixed up.
template <typename Tag>
struct TaggedOutputs {
  OutputMatrix o;
  Eigen::VectorXd y;

  std::size_t size() const noexcept { return static_cast<std::size_t>(o.rows()); }
};

struct TuningTag {};
struct TestTag {};
using TuningOutputs = TaggedOutputs<TuningTag>;
using TestOutputs = TaggedOutputs<TestTag>;

/// Per-modality inputs and targets for one split.
struct ModalInputs {
  std::vector<chemlex::EncodedSeq> seqs;
  std::vector<encoders::Tensor> chunks;
  std::vector<encoders::GraphInput> graphs;
  std::vector<double> y;

  std::size_t size() const noexcept { return y.size(); }
};

struct Heads {
  encoders::TransformerHead* tf = nullptr;
  encoders::BiGruHead* gru = nullptr;
  encoders::GcnHead* gcn = nullptr;
};

template <typename Tag>
TaggedOutputs<Tag> collect_outputs(const Heads& heads, const ModalInputs& inputs) {
  TaggedOutputs<Tag> out;
  out.o.resize(static_cast<Eigen::Index>(inputs.size()), 3);
  out.y.resize(static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out.o(r, 0) = encoders::predict(*heads.tf, inputs.seqs[i]);
    out.o(r, 1) = encoders::predict(*heads.gru, inputs.chunks[i]);
    out.o(r, 2) = encoders::predict(*heads.gcn, inputs.graphs[i]);
    out.y(r) = inputs.y[i];
  }
  return out;
}

enum class Method { kLasso, kElastic, kRf, kGb, kSgd, kMean };

std::string_view method_name(Method m);
/// Accepts "lasso", "elastic", "rf", "gb", "sgd", "mean".
Method parse_method(std::string_view name);
inline constexpr std::array<Method, 6> kAllMethods = {Method::kLasso, Method::kElastic, Method::kRf,
                                                      Method::kGb,    Method::kSgd,     Method::kMean};

struct FusionWeights {
  std::array<double, 3> w{};
  Method method = Method::kMean;
};

struct ForestConfig {
  std::size_t trees = 100;
  std::size_t max_depth = 6;
  std::size_t features_per_split = 2;
};

struct BoostConfig {
  std::size_t rounds = 200;
  double shrinkage = 0.05;
  std::size_t max_depth = 3;
};

struct SgdConfig {
  double lr = 1e-2;
  std::size_t epochs = 2000;
  std::size_t batch_size = 16;
};

struct FusionConfig {
  std::optional<double> lambda = 0.01;  // nullopt selects from kLambdaGrid
  double alpha = 0.5;
  ForestConfig forest;
  BoostConfig boost;
  SgdConfig sgd;
};

inline constexpr std::array<double, 3> kLambdaGrid = {1e-3, 1e-2, 1e-1};

/// Coordinate descent on (1/2m)|y - Ow|^2 + lambda |w|_1, no intercept.
FusionWeights fit_lasso(const TuningOutputs& data, double lambda);
/// Adds lambda (1 - alpha) / 2 |w|^2; alpha = 1 runs the exact lasso updates.
FusionWeights fit_elastic(const TuningOutputs& data, double lambda, double alpha);
/// Normalized impurity-decrease importances of a random forest.
FusionWeights fit_rf(const TuningOutputs& data, const ForestConfig& config, Rng& rng);
/// Normalized impurity-decrease importances of boosted trees.
FusionWeights fit_gb(const TuningOutputs& data, const BoostConfig& config);
/// Minibatch SGD on (1/m)|y - Ow|^2 from w = (1/3, 1/3, 1/3).
FusionWeights fit_sgd(const TuningOutputs& data, const SgdConfig& config, Rng& rng);
FusionWeights fit_mean();

/// Smallest 5-fold validation error over kLambdaGrid, folds drawn from rng.
double select_lambda(const TuningOutputs& data, Method method, double alpha, Rng& rng);

FusionWeights fit(Method method, const TuningOutputs& data, const FusionConfig& config, Rng& rng);

inline double fused_predict(const std::array<double, 3>& row, const FusionWeights& w) {
  return w.w[0] * row[0] + w.w[1] * row[1] + w.w[2] * row[2];
}

template <typename Tag>
Eigen::VectorXd fused_predict(const TaggedOutputs<Tag>& data, const FusionWeights& w) {
  return data.o * Eigen::Vector3d(w.w[0], w.w[1], w.w[2]);
}

}  // namespace mmfdl::fusion
