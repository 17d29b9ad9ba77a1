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

#include "mmfdl/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mmfdl/error.hpp"
#include "mmfdl/rng.hpp"

namespace mmfdl::fusion {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kLasso: return "lasso";
    case Method::kElastic: return "elastic";
    case Method::kRf: return "rf";
    case Method::kGb: return "gb";
    case Method::kSgd: return "sgd";
    case Method::kMean: return "mean";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (const Method m : kAllMethods) {
    if (method_name(m) == name) return m;
  }
  throw Error(Errc::kInvalidConfig, "unknown fusion method '" + std::string(name) + "'");
}

namespace {

void require_rows(const TuningOutputs& data, std::size_t minimum) {
  if (data.y.size() != data.o.rows()) {
    throw Error(Errc::kLengthMismatch, "fusion outputs and targets differ in length");
  }
  if (data.size() < minimum) {
    throw Error(Errc::kTooFewSamples, std::to_string(data.size()) + " tuning rows, need " +
                                          std::to_string(minimum));
  }
  if (!data.o.allFinite() || !data.y.allFinite()) {
    throw Error(Errc::kNonFiniteInput, "fusion inputs contain NaN or inf");
  }
}

constexpr double kCdTolerance = 1e-10;
constexpr int kCdMaxSweeps = 10000;

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

FusionWeights coordinate_descent(const OutputMatrix& o, const Eigen::VectorXd& y, double lambda,
                                 double alpha, Method tag) {
  const double m = static_cast<double>(o.rows());
  Eigen::Vector3d w = Eigen::Vector3d::Zero();
  Eigen::Vector3d z;
  for (int j = 0; j < 3; ++j) z[j] = o.col(j).squaredNorm() / m;
  Eigen::VectorXd residual = y;
  const double l1 = lambda * alpha;
  const double l2 = lambda * (1.0 - alpha);
  for (int sweep = 0; sweep < kCdMaxSweeps; ++sweep) {
    double max_change = 0.0;
    for (int j = 0; j < 3; ++j) {
      const double rho = o.col(j).dot(residual) / m + z[j] * w[j];
      const double denom = z[j] + l2;
      const double next = denom > 0.0 ? soft_threshold(rho, l1) / denom : 0.0;
      const double delta = next - w[j];
      if (delta != 0.0) {
        residual -= delta * o.col(j);
        w[j] = next;
      }
      max_change = std::max(max_change, std::abs(delta));
    }
    if (max_change < kCdTolerance) break;
  }
  return {{w[0], w[1], w[2]}, tag};
}

// ---- regression trees -------------------------------------------------------

class RegressionTree {
 public:
  RegressionTree(const OutputMatrix& o, const Eigen::VectorXd& target, std::size_t max_depth,
                 std::size_t features_per_split, Rng* rng, std::array<double, 3>& importance)
      : o_(o), target_(target), max_depth_(max_depth), features_(features_per_split), rng_(rng),
        importance_(importance) {}

  void fit(std::vector<Eigen::Index> rows) { build(rows, 0); }

  double predict(Eigen::Index r) const {
    std::size_t node = 0;
    while (nodes_[node].feature >= 0) {
      const Node& n = nodes_[node];
      node = o_(r, n.feature) <= n.threshold ? n.left : n.right;
    }
    return nodes_[node].value;
  }

 private:
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
    double value = 0.0;
  };

  std::size_t build(std::vector<Eigen::Index>& rows, std::size_t depth) {
    const std::size_t id = nodes_.size();
    nodes_.emplace_back();
    double sum = 0.0;
    double sumsq = 0.0;
    for (const auto r : rows) {
      sum += target_[r];
      sumsq += target_[r] * target_[r];
    }
    const double n = static_cast<double>(rows.size());
    nodes_[id].value = sum / n;
    if (depth >= max_depth_ || rows.size() < 2) return id;
    const double parent_sse = sumsq - sum * sum / n;

    std::array<int, 3> candidates = {0, 1, 2};
    std::size_t count = 3;
    if (rng_) {
      rng_->shuffle(std::span<int>(candidates));
      count = std::min<std::size_t>(features_, 3);
    }

    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<Eigen::Index> sorted = rows;
    for (std::size_t c = 0; c < count; ++c) {
      const int f = candidates[c];
      sorted = rows;
      std::stable_sort(sorted.begin(), sorted.end(),
                       [&](Eigen::Index a, Eigen::Index b) { return o_(a, f) < o_(b, f); });
      double left_sum = 0.0;
      double left_sq = 0.0;
      for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
        const double t = target_[sorted[k]];
        left_sum += t;
        left_sq += t * t;
        const double here = o_(sorted[k], f);
        const double next = o_(sorted[k + 1], f);
        if (here == next) continue;
        const double nl = static_cast<double>(k + 1);
        const double nr = n - nl;
        const double right_sum = sum - left_sum;
        const double right_sq = sumsq - left_sq;
        const double sse = (left_sq - left_sum * left_sum / nl) + (right_sq - right_sum * right_sum / nr);
        const double gain = parent_sse - sse;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          best_threshold = 0.5 * (here + next);
        }
      }
    }
    if (best_feature < 0) return id;

    importance_[static_cast<std::size_t>(best_feature)] += best_gain;
    std::vector<Eigen::Index> left;
    std::vector<Eigen::Index> right;
    for (const auto r : rows) (o_(r, best_feature) <= best_threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    nodes_[id].feature = best_feature;
    nodes_[id].threshold = best_threshold;
    const std::size_t l = build(left, depth + 1);
    const std::size_t r = build(right, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  const OutputMatrix& o_;
  const Eigen::VectorXd& target_;
  std::size_t max_depth_;
  std::size_t features_;
  Rng* rng_;
  std::array<double, 3>& importance_;
  std::vector<Node> nodes_;
};

FusionWeights normalized(const std::array<double, 3>& importance, Method tag) {
  const double total = importance[0] + importance[1] + importance[2];
  if (!(total > 0.0)) return {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, tag};
  return {{importance[0] / total, importance[1] / total, importance[2] / total}, tag};
}

}  // namespace

FusionWeights fit_elastic(const TuningOutputs& data, double lambda, double alpha) {
  require_rows(data, 3);
  if (!(lambda >= 0.0) || !(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(Errc::kInvalidConfig, "need lambda >= 0 and alpha in [0, 1]");
  }
  if (lambda == 0.0) {
    for (int j = 0; j < 3; ++j) {
      const auto col = data.o.col(j);
      if ((col.array() == col[0]).all()) {
        throw Error(Errc::kDegenerateColumn, "column " + std::to_string(j + 1) + " has zero variance");
      }
    }
  }
  return coordinate_descent(data.o, data.y, lambda, alpha, alpha == 1.0 ? Method::kLasso : Method::kElastic);
}

FusionWeights fit_lasso(const TuningOutputs& data, double lambda) {
  FusionWeights w = fit_elastic(data, lambda, 1.0);
  w.method = Method::kLasso;
  return w;
}

FusionWeights fit_rf(const TuningOutputs& data, const ForestConfig& config, Rng& rng) {
  require_rows(data, 10);
  if (config.trees == 0 || config.features_per_split == 0) {
    throw Error(Errc::kInvalidConfig, "forest needs trees and features per split");
  }
  std::array<double, 3> importance{};
  const std::size_t m = data.size();
  for (std::size_t t = 0; t < config.trees; ++t) {
    std::vector<Eigen::Index> rows(m);
    for (auto& r : rows) r = static_cast<Eigen::Index>(rng.uniform_index(m));
    RegressionTree tree(data.o, data.y, config.max_depth, config.features_per_split, &rng, importance);
    tree.fit(std::move(rows));
  }
  return normalized(importance, Method::kRf);
}

FusionWeights fit_gb(const TuningOutputs& data, const BoostConfig& config) {
  require_rows(data, 10);
  if (config.rounds == 0) throw Error(Errc::kInvalidConfig, "boosting needs at least one round");
  if (!(config.shrinkage > 0.0)) throw Error(Errc::kInvalidConfig, "shrinkage must be positive");
  std::array<double, 3> importance{};
  const Eigen::Index m = data.o.rows();
  Eigen::VectorXd current = Eigen::VectorXd::Constant(m, data.y.mean());
  std::vector<Eigen::Index> all(static_cast<std::size_t>(m));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  for (std::size_t round = 0; round < config.rounds; ++round) {
    const Eigen::VectorXd residual = data.y - current;
    RegressionTree tree(data.o, residual, config.max_depth, 3, nullptr, importance);
    tree.fit(all);
    for (Eigen::Index r = 0; r < m; ++r) current[r] += config.shrinkage * tree.predict(r);
  }
  return normalized(importance, Method::kGb);
}

FusionWeights fit_sgd(const TuningOutputs& data, const SgdConfig& config, Rng& rng) {
  require_rows(data, 3);
  if (config.batch_size == 0 || !(config.lr > 0.0)) {
    throw Error(Errc::kInvalidConfig, "SGD needs a positive batch size and learning rate");
  }
  // A common rescaling of O and y keeps the minimizer and bounds the step size.
  const double rms = std::sqrt(data.o.squaredNorm() / static_cast<double>(data.o.size()));
  const double scale = rms > 0.0 ? 1.0 / rms : 1.0;
  const OutputMatrix o = data.o * scale;
  const Eigen::VectorXd y = data.y * scale;
  const std::size_t m = data.size();

  Eigen::Vector3d w = Eigen::Vector3d::Constant(1.0 / 3.0);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t begin = 0; begin < m; begin += config.batch_size) {
      const std::size_t end = std::min(m, begin + config.batch_size);
      Eigen::Vector3d grad = Eigen::Vector3d::Zero();
      for (std::size_t k = begin; k < end; ++k) {
        const auto r = static_cast<Eigen::Index>(order[k]);
        grad += (o.row(r).dot(w) - y[r]) * o.row(r).transpose();
      }
      w -= config.lr * (2.0 / static_cast<double>(end - begin)) * grad;
    }
    const double loss = (y - o * w).squaredNorm() / static_cast<double>(m);
    if (!std::isfinite(loss)) {
      throw Error(Errc::kNonFiniteLoss, "SGD fusion diverged at epoch " + std::to_string(epoch));
    }
  }
  return {{w[0], w[1], w[2]}, Method::kSgd};
}

FusionWeights fit_mean() { return {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, Method::kMean}; }

double select_lambda(const TuningOutputs& data, Method method, double alpha, Rng& rng) {
  require_rows(data, 3);
  const std::size_t m = data.size();
  const std::size_t k = std::min<std::size_t>(5, m);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  const double a = method == Method::kLasso ? 1.0 : alpha;

  double best_lambda = kLambdaGrid[0];
  double best_error = std::numeric_limits<double>::infinity();
  for (const double lambda : kLambdaGrid) {
    double error = 0.0;
    for (std::size_t fold = 0; fold < k; ++fold) {
      std::vector<Eigen::Index> fit_rows;
      std::vector<Eigen::Index> held_rows;
      for (std::size_t i = 0; i < m; ++i) {
        (i % k == fold ? held_rows : fit_rows).push_back(static_cast<Eigen::Index>(order[i]));
      }
      if (fit_rows.size() < 3) continue;
      TuningOutputs part;
      part.o = data.o(fit_rows, Eigen::all);
      part.y = data.y(fit_rows);
      const FusionWeights w = coordinate_descent(part.o, part.y, lambda, a, method);
      const Eigen::Vector3d wv(w.w[0], w.w[1], w.w[2]);
      for (const auto r : held_rows) {
        const double diff = data.o.row(r).dot(wv) - data.y[r];
        error += diff * diff;
      }
    }
    if (error < best_error) {
      best_error = error;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

FusionWeights fit(Method method, const TuningOutputs& data, const FusionConfig& config, Rng& rng) {
  switch (method) {
    case Method::kLasso: {
      const double lambda = config.lambda ? *config.lambda : select_lambda(data, method, 1.0, rng);
      return fit_lasso(data, lambda);
    }
    case Method::kElastic: {
      const double lambda =
          config.lambda ? *config.lambda : select_lambda(data, method, config.alpha, rng);
      FusionWeights w = fit_elastic(data, lambda, config.alpha);
      w.method = Method::kElastic;
      return w;
    }
    case Method::kRf: return fit_rf(data, config.forest, rng);
    case Method::kGb: return fit_gb(data, config.boost);
    case Method::kSgd: return fit_sgd(data, config.sgd, rng);
    case Method::kMean: return fit_mean();
  }
  throw Error(Errc::kInvalidConfig, "unknown fusion method");
}

}  // namespace mmfdl::fusion
