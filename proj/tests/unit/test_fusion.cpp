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

#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "mmfdl/error.hpp"
#include "mmfdl/fusion.hpp"
#include "mmfdl/molgraph.hpp"
#include "mmfdl/rng.hpp"

using namespace mmfdl;
using namespace mmfdl::fusion;

namespace {

TuningOutputs gaussian_design(std::size_t m, Rng& rng) {
  TuningOutputs d;
  d.o.resize(static_cast<Eigen::Index>(m), 3);
  d.y.resize(static_cast<Eigen::Index>(m));
  for (Eigen::Index r = 0; r < d.o.rows(); ++r)
    for (int c = 0; c < 3; ++c) d.o(r, c) = rng.normal();
  return d;
}

void plant(TuningOutputs& d, const Eigen::Vector3d& w, double noise_sd, Rng& rng) {
  d.y = d.o * w;
  for (Eigen::Index r = 0; r < d.y.size(); ++r) d.y[r] += noise_sd * rng.normal();
}

Eigen::Vector3d normal_equations(const TuningOutputs& d) {
  return (d.o.transpose() * d.o).ldlt().solve(d.o.transpose() * d.y);
}

Eigen::Vector3d vec(const FusionWeights& w) { return {w.w[0], w.w[1], w.w[2]}; }

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an mmfdl::Error");
  return Errc::kIo;
}

}  // namespace

TEST_CASE("lasso on orthonormal columns recovers planted weights") {
  Rng rng(1);
  TuningOutputs d = gaussian_design(60, rng);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(d.o);
  d.o = Eigen::MatrixXd(qr.householderQ()).leftCols(3);
  plant(d, {0.5, 0.3, 0.2}, 0.0, rng);
  const FusionWeights w = fit_lasso(d, 0.0);
  CHECK(w.method == Method::kLasso);
  CHECK((vec(w) - Eigen::Vector3d(0.5, 0.3, 0.2)).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(fused_predict({1.0, 0.0, 0.0}, w) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("lasso selects the single informative column") {
  Rng rng(2);
  TuningOutputs d = gaussian_design(200, rng);
  d.y = d.o.col(0);
  const FusionWeights w = fit_lasso(d, 1e-3);
  CHECK(w.w[0] == doctest::Approx(1.0).epsilon(0.01));
  CHECK(std::abs(w.w[1]) < 0.05);
  CHECK(std::abs(w.w[2]) < 0.05);
}

TEST_CASE("lasso shrinks to zero above the critical lambda") {
  Rng rng(3);
  TuningOutputs d = gaussian_design(50, rng);
  plant(d, {0.5, 0.3, 0.2}, 0.1, rng);
  const double critical = (d.o.transpose() * d.y).cwiseAbs().maxCoeff() / 50.0;
  const FusionWeights w = fit_lasso(d, critical);
  CHECK(w.w == std::array<double, 3>{0.0, 0.0, 0.0});
}

TEST_CASE("elastic net reductions") {
  Rng rng(4);
  TuningOutputs d = gaussian_design(80, rng);
  d.o.col(1) += 0.8 * d.o.col(0);
  plant(d, {0.5, 0.3, 0.2}, 0.1, rng);
  for (const double lambda : {0.0, 1e-3, 1e-2, 0.1, 0.5}) {
    const auto a = vec(fit_elastic(d, lambda, 1.0));
    const auto b = vec(fit_lasso(d, lambda));
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-10);
  }
  const Eigen::Vector3d ols = normal_equations(d);
  CHECK((vec(fit_elastic(d, 0.0, 0.5)) - ols).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((vec(fit_lasso(d, 0.0)) - ols).cwiseAbs().maxCoeff() < 1e-6);

  TuningOutputs twins = d;
  twins.o.col(2) = twins.o.col(1);
  const FusionWeights ridge = fit_elastic(twins, 0.1, 0.0);
  CHECK(std::abs(ridge.w[1] - ridge.w[2]) < 1e-8);
}

TEST_CASE("coordinate descent argument checks") {
  Rng rng(5);
  TuningOutputs d = gaussian_design(20, rng);
  plant(d, {1, 1, 1}, 0.0, rng);
  TuningOutputs flat = d;
  flat.o.col(2).setConstant(2.0);
  CHECK(code_of([&] { fit_lasso(flat, 0.0); }) == Errc::kDegenerateColumn);
  CHECK_NOTHROW(fit_lasso(flat, 0.01));
  CHECK(code_of([&] { fit_elastic(d, -1.0, 0.5); }) == Errc::kInvalidConfig);
  CHECK(code_of([&] { fit_elastic(d, 0.1, 1.5); }) == Errc::kInvalidConfig);
  TuningOutputs tiny = gaussian_design(2, rng);
  CHECK(code_of([&] { fit_lasso(tiny, 0.1); }) == Errc::kTooFewSamples);
}

TEST_CASE("random forest importances") {
  Rng rng(6);
  TuningOutputs d = gaussian_design(200, rng);
  d.y = d.o.col(0).array().sin() * 2.0 + d.o.col(0).array();
  Rng forest_rng(1);
  const FusionWeights w = fit_rf(d, ForestConfig{}, forest_rng);
  CHECK(w.w[0] > 0.8);
  CHECK(std::abs(w.w[0] + w.w[1] + w.w[2] - 1.0) <= 1e-12);
  for (double v : w.w) CHECK(v >= 0.0);

  TuningOutputs same = d;
  same.o.col(1) = same.o.col(0);
  same.o.col(2) = same.o.col(0);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng r(seed);
    mean += vec(fit_rf(same, ForestConfig{}, r)) / 20.0;
  }
  for (int j = 0; j < 3; ++j) CHECK(std::abs(mean[j] - 0.34) <= 0.15);

  TuningOutputs nine = gaussian_design(9, rng);
  CHECK(code_of([&] { fit_rf(nine, ForestConfig{}, rng); }) == Errc::kTooFewSamples);

  Rng a(9);
  Rng b(9);
  CHECK(fit_rf(d, ForestConfig{}, a).w == fit_rf(d, ForestConfig{}, b).w);
}

TEST_CASE("gradient boosting importances") {
  Rng rng(7);
  TuningOutputs d = gaussian_design(200, rng);
  d.y = d.o.col(0).array().square() + d.o.col(0).array();
  const FusionWeights w = fit_gb(d, BoostConfig{});
  CHECK(w.w[0] > 0.8);
  CHECK(std::abs(w.w[0] + w.w[1] + w.w[2] - 1.0) <= 1e-12);
  for (double v : w.w) CHECK(v >= 0.0);
  BoostConfig none;
  none.rounds = 0;
  CHECK(code_of([&] { fit_gb(d, none); }) == Errc::kInvalidConfig);

  TuningOutputs constant = d;
  constant.y.setConstant(3.0);
  CHECK(fit_gb(constant, BoostConfig{}).w == fit_mean().w);
}

TEST_CASE("sgd recovers planted weights") {
  Rng rng(8);
  TuningOutputs d = gaussian_design(200, rng);
  plant(d, {0.5, 0.3, 0.2}, 0.1, rng);
  Rng a(3);
  const FusionWeights w = fit_sgd(d, SgdConfig{}, a);
  CHECK((vec(w) - Eigen::Vector3d(0.5, 0.3, 0.2)).cwiseAbs().maxCoeff() < 0.05);
  Rng b(3);
  CHECK(fit_sgd(d, SgdConfig{}, b).w == w.w);

  TuningOutputs clean = gaussian_design(100, rng);
  clean.o *= 4.0;
  clean.o.array() += 2.0;
  plant(clean, {0.5, 0.3, 0.2}, 0.0, rng);
  Rng c(4);
  const Eigen::Vector3d ols = normal_equations(clean);
  CHECK((vec(fit_sgd(clean, SgdConfig{}, c)) - ols).cwiseAbs().maxCoeff() < 1e-3);
  CHECK((vec(fit_lasso(clean, 0.0)) - ols).cwiseAbs().maxCoeff() < 1e-3);
  CHECK((vec(fit_elastic(clean, 0.0, 0.5)) - ols).cwiseAbs().maxCoeff() < 1e-3);

  TuningOutputs dup = gaussian_design(100, rng);
  dup.o.col(1) = dup.o.col(0);
  dup.o.col(2) = dup.o.col(0);
  dup.y = 0.9 * dup.o.col(0);
  Rng e(5);
  const FusionWeights wd = fit_sgd(dup, SgdConfig{}, e);
  const double var_y = (dup.y.array() - dup.y.mean()).square().mean();
  const double loss = (dup.y - fused_predict(dup, wd)).squaredNorm() / 100.0;
  CHECK(loss < 1e-6 * var_y);
}

TEST_CASE("fused prediction") {
  const FusionWeights first{{1.0, 0.0, 0.0}, Method::kLasso};
  CHECK(fused_predict({7.0, 8.0, 9.0}, first) == 7.0);
  CHECK(fused_predict({3.0, 6.0, 9.0}, fit_mean()) == doctest::Approx(6.0).epsilon(1e-15));
  const FusionWeights w{{0.2, -0.7, 1.3}, Method::kSgd};
  const std::array<double, 3> row = {1.5, -2.0, 0.25};
  const std::array<double, 3> scaled = {3 * 1.5, 3 * -2.0, 3 * 0.25};
  CHECK(fused_predict(scaled, w) == doctest::Approx(3.0 * fused_predict(row, w)).epsilon(1e-15));
}

TEST_CASE("method names and automatic lambda") {
  for (const Method m : kAllMethods) CHECK(parse_method(method_name(m)) == m);
  CHECK(code_of([] { parse_method("ridge"); }) == Errc::kInvalidConfig);

  Rng rng(10);
  TuningOutputs d = gaussian_design(100, rng);
  plant(d, {0.5, 0.3, 0.2}, 0.2, rng);
  Rng pick(2);
  const double lambda = select_lambda(d, Method::kLasso, 1.0, pick);
  CHECK(std::find(kLambdaGrid.begin(), kLambdaGrid.end(), lambda) != kLambdaGrid.end());
  FusionConfig cfg;
  cfg.lambda.reset();
  Rng fit_rng(2);
  CHECK(fit(Method::kLasso, d, cfg, fit_rng).w == fit_lasso(d, lambda).w);
  CHECK(fit(Method::kElastic, d, cfg, fit_rng).method == Method::kElastic);
}

TEST_CASE("collect_outputs matches each head") {
  Rng rng(11);
  encoders::TransformerConfig tc;
  tc.vocab_size = 4;
  tc.max_len = 5;
  tc.d = 8;
  tc.heads = 2;
  tc.fc = 4;
  encoders::BiGruConfig bc;
  bc.hidden = 4;
  bc.heads = 2;
  bc.fc = 4;
  encoders::GcnConfig gc;
  gc.widths = {5, 5};
  gc.fc = 4;
  encoders::TransformerHead tf(tc, rng);
  encoders::BiGruHead gru(bc, rng);
  encoders::GcnHead gcn(gc, rng);

  ModalInputs in;
  in.seqs.push_back({{1, 2, 3, 0, 0}, 3});
  in.chunks.push_back(encoders::Tensor({4, 16}, 1.0));
  in.graphs.push_back(encoders::graph_input(molgraph::parse_molecule("CCN")));
  in.y.push_back(2.0);
  const Heads heads{&tf, &gru, &gcn};
  const TestOutputs out = collect_outputs<TestTag>(heads, in);
  CHECK(out.o.rows() == 1);
  CHECK(out.o(0, 0) == encoders::predict(tf, in.seqs[0]));
  CHECK(out.o(0, 1) == encoders::predict(gru, in.chunks[0]));
  CHECK(out.o(0, 2) == encoders::predict(gcn, in.graphs[0]));
  CHECK(collect_outputs<TestTag>(heads, in).o == out.o);
  static_assert(!std::is_convertible_v<TestOutputs, TuningOutputs>);
}
