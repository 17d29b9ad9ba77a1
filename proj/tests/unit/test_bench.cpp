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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "mmfdl/bench.hpp"
#include "mmfdl/error.hpp"
#include "mmfdl/molgraph.hpp"
#include "mmfdl/rng.hpp"

using namespace mmfdl;
using namespace mmfdl::bench;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << body;
  return path;
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an mmfdl::Error");
  return Errc::kIo;
}

void check_partition(const SplitPlan& plan, std::size_t n) {
  std::vector<int> seen(n, 0);
  for (const auto* part : {&plan.train, &plan.tuning, &plan.test})
    for (const std::size_t i : *part) ++seen[i];
  CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
}

}  // namespace

TEST_CASE("load_csv happy path and drop rule") {
  const auto three = write_temp("mmfdl_three.csv", "smiles,y\nCCO,1.5\nc1ccccc1,-2\n\"CC(=O)O\",3e-1\n");
  const Dataset a = load_csv(three, "smiles", "y");
  CHECK(a.size() == 3);
  CHECK(a.dropped == 0);
  CHECK(a.records[2].smiles == "CC(=O)O");
  CHECK(a.records[2].target == 0.3);
  CHECK(a.records[1].id == "1");
  CHECK(a.name == "mmfdl_three");

  std::string body = "smiles,y\n";
  for (int i = 0; i < 9; ++i) body += std::string(i + 1, 'C') + "," + std::to_string(i) + "\n";
  body += "not-a-smiles,1.0\n";
  const Dataset b = load_csv(write_temp("mmfdl_ten.csv", body), "smiles", "y");
  CHECK(b.size() == 9);
  CHECK(b.dropped == 1);

  const auto messy = write_temp("mmfdl_messy.csv",
                                "id,smiles,y\na,CC,1\nb,CC,nan\nc,CC,\na,CCC,2\nd,C(C,1\ne,F/C=C\\F,4\n");
  const Dataset c = load_csv(messy, "smiles", "y", "id");
  CHECK(c.size() == 2);
  CHECK(c.dropped == 4);
  CHECK(c.records[1].smiles == "F/C=C\\F");

  CHECK(code_of([&] { load_csv(three, "smiles", "logS"); }) == Errc::kMissingColumn);
  const auto empty = write_temp("mmfdl_empty.csv", "smiles,y\nq,1\n");
  CHECK(code_of([&] { load_csv(empty, "smiles", "y"); }) == Errc::kEmptyDataset);
}

TEST_CASE("SAMPL loads with quoted names") {
  const Dataset ds = load_csv(MMFDL_DATA_DIR "/sampl.csv", "smiles", "expt", "iupac", "sampl");
  CHECK(ds.size() == 642);
  CHECK(ds.dropped == 0);
  CHECK(ds.records[0].id == "4-methoxy-N,N-dimethyl-benzamide");
  CHECK(ds.records[0].target == -11.01);
}

TEST_CASE("split sizes") {
  const SplitPlan big = make_split(1128, 0);
  CHECK(big.train.size() == 813);
  CHECK(big.tuning.size() == 203);
  CHECK(big.test.size() == 112);
  const SplitPlan small = make_split(10, 3);
  CHECK(small.train.size() == 8);
  CHECK(small.tuning.size() == 1);
  CHECK(small.test.size() == 1);
  const SplitPlan again = make_split(1128, 0);
  CHECK(again.train == big.train);
  CHECK(again.test == big.test);
  CHECK(make_split(1128, 1).test != big.test);
  for (std::uint64_t seed = 0; seed < 100; ++seed) check_partition(make_split(1128, seed), 1128);
  CHECK(code_of([] { make_split(9, 0); }) == Errc::kTooSmall);
}

TEST_CASE("fixed test split") {
  const std::vector<std::size_t> test = {0, 5, 7};
  const SplitPlan plan = make_fixed_split(20, test, 1);
  CHECK(plan.test == test);
  CHECK(plan.tuning.size() == 3);
  check_partition(plan, 20);
  const std::vector<std::size_t> bad = {3, 3};
  CHECK(code_of([&] { make_fixed_split(20, bad, 1); }) == Errc::kInvalidConfig);
}

TEST_CASE("k-fold plans") {
  const auto plans = make_kfold(10, 5, 4);
  REQUIRE(plans.size() == 5);
  std::vector<int> covered(10, 0);
  for (const auto& plan : plans) {
    CHECK(plan.test.size() == 2);
    check_partition(plan, 10);
    for (const std::size_t i : plan.test) ++covered[i];
  }
  CHECK(std::all_of(covered.begin(), covered.end(), [](int c) { return c == 1; }));
  CHECK(make_kfold(10, 5, 4)[2].test == plans[2].test);
  CHECK(code_of([] { make_kfold(3, 5, 0); }) == Errc::kTooSmall);
}

TEST_CASE("noise injection") {
  Rng rng(1);
  chemlex::EncodedSeq seq{{3, 1, 2, 4, 0, 0}, 4};
  CHECK(add_noise(seq, 4, 0.0, rng) == seq);
  const auto all = add_noise(seq, 4, 1.0, rng);
  CHECK(all.ids[4] == 0);
  CHECK(all.ids[5] == 0);
  for (std::size_t i = 0; i < 4; ++i) CHECK((all.ids[i] >= 1 && all.ids[i] <= 4));

  const auto fp = ecfp::ecfp(molgraph::parse_molecule("CC(=O)Nc1ccc(O)cc1"));
  CHECK(add_noise(fp, 0.0, rng) == fp);
  double tanimoto_sum = 0.0;
  double density = 0.0;
  for (int s = 0; s < 20; ++s) {
    const auto noisy = add_noise(fp, 1.0, rng);
    tanimoto_sum += ecfp::tanimoto(fp, noisy) / 20.0;
    density += static_cast<double>(noisy.set_count()) / (20.0 * 1024.0);
  }
  CHECK(tanimoto_sum < 1.0);
  CHECK(std::abs(density - 0.5) < 0.02);

  std::vector<double> counts;
  for (std::uint64_t s = 0; s < 100; ++s) {
    Rng r(s);
    const auto mask = noise_mask(1000, 0.1, r);
    const double c = static_cast<double>(std::count(mask.begin(), mask.end(), true));
    CHECK(std::abs(c - 100.0) <= 30.0);
    counts.push_back(c);
  }
  const double mean = std::accumulate(counts.begin(), counts.end(), 0.0) / 100.0;
  CHECK(std::abs(mean - 100.0) <= 3.0 * std::sqrt(1000 * 0.1 * 0.9 / 100.0));

  // Redrawn bits differ from the original half of the time: E[hamming] = n r / 2.
  const encoders::Tensor zeros({1000, 1});
  for (const double ratio : {0.05, 0.1, 0.2, 0.5}) {
    double total = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s) {
      Rng r(1000 + s);
      const auto noisy = add_noise(zeros, ratio, r);
      for (std::size_t i = 0; i < noisy.size(); ++i) total += noisy[i];
    }
    const double p = ratio / 2.0;
    const double expected = 100.0 * 1000.0 * p;
    CHECK(std::abs(total - expected) <= 3.0 * std::sqrt(100.0 * 1000.0 * p * (1 - p)));
  }

  const auto graph = encoders::graph_input(molgraph::parse_molecule("CCO"));
  const auto noisy_graph = add_noise(graph, 0.5, rng);
  CHECK(noisy_graph.a == graph.a);
  CHECK(noisy_graph.x != graph.x);
  CHECK(code_of([&] { noise_mask(3, 1.5, rng); }) == Errc::kInvalidConfig);
}

TEST_CASE("metric examples") {
  const std::vector<double> y = {1, 2, 3};
  const Metrics same = compute_metrics(y, y);
  CHECK(same.rmse == 0.0);
  CHECK(same.mae == 0.0);
  CHECK(same.pearson == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(same.cosine == doctest::Approx(1.0).epsilon(1e-15));

  const std::vector<double> z = {0, 0};
  const std::vector<double> o = {1, 1};
  CHECK(rmse(z, o) == 1.0);
  CHECK(mae(z, o) == 1.0);

  const std::vector<double> twice = {2, 4, 6};
  CHECK(pearson(y, twice) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rmse(y, twice) == doctest::Approx(std::sqrt(14.0 / 3.0)).epsilon(1e-15));

  Rng rng(2);
  std::vector<double> a(50);
  std::vector<double> up(50);
  std::vector<double> down(50);
  for (std::size_t i = 0; i < 50; ++i) {
    a[i] = rng.normal();
    up[i] = 2.5 * a[i] + 1.0;
    down[i] = -0.5 * a[i] + 3.0;
  }
  CHECK(pearson(a, up) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pearson(a, down) == doctest::Approx(-1.0).epsilon(1e-12));

  const std::vector<double> flat = {2, 2, 2};
  CHECK(code_of([&] { pearson(y, flat); }) == Errc::kZeroVariance);
  const std::vector<double> zero3 = {0, 0, 0};
  CHECK(code_of([&] { cosine(y, zero3); }) == Errc::kZeroVector);
  CHECK(code_of([&] { rmse(y, o); }) == Errc::kLengthMismatch);
}

TEST_CASE("summaries") {
  const std::vector<double> one = {0.7};
  const Summary s = summarize(one);
  CHECK(s.min == 0.7);
  CHECK(s.max == 0.7);
  CHECK(s.median == 0.7);
  CHECK(s.mean == 0.7);
  CHECK(s.stddev == 0.0);
  const std::vector<double> many = {4, 1, 3, 2};
  const Summary m = summarize(many);
  CHECK(m.median == 2.5);
  CHECK(m.median >= m.min);
  CHECK(m.median <= m.max);
  CHECK(m.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
}

TEST_CASE("nearest neighbour diagnostics") {
  std::vector<ecfp::Fingerprint> train;
  for (const char* s : {"CCO", "CCN", "c1ccccc1", "CC(=O)O", "CCCC", "OCCO"})
    train.push_back(ecfp::ecfp(molgraph::parse_molecule(s)));
  const auto leave_in = knn_diagnostics(train, train);
  for (const auto& row : leave_in) CHECK(row.max_similarity == 1.0);

  std::vector<ecfp::Fingerprint> test = {ecfp::ecfp(molgraph::parse_molecule("CCCO"))};
  const double full = knn_diagnostics(train, test)[0].max_similarity;
  CHECK(full <= 1.0);
  for (std::size_t drop = 0; drop < train.size(); ++drop) {
    std::vector<ecfp::Fingerprint> fewer = train;
    fewer.erase(fewer.begin() + static_cast<std::ptrdiff_t>(drop));
    CHECK(knn_diagnostics(fewer, test)[0].max_similarity <= full);
  }

  std::vector<std::vector<double>> ring;
  for (int k = 0; k < 6; ++k) ring.push_back({std::cos(k * M_PI / 3), std::sin(k * M_PI / 3)});
  const std::vector<std::vector<double>> centre = {{0.0, 0.0}};
  CHECK(knn_diagnostics(ring, centre)[0].mean_knn_distance == doctest::Approx(1.0).epsilon(1e-14));
  const std::vector<std::vector<double>> first = {ring[0]};
  CHECK(knn_diagnostics(ring, first)[0].max_similarity == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(code_of([&] { knn_diagnostics(std::span<const ecfp::Fingerprint>{}, test); }) ==
        Errc::kEmptyTrainSet);
}
