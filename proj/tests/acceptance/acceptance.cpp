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

// Prints one PASS/FAIL/SKIP line per acceptance criterion and exits nonzero
// if any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "mmfdl/bench.hpp"
#include "mmfdl/chemlex.hpp"
#include "mmfdl/config.hpp"
#include "mmfdl/ecfp.hpp"
#include "mmfdl/encoders.hpp"
#include "mmfdl/fusion.hpp"
#include "mmfdl/molgraph.hpp"
#include "mmfdl/optim.hpp"
#include "mmfdl/pipeline.hpp"
#include "mmfdl/rng.hpp"

using namespace mmfdl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  enum Status { kPass, kFail, kSkip } status;
  std::string detail;
};

Outcome pass(std::string detail) { return {Outcome::kPass, std::move(detail)}; }
Outcome fail(std::string detail) { return {Outcome::kFail, std::move(detail)}; }

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mmfdl_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// ---- 1 ----------------------------------------------------------------------

Outcome tokenizer_exactness() {
  const std::vector<std::string> expected = {"C", "S", "(", "=", "O", ")", "(", "=", "O", ")", "Cl"};
  const auto got = chemlex::tokenize("CS(=O)(=O)Cl").tokens;
  std::string joined;
  for (const auto& t : got) joined += (joined.empty() ? "" : " ") + t;
  if (got != expected) return fail("got [" + joined + "]");
  return pass("[" + joined + "]");
}

// ---- 2 ----------------------------------------------------------------------

template <typename Head>
double head_gradient_error(Head& head, const typename Head::Input& input, double target) {
  Rng rng(97);
  const auto params = head.parameters();
  return nn::gradient_check(
      [&](nn::Tape& tape) {
        return nn::mse(head.forward(tape, input).prediction, nn::Tensor::scalar(target));
      },
      params, rng, 200);
}

Outcome gradient_fidelity() {
  Rng rng(2024);
  // Every layer at its default depth, width 16: at width 128 many gradient
  // components fall below the ~1e-11 roundoff floor of the difference quotient.
  encoders::TransformerConfig tc;
  tc.vocab_size = 34;
  tc.max_len = 4;
  tc.d = 16;
  tc.fc = 16;
  tc.dropout = 0.0;
  encoders::TransformerHead tf(tc, rng);
  chemlex::EncodedSeq seq{{5, 12, 3, 30}, 4};
  const double e_tf = head_gradient_error(tf, seq, 0.8);

  encoders::BiGruConfig gc;
  gc.hidden = 16;
  gc.fc = 16;
  gc.dropout = 0.0;
  encoders::BiGruHead gru(gc, rng);
  nn::Tensor chunks({4, gc.chunk_bits});
  for (std::size_t i = 0; i < chunks.size(); ++i) chunks[i] = rng.bernoulli(0.3) ? 1.0 : 0.0;
  const double e_gru = head_gradient_error(gru, chunks, -0.5);

  encoders::GcnConfig nc;
  nc.widths = {16, 32};
  nc.fc = 16;
  nc.dropout = 0.0;
  encoders::GcnHead gcn(nc, rng);
  const double e_gcn = head_gradient_error(gcn, encoders::graph_input(molgraph::parse_molecule("CCO")), 1.2);

  const double worst = std::max({e_tf, e_gru, e_gcn});
  const std::string detail = "max rel err transformer " + fmt(e_tf, 3) + ", bigru " + fmt(e_gru, 3) + ", gcn " +
                             fmt(e_gcn, 3) + " (limit 1e-4)";
  return worst < 1e-4 ? pass(detail) : fail(detail);
}

// ---- 3 ----------------------------------------------------------------------

Outcome fusion_oracle() {
  Rng rng(31);
  fusion::TuningOutputs data;
  const Eigen::Index m = 200;
  data.o.resize(m, 3);
  data.y.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) data.o(i, j) = rng.normal();
    data.y(i) = 0.5 * data.o(i, 0) + 0.3 * data.o(i, 1) + 0.2 * data.o(i, 2) + 0.1 * rng.normal();
  }
  const std::array<double, 3> planted = {0.5, 0.3, 0.2};
  Rng sgd_rng(32);
  const auto sgd = fusion::fit_sgd(data, fusion::SgdConfig{}, sgd_rng);
  const auto lasso = fusion::fit_lasso(data, 1e-3);
  const auto elastic = fusion::fit_elastic(data, 1e-3, 1.0);
  double sgd_err = 0.0, lasso_err = 0.0, gap = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    sgd_err = std::max(sgd_err, std::abs(sgd.w[k] - planted[k]));
    lasso_err = std::max(lasso_err, std::abs(lasso.w[k] - planted[k]));
    gap = std::max(gap, std::abs(elastic.w[k] - lasso.w[k]));
  }
  const std::string detail = "sgd (" + fmt(sgd.w[0]) + ", " + fmt(sgd.w[1]) + ", " + fmt(sgd.w[2]) +
                             ") max dev " + fmt(sgd_err, 3) + "; lasso (" + fmt(lasso.w[0]) + ", " +
                             fmt(lasso.w[1]) + ", " + fmt(lasso.w[2]) + ") max dev " + fmt(lasso_err, 3) +
                             "; elastic(alpha=1) vs lasso " + fmt(gap, 3);
  return sgd_err <= 0.05 && lasso_err <= 0.05 && gap <= 1e-10 ? pass(detail) : fail(detail);
}

// ---- 4 ----------------------------------------------------------------------

std::string delaney_path() {
  if (const char* env = std::getenv("MMFDL_DELANEY_CSV"); env && *env) return env;
  const fs::path local = fs::path(MMFDL_DATA_DIR) / "delaney.csv";
  return fs::exists(local) ? local.string() : std::string();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome delaney_end_to_end() {
  const std::string path = delaney_path();
  if (path.empty()) {
    return {Outcome::kSkip,
            "no Delaney CSV (set MMFDL_DELANEY_CSV or place data/delaney.csv; see scripts/fetch_datasets.py)"};
  }
  config::ExperimentConfig c;
  c.data.path = path;
  c.data.name = "delaney";
  c.data.smiles_col = "smiles";
  c.data.target_col = "measured log solubility in mols per litre";
  c.data.id_col = "Compound ID";
  c.protocol.repeats = 3;
  c.protocol.noise_ratios = {0.0};
  c.output.outdir = scratch("delaney").string();
  c.output.plots = false;
  c.output.save_checkpoints = false;
  c.output.workers = 1;
  const auto prepared = pipeline::prepare(c);
  const auto jobs = pipeline::repeat_jobs(prepared.data, c);
  const auto run = pipeline::run_jobs(prepared.data, c, jobs, pipeline::Stage::kFull, c.protocol.noise_ratios, 1);
  if (!run.failures.empty()) return fail("seed " + std::to_string(run.failures[0].seed) + " failed: " + run.failures[0].message);
  std::map<std::string, std::vector<double>> pearson;
  for (const auto& s : run.seeds) {
    for (const auto& r : s.metrics) pearson[r.method].push_back(r.metrics.pearson);
  }
  const auto& sgd = pearson["tri_sgd"];
  const double worst_sgd = *std::min_element(sgd.begin(), sgd.end());
  double best_mono = -1.0;
  for (const auto name : pipeline::kModalNames) best_mono = std::max(best_mono, median(pearson[std::string(name)]));
  const double med_sgd = median(sgd);
  const std::string detail = std::to_string(prepared.data.size()) + " molecules; Tri_SGD Pearson min " +
                             fmt(worst_sgd) + ", median " + fmt(med_sgd) + "; best mono median " + fmt(best_mono);
  const bool ok = worst_sgd >= 0.85 && med_sgd >= best_mono - 0.02;
  return ok ? pass(detail) : fail(detail);
}

// ---- 5 ----------------------------------------------------------------------

config::ExperimentConfig sampl_desk_config(const std::string& outdir) {
  config::ExperimentConfig c;
  c.data.path = MMFDL_DATA_DIR "/sampl.csv";
  c.data.name = "sampl";
  c.data.smiles_col = "smiles";
  c.data.target_col = "expt";
  c.data.id_col = "iupac";
  c.transformer.d = 32;
  c.transformer.heads = 4;
  c.transformer.layers = 1;
  c.transformer.fc = 32;
  c.bigru.chunk_bits = 64;
  c.bigru.hidden = 32;
  c.bigru.layers = 1;
  c.bigru.heads = 4;
  c.bigru.fc = 32;
  c.gcn.widths = {64, 64};
  c.gcn.fc = 32;
  c.train.head.epochs = 60;
  c.train.head.patience = 10;
  c.train.head.lr = 3e-3;
  c.output.outdir = outdir;
  c.output.plots = false;
  c.output.save_checkpoints = false;
  c.output.workers = 1;
  return c;
}

Outcome noise_trend() {
  config::ExperimentConfig c = sampl_desk_config(scratch("noise").string());
  c.protocol.repeats = 10;
  const auto prepared = pipeline::prepare(c);
  const auto jobs = pipeline::repeat_jobs(prepared.data, c);
  const auto run =
      pipeline::run_jobs(prepared.data, c, jobs, pipeline::Stage::kFull, c.protocol.noise_ratios, c.output.workers);
  if (!run.failures.empty()) return fail("seed " + std::to_string(run.failures[0].seed) + " failed: " + run.failures[0].message);

  const auto& ratios = c.protocol.noise_ratios;
  std::map<std::string, std::map<double, double>> pearson, rmse;
  for (const auto& row : run.summary) {
    if (row.metric == "pearson") pearson[row.method][row.noise_ratio] = row.summary.mean;
    if (row.metric == "rmse") rmse[row.method][row.noise_ratio] = row.summary.mean;
  }
  std::string problems;
  for (const auto& [method, curve] : pearson) {
    int inversions = 0;
    double worst = 0.0;
    for (std::size_t k = 1; k < ratios.size(); ++k) {
      const double rise = curve.at(ratios[k]) - curve.at(ratios[k - 1]);
      if (rise > 0.0) {
        ++inversions;
        worst = std::max(worst, rise);
      }
    }
    if (inversions > 1 || worst > 0.01) problems += " " + method + " Pearson rises by " + fmt(worst, 3) + ";";
  }
  for (const double r : ratios) {
    double worst_mono = 0.0;
    for (const auto name : pipeline::kModalNames) worst_mono = std::max(worst_mono, rmse[std::string(name)][r]);
    if (rmse["tri_sgd"][r] > worst_mono) {
      problems += " Tri_SGD RMSE " + fmt(rmse["tri_sgd"][r]) + " > worst mono " + fmt(worst_mono) + " at " + fmt(r) + ";";
    }
  }
  std::string detail = "SAMPL, " + std::to_string(run.seeds.size()) + " seeds, mean Pearson";
  for (const char* m : {"transformer", "bigru", "gcn", "tri_sgd"}) {
    detail += std::string(" ") + m + " [";
    for (std::size_t k = 0; k < ratios.size(); ++k) detail += (k ? " " : "") + fmt(pearson[m][ratios[k]], 3);
    detail += "]";
  }
  return problems.empty() ? pass(detail) : fail(detail + ";" + problems);
}

// ---- 6 ----------------------------------------------------------------------

Outcome fingerprint_properties() {
  const std::vector<std::pair<const char*, const char*>> panel = {
      {"CCO", "OCC"},
      {"CC(=O)O", "OC(C)=O"},
      {"c1ccccc1O", "Oc1ccccc1"},
      {"CC(C)C", "C(C)(C)C"},
      {"CCN(CC)CC", "N(CC)(CC)CC"},
      {"c1ccncc1", "n1ccccc1"},
      {"CC(=O)Nc1ccc(O)cc1", "Oc1ccc(NC(C)=O)cc1"},
      {"OC(=O)c1ccccc1OC(C)=O", "CC(=O)Oc1ccccc1C(O)=O"},
      {"CC1CCCC1", "C1CCC(C)C1"},
      {"ClC(Cl)Cl", "C(Cl)(Cl)Cl"},
      {"CC#N", "N#CC"},
      {"C=CC=C", "C(=C)C=C"},
      {"c1ccc2ccccc2c1", "c1cc2ccccc2cc1"},
      {"CS(=O)(=O)C", "O=S(=O)(C)C"},
      {"[NH4+].[Cl-]", "[Cl-].[NH4+]"},
      {"c1ccoc1", "o1cccc1"},
      {"c1cc[nH]c1", "[nH]1cccc1"},
      {"CCOC(=O)C", "O=C(OCC)C"},
      {"Brc1ccc(Cl)cc1", "Clc1ccc(Br)cc1"},
      {"OCC(O)CO", "C(O)C(O)CO"},
  };
  std::string problems;
  for (const auto& [a, b] : panel) {
    const auto fa = ecfp::ecfp(molgraph::parse_molecule(a));
    const auto fb = ecfp::ecfp(molgraph::parse_molecule(b));
    if (!(fa == fb)) problems += std::string(" ") + a + " vs " + b + " differ;";
    if (fa.set_count() > 0 && ecfp::tanimoto(fa, fa) != 1.0) problems += std::string(" self-similarity of ") + a + ";";
  }
  const double t = ecfp::tanimoto(ecfp::Fingerprint::from_bits(1024, {1, 2, 3}),
                                  ecfp::Fingerprint::from_bits(1024, {2, 3, 4}));
  if (t != 0.5) problems += " {1,2,3}/{2,3,4} gave " + fmt(t, 17) + ";";
  const std::string detail = std::to_string(panel.size()) + " molecules, alternative spellings bit-identical, "
                             "self-similarity 1, {1,2,3}/{2,3,4} = " + fmt(t);
  return problems.empty() ? pass(detail) : fail(problems);
}

// ---- 7 ----------------------------------------------------------------------

Outcome split_protocol() {
  const auto plan = bench::make_split(1128, 0);
  if (plan.train.size() != 813 || plan.tuning.size() != 203 || plan.test.size() != 112) {
    return fail("sizes " + std::to_string(plan.train.size()) + "/" + std::to_string(plan.tuning.size()) + "/" +
                std::to_string(plan.test.size()));
  }
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto p = bench::make_split(1128, 1000 + seed);
    std::vector<int> seen(1128, 0);
    for (const auto* part : {&p.train, &p.tuning, &p.test})
      for (const auto i : *part) ++seen[i];
    if (!std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; })) {
      return fail("partition broken for seed " + std::to_string(1000 + seed));
    }
    if (p.train.size() != 813 || p.tuning.size() != 203 || p.test.size() != 112) {
      return fail("sizes differ for seed " + std::to_string(1000 + seed));
    }
  }
  return pass("train/tuning/test = 813/203/112; partition holds for 100 seeds");
}

// ---- 8 ----------------------------------------------------------------------

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome repeat_determinism() {
  const fs::path dir = scratch("determinism");
  config::ExperimentConfig c = sampl_desk_config((dir / "out").string());
  c.train.head.epochs = 8;
  c.protocol.repeats = 3;
  c.protocol.seed = 7;
  c.output.save_checkpoints = true;
  c.output.workers = 0;
  std::ofstream(dir / "config.json") << config::to_json(c);
  std::vector<std::string> files;
  for (const char* run : {"first", "second"}) {
    const std::string cmd = std::string("\"") + MMFDL_CLI_PATH + "\" repeat --config \"" +
                            (dir / "config.json").string() + "\" --run-id " + run + " --deterministic --quiet > /dev/null";
    const int status = std::system(cmd.c_str());
    if (status != 0) return fail(std::string("mmfdl repeat exited with status ") + std::to_string(status));
    files.push_back(slurp(dir / "out" / "sampl" / run / "metrics.csv"));
  }
  if (files[0].empty()) return fail("metrics.csv is empty");
  if (files[0] != files[1]) return fail("metrics.csv differs between runs");
  const auto rows = std::count(files[0].begin(), files[0].end(), '\n') - 1;
  return pass("two `mmfdl repeat --deterministic` runs: metrics.csv byte-identical (" + std::to_string(rows) +
              " rows, " + std::to_string(files[0].size()) + " bytes)");
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 tokenizer exactness", tokenizer_exactness},
      {"2 gradient fidelity", gradient_fidelity},
      {"3 fusion oracle recovery", fusion_oracle},
      {"4 Delaney end-to-end", delaney_end_to_end},
      {"5 noise-degradation trend", noise_trend},
      {"6 fingerprint properties", fingerprint_properties},
      {"7 split protocol", split_protocol},
      {"8 repeat determinism", repeat_determinism},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = fail(std::string("threw: ") + e.what());
    }
    static constexpr const char* kLabels[] = {"PASS", "FAIL", "SKIP"};
    std::cout << "[" << kLabels[outcome.status] << "] " << name << ": " << outcome.detail << std::endl;
    if (outcome.status == Outcome::kFail) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
