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


#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <vector>

#include "mmfdl/bench.hpp"
#include "mmfdl/chemlex.hpp"
#include "mmfdl/config.hpp"
#include "mmfdl/ecfp.hpp"
#include "mmfdl/error.hpp"
#include "mmfdl/fusion.hpp"
#include "mmfdl/molgraph.hpp"
#include "mmfdl/pipeline.hpp"
#include "mmfdl/rng.hpp"

namespace py = pybind11;
using namespace mmfdl;

namespace {

std::string_view category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kConfig: return "config";
    case ErrorCategory::kData: return "data";
    case ErrorCategory::kNumeric: return "numeric";
  }
  return "data";
}

std::vector<chemlex::TokenSeq> to_corpus(const std::vector<std::vector<std::string>>& seqs) {
  std::vector<chemlex::TokenSeq> corpus;
  corpus.reserve(seqs.size());
  for (const auto& s : seqs) corpus.push_back({s});
  return corpus;
}

py::dict split_dict(const bench::SplitPlan& plan) {
  py::dict d;
  d["seed"] = plan.seed;
  d["train"] = plan.train;
  d["tuning"] = plan.tuning;
  d["test"] = plan.test;
  return d;
}

py::dict metrics_dict(const bench::Metrics& m) {
  py::dict d;
  d["rmse"] = m.rmse;
  d["mae"] = m.mae;
  d["pearson"] = m.pearson;
  d["cosine"] = m.cosine;
  return d;
}

fusion::TuningOutputs tuning_outputs(const Eigen::MatrixXd& o, const Eigen::VectorXd& y) {
  if (o.cols() != 3 || o.rows() != y.size()) {
    throw Error(Errc::kShapeMismatch, "outputs must be m x 3 with m targets");
  }
  return {o, y};
}

}  // namespace

PYBIND11_MODULE(_mmfdl, m) {
  m.doc() = "Multimodal fused regression on SMILES, ECFP and molecular graphs";

  py::exception<Error>(m, "MmfdlError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object type = py::module_::import("mmfdl._mmfdl").attr("MmfdlError");
      const py::object instance = type(e.what());
      instance.attr("code") = std::string(errc_name(e.code()));
      instance.attr("category") = std::string(category_name(errc_category(e.code())));
      PyErr_SetObject(type.ptr(), instance.ptr());
    }
  });

  // chemlex
  m.def("tokenize", [](std::string_view smiles) { return chemlex::tokenize(smiles).tokens; },
        py::arg("smiles"));

  py::class_<chemlex::Vocabulary>(m, "Vocabulary")
      .def_static("build", [](const std::vector<std::vector<std::string>>& seqs) {
        return chemlex::Vocabulary::build(to_corpus(seqs));
      }, py::arg("token_seqs"))
      .def_static("load", &chemlex::Vocabulary::load, py::arg("path"))
      .def("save", &chemlex::Vocabulary::save, py::arg("path"))
      .def("__len__", &chemlex::Vocabulary::size)
      .def("__contains__", &chemlex::Vocabulary::contains)
      .def("__eq__", &chemlex::Vocabulary::operator==)
      .def("index_of", &chemlex::Vocabulary::index_of, py::arg("token"))
      .def("token_at", &chemlex::Vocabulary::token_at, py::arg("index"))
      .def("encode", [](const chemlex::Vocabulary& v, const std::vector<std::string>& tokens,
                        std::size_t max_len) {
        const auto e = chemlex::encode({tokens}, v, max_len);
        return py::make_tuple(e.ids, e.true_len);
      }, py::arg("tokens"), py::arg("max_len"))
      .def("decode", [](const chemlex::Vocabulary& v, const std::vector<std::int32_t>& ids) {
        chemlex::EncodedSeq e{ids, 0};
        while (e.true_len < ids.size() && ids[e.true_len] != 0) ++e.true_len;
        return chemlex::decode(e, v).tokens;
      }, py::arg("ids"));

  // molgraph and ecfp
  m.def("atom_count", [](std::string_view smiles) {
    return molgraph::parse_molecule(smiles).atom_count();
  }, py::arg("smiles"));

  py::class_<ecfp::Fingerprint>(m, "Fingerprint")
      .def_property_readonly("nbits", &ecfp::Fingerprint::nbits)
      .def_property_readonly("radius", &ecfp::Fingerprint::radius)
      .def("set_count", &ecfp::Fingerprint::set_count)
      .def("test", &ecfp::Fingerprint::test, py::arg("bit"))
      .def("to_hex", &ecfp::Fingerprint::to_hex)
      .def_static("from_hex", &ecfp::Fingerprint::from_hex, py::arg("hex"), py::arg("radius") = 2)
      .def("to_dense", [](const ecfp::Fingerprint& fp) {
        const auto bits = fp.to_dense();
        return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(bits.data(),
                                                                 static_cast<Eigen::Index>(bits.size())));
      })
      .def("__eq__", &ecfp::Fingerprint::operator==);

  m.def("ecfp", [](std::string_view smiles, int radius, std::size_t nbits) {
    return ecfp::ecfp(molgraph::parse_molecule(smiles), radius, nbits);
  }, py::arg("smiles"), py::arg("radius") = 2, py::arg("nbits") = 1024);
  m.def("tanimoto", &ecfp::tanimoto, py::arg("a"), py::arg("b"));
  m.def("hamming", &ecfp::hamming, py::arg("a"), py::arg("b"));

  // bench
  m.def("load_csv", [](const std::filesystem::path& path, const std::string& smiles_col,
                       const std::string& target_col, const std::string& id_col,
                       const std::string& name) {
    const auto ds = bench::load_csv(path, smiles_col, target_col, id_col, name);
    py::list records;
    for (const auto& r : ds.records) records.append(py::make_tuple(r.id, r.smiles, r.target));
    py::dict d;
    d["name"] = ds.name;
    d["records"] = records;
    d["dropped"] = ds.dropped;
    return d;
  }, py::arg("path"), py::arg("smiles_col") = "smiles", py::arg("target_col") = "target",
     py::arg("id_col") = "", py::arg("name") = "");

  m.def("make_split", [](std::size_t n, std::uint64_t seed) {
    return split_dict(bench::make_split(n, seed));
  }, py::arg("n"), py::arg("seed"));
  m.def("make_kfold", [](std::size_t n, std::size_t k, std::uint64_t seed) {
    py::list folds;
    for (const auto& plan : bench::make_kfold(n, k, seed)) folds.append(split_dict(plan));
    return folds;
  }, py::arg("n"), py::arg("k"), py::arg("seed"));

  m.def("rmse", [](const std::vector<double>& y, const std::vector<double>& y_hat) {
    return bench::rmse(y, y_hat);
  }, py::arg("y"), py::arg("y_hat"));
  m.def("mae", [](const std::vector<double>& y, const std::vector<double>& y_hat) {
    return bench::mae(y, y_hat);
  }, py::arg("y"), py::arg("y_hat"));
  m.def("pearson", [](const std::vector<double>& y, const std::vector<double>& y_hat) {
    return bench::pearson(y, y_hat);
  }, py::arg("y"), py::arg("y_hat"));
  m.def("cosine", [](const std::vector<double>& y, const std::vector<double>& y_hat) {
    return bench::cosine(y, y_hat);
  }, py::arg("y"), py::arg("y_hat"));
  m.def("compute_metrics", [](const std::vector<double>& y, const std::vector<double>& y_hat) {
    return metrics_dict(bench::compute_metrics(y, y_hat));
  }, py::arg("y"), py::arg("y_hat"));
  m.def("summarize", [](const std::vector<double>& values) {
    const auto s = bench::summarize(values);
    py::dict d;
    d["min"] = s.min;
    d["max"] = s.max;
    d["median"] = s.median;
    d["mean"] = s.mean;
    d["stddev"] = s.stddev;
    return d;
  }, py::arg("values"));

  // fusion
  m.def("fit_fusion", [](const std::string& method, const Eigen::MatrixXd& o,
                         const Eigen::VectorXd& y, std::uint64_t seed,
                         std::optional<double> lam, double alpha) {
    fusion::FusionConfig config;
    config.lambda = lam;
    config.alpha = alpha;
    Rng rng(seed);
    const auto w = fusion::fit(fusion::parse_method(method), tuning_outputs(o, y), config, rng);
    return Eigen::Vector3d(w.w[0], w.w[1], w.w[2]);
  }, py::arg("method"), py::arg("outputs"), py::arg("y"), py::arg("seed") = 0,
     py::arg("lam") = std::optional<double>(0.01), py::arg("alpha") = 0.5,
     "Fits fusion weights on an m x 3 output matrix; lam=None selects lambda by cross-validation.");

  // config and commands
  m.def("default_config", [] { return config::to_json(config::ExperimentConfig{}); });
  m.def("normalize_config", [](std::string_view text) {
    const auto c = config::from_json(text);
    config::validate(c);
    return config::to_json(c);
  }, py::arg("json"));
  m.def("set_option", [](std::string_view text, std::string_view key, std::string_view value) {
    auto c = config::from_json(text);
    config::set_option(c, key, value);
    return config::to_json(c);
  }, py::arg("json"), py::arg("key"), py::arg("value"));
  m.def("cache_key", [](std::string_view text) {
    return pipeline::cache_key(config::from_json(text));
  }, py::arg("json"));

  m.def("run_command", [](const std::string& command, std::string_view text) {
    const auto c = config::from_json(text);
    config::validate(c);
    const auto cmd = pipeline::parse_command(command);
    pipeline::CommandResult result;
    {
      py::gil_scoped_release release;
      result = pipeline::run_command(cmd, c);
    }
    py::list failures;
    for (const auto& f : result.run.failures) {
      failures.append(py::make_tuple(f.seed, std::string(errc_name(f.code)), f.message));
    }
    py::dict d;
    d["run_dir"] = result.run_dir;
    d["cache"] = result.cache;
    d["cache_hit"] = result.cache_hit;
    d["seeds"] = result.run.seeds.size();
    d["failures"] = failures;
    return d;
  }, py::arg("command"), py::arg("json"));
}
