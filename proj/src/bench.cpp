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

#include "mmfdl/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_set>

#include <boost/tokenizer.hpp>

#include "mmfdl/error.hpp"
#include "mmfdl/molgraph.hpp"
#include "mmfdl/rng.hpp"

namespace mmfdl::bench {

namespace {

using CsvTokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;

std::vector<std::string> split_fields(const std::string& line) {
  // No escape character: backslashes are bond symbols in SMILES.
  const boost::escaped_list_separator<char> sep(std::string(), std::string(","), std::string("\""));
  const CsvTokenizer tok(line, sep);
  return {tok.begin(), tok.end()};
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* begin = t.data();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, t.data() + t.size(), out);
  return ec == std::errc() && ptr == t.data() + t.size() && std::isfinite(out);
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name,
                         const std::filesystem::path& path) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (trim(header[i]) == name) return i;
  }
  throw Error(Errc::kMissingColumn, "column '" + name + "' not in " + path.string());
}

void check_pair(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) {
    throw Error(Errc::kLengthMismatch,
                std::to_string(y.size()) + " targets vs " + std::to_string(y_hat.size()) + " predictions");
  }
  if (y.empty()) throw Error(Errc::kEmptyDataset, "metrics over zero molecules");
}

void check_ratio(double ratio) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw Error(Errc::kInvalidConfig, "noise ratio " + std::to_string(ratio) + " outside [0, 1]");
  }
}

std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(perm));
  return perm;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const std::string& smiles_col,
                 const std::string& target_col, const std::string& id_col, const std::string& name) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::kEmptyDataset, path.string() + " is empty");
  const auto header = split_fields(line);
  const std::size_t smiles_idx = column_index(header, smiles_col, path);
  const std::size_t target_idx = column_index(header, target_col, path);
  const bool has_id = !id_col.empty();
  const std::size_t id_idx = has_id ? column_index(header, id_col, path) : 0;

  Dataset ds;
  ds.name = name.empty() ? path.stem().string() : name;
  std::unordered_set<std::string> seen;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const std::size_t this_row = row++;
    std::vector<std::string> fields;
    try {
      fields = split_fields(line);
    } catch (const boost::escaped_list_error&) {
      ++ds.dropped;
      continue;
    }
    const std::size_t needed = std::max({smiles_idx, target_idx, id_idx}) + 1;
    if (fields.size() < needed) {
      ++ds.dropped;
      continue;
    }
    Record rec;
    rec.id = has_id ? trim(fields[id_idx]) : std::to_string(this_row);
    rec.smiles = trim(fields[smiles_idx]);
    if (!parse_double(fields[target_idx], rec.target) || !seen.insert(rec.id).second) {
      ++ds.dropped;
      continue;
    }
    try {
      chemlex::tokenize(rec.smiles);
      if (molgraph::parse_molecule(rec.smiles).atom_count() == 0) throw Error(Errc::kMalformedSmiles, "");
    } catch (const Error&) {
      ++ds.dropped;
      continue;
    }
    ds.records.push_back(std::move(rec));
  }
  if (ds.records.empty()) throw Error(Errc::kEmptyDataset, "no usable rows in " + path.string());
  return ds;
}

SplitPlan make_split(std::size_t n, std::uint64_t seed) {
  if (n < 10) throw Error(Errc::kTooSmall, "need at least 10 molecules to split, got " + std::to_string(n));
  Rng rng(seed);
  const auto perm = permutation(n, rng);
  const std::size_t test = n / 10;
  const std::size_t tuning = (n - test) / 5;
  SplitPlan plan;
  plan.seed = seed;
  plan.test.assign(perm.begin(), perm.begin() + test);
  plan.tuning.assign(perm.begin() + test, perm.begin() + test + tuning);
  plan.train.assign(perm.begin() + test + tuning, perm.end());
  return plan;
}

SplitPlan make_fixed_split(std::size_t n, std::span<const std::size_t> test, std::uint64_t seed) {
  std::vector<bool> in_test(n, false);
  for (const std::size_t i : test) {
    if (i >= n || in_test[i]) throw Error(Errc::kInvalidConfig, "bad fixed test index " + std::to_string(i));
    in_test[i] = true;
  }
  Rng rng(seed);
  std::vector<std::size_t> rest;
  for (const std::size_t i : permutation(n, rng)) {
    if (!in_test[i]) rest.push_back(i);
  }
  if (rest.size() < 2) throw Error(Errc::kTooSmall, "fixed test set leaves no training data");
  const std::size_t tuning = rest.size() / 5;
  SplitPlan plan;
  plan.seed = seed;
  plan.test.assign(test.begin(), test.end());
  plan.tuning.assign(rest.begin(), rest.begin() + tuning);
  plan.train.assign(rest.begin() + tuning, rest.end());
  return plan;
}

std::vector<SplitPlan> make_kfold(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(Errc::kInvalidConfig, "k-fold needs k >= 2");
  if (n < k) throw Error(Errc::kTooSmall, std::to_string(n) + " molecules for " + std::to_string(k) + " folds");
  Rng rng(seed);
  const auto perm = permutation(n, rng);
  std::vector<SplitPlan> plans(k);
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t begin = f * n / k;
    const std::size_t end = (f + 1) * n / k;
    SplitPlan& plan = plans[f];
    plan.seed = seed;
    plan.test.assign(perm.begin() + begin, perm.begin() + end);
    std::vector<std::size_t> rest(perm.begin(), perm.begin() + begin);
    rest.insert(rest.end(), perm.begin() + end, perm.end());
    const std::size_t tuning = rest.size() / 5;
    plan.tuning.assign(rest.begin(), rest.begin() + tuning);
    plan.train.assign(rest.begin() + tuning, rest.end());
  }
  return plans;
}

// ---- noise ------------------------------------------------------------------

std::vector<bool> noise_mask(std::size_t n, double ratio, Rng& rng) {
  check_ratio(ratio);
  std::vector<bool> mask(n);
  for (std::size_t i = 0; i < n; ++i) mask[i] = rng.bernoulli(ratio);
  return mask;
}

chemlex::EncodedSeq add_noise(const chemlex::EncodedSeq& seq, std::size_t vocab_size, double ratio,
                              Rng& rng) {
  if (vocab_size == 0) throw Error(Errc::kInvalidConfig, "noise needs a nonempty vocabulary");
  const auto mask = noise_mask(seq.true_len, ratio, rng);
  chemlex::EncodedSeq out = seq;
  for (std::size_t i = 0; i < seq.true_len; ++i) {
    if (mask[i]) out.ids[i] = static_cast<std::int32_t>(1 + rng.uniform_index(vocab_size));
  }
  return out;
}

encoders::Tensor add_noise(const encoders::Tensor& bits, double ratio, Rng& rng) {
  const auto mask = noise_mask(bits.size(), ratio, rng);
  encoders::Tensor out = bits;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mask[i]) out[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  }
  return out;
}

ecfp::Fingerprint add_noise(const ecfp::Fingerprint& fp, double ratio, Rng& rng) {
  const auto mask = noise_mask(fp.nbits(), ratio, rng);
  ecfp::Fingerprint out = fp;
  for (std::size_t i = 0; i < fp.nbits(); ++i) {
    if (mask[i]) out.set(i, rng.bernoulli(0.5));
  }
  return out;
}

encoders::GraphInput add_noise(const encoders::GraphInput& graph, double ratio, Rng& rng) {
  return {add_noise(graph.x, ratio, rng), graph.a};
}

// ---- metrics ----------------------------------------------------------------

double rmse(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat);
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
  return std::sqrt(total / static_cast<double>(y.size()));
}

double mae(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat);
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += std::abs(y[i] - y_hat[i]);
  return total / static_cast<double>(y.size());
}

double pearson(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat);
  const double n = static_cast<double>(y.size());
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  const double mp = std::accumulate(y_hat.begin(), y_hat.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double a = y[i] - my;
    const double b = y_hat[i] - mp;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(Errc::kZeroVariance, "pearson of a constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double cosine(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat);
  double dot = 0.0;
  double a = 0.0;
  double b = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    dot += y[i] * y_hat[i];
    a += y[i] * y[i];
    b += y_hat[i] * y_hat[i];
  }
  if (a == 0.0 || b == 0.0) throw Error(Errc::kZeroVector, "cosine of a zero vector");
  return std::clamp(dot / std::sqrt(a * b), -1.0, 1.0);
}

Metrics compute_metrics(std::span<const double> y, std::span<const double> y_hat) {
  return {rmse(y, y_hat), mae(y, y_hat), pearson(y, y_hat), cosine(y, y_hat)};
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw Error(Errc::kEmptyDataset, "summary of zero values");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  Summary s;
  s.min = sorted.front();
  s.max = sorted.back();
  s.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return s;
}

// ---- nearest neighbours -----------------------------------------------------

namespace {

template <typename Item, typename Sim, typename Dist>
std::vector<KnnRow> knn_generic(std::span<const Item> train, std::span<const Item> test, std::size_t k,
                                Sim similarity, Dist distance) {
  if (train.empty()) throw Error(Errc::kEmptyTrainSet, "nearest neighbours need training items");
  const std::size_t kk = std::max<std::size_t>(1, std::min(k, train.size()));
  std::vector<KnnRow> out;
  out.reserve(test.size());
  std::vector<double> dist(train.size());
  for (const Item& t : test) {
    KnnRow row;
    row.max_similarity = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < train.size(); ++j) {
      row.max_similarity = std::max(row.max_similarity, similarity(t, train[j]));
      dist[j] = distance(t, train[j]);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
    row.mean_knn_distance = std::accumulate(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), 0.0) /
                            static_cast<double>(kk);
    out.push_back(row);
  }
  return out;
}

}  // namespace

std::vector<KnnRow> knn_diagnostics(std::span<const ecfp::Fingerprint> train,
                                    std::span<const ecfp::Fingerprint> test, std::size_t k) {
  return knn_generic(
      train, test, k, [](const auto& a, const auto& b) { return ecfp::tanimoto(a, b); },
      [](const auto& a, const auto& b) { return static_cast<double>(ecfp::hamming(a, b)); });
}

std::vector<KnnRow> knn_diagnostics(std::span<const std::vector<double>> train,
                                    std::span<const std::vector<double>> test, std::size_t k) {
  const auto check = [](const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
      throw Error(Errc::kLengthMismatch, "vectors of length " + std::to_string(a.size()) + " and " +
                                             std::to_string(b.size()));
    }
  };
  return knn_generic(
      train, test, k,
      [&](const std::vector<double>& a, const std::vector<double>& b) {
        check(a, b);
        double dot = 0.0;
        double na = 0.0;
        double nb = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
          dot += a[i] * b[i];
          na += a[i] * a[i];
          nb += b[i] * b[i];
        }
        return na == 0.0 || nb == 0.0 ? 0.0 : dot / std::sqrt(na * nb);
      },
      [&](const std::vector<double>& a, const std::vector<double>& b) {
        check(a, b);
        double ss = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i]) * (a[i] - b[i]);
        return std::sqrt(ss);
      });
}

}  // namespace mmfdl::bench
