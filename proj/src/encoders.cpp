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

#include "mmfdl/encoders.hpp"

#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>

#include "mmfdl/error.hpp"
#include "mmfdl/rng.hpp"

namespace mmfdl::encoders {

using nn::uniform_init;

namespace {

Parameter make_param(const std::string& name, std::vector<std::size_t> shape, std::size_t fan_in,
                     Rng& rng) {
  return Parameter(name, uniform_init(std::move(shape), fan_in, rng));
}

Parameter filled(const std::string& name, std::size_t cols, double value) {
  return Parameter(name, Tensor({1, cols}, value));
}

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(Errc::kInvalidConfig, message);
}

}  // namespace

Linear::Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng)
    : w(make_param(name + ".w", {in, out}, in, rng)), b(make_param(name + ".b", {1, out}, in, rng)) {}

Var Linear::operator()(Var x) {
  Tape& tape = *x.tape;
  return nn::add(nn::matmul(x, tape.parameter(w)), tape.parameter(b));
}

void Linear::collect(std::vector<Parameter*>& out) {
  out.push_back(&w);
  out.push_back(&b);
}

MhaParams::MhaParams(const std::string& name, std::size_t d, std::size_t heads, Rng& rng) {
  require(heads > 0 && d % heads == 0,
          "attention width " + std::to_string(d) + " is not divisible by " + std::to_string(heads) + " heads");
  const std::size_t dk = d / heads;
  for (std::size_t h = 0; h < heads; ++h) {
    const std::string base = name + ".h" + std::to_string(h);
    wq.push_back(make_param(base + ".wq", {d, dk}, d, rng));
    wk.push_back(make_param(base + ".wk", {d, dk}, d, rng));
    wv.push_back(make_param(base + ".wv", {d, dk}, d, rng));
  }
  wo = make_param(name + ".wo", {d, d}, d, rng);
}

void MhaParams::collect(std::vector<Parameter*>& out) {
  for (std::size_t h = 0; h < heads(); ++h) {
    out.push_back(&wq[h]);
    out.push_back(&wk[h]);
    out.push_back(&wv[h]);
  }
  out.push_back(&wo);
}

Var mha(Var h, MhaParams& params, std::span<const bool> key_valid, double dropout, Rng* rng,
        std::vector<Tensor>* weights) {
  Tape& tape = *h.tape;
  const std::size_t d = params.model_dim();
  if (h.cols() != d) {
    throw Error(Errc::kShapeMismatch, "attention input " + h.value().shape_string() +
                                          " vs model width " + std::to_string(d));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(d / params.heads()));
  std::vector<Var> outputs;
  outputs.reserve(params.heads());
  for (std::size_t k = 0; k < params.heads(); ++k) {
    const Var q = nn::matmul(h, tape.parameter(params.wq[k]));
    const Var key = nn::matmul(h, tape.parameter(params.wk[k]));
    const Var v = nn::matmul(h, tape.parameter(params.wv[k]));
    const Var scores = nn::affine(nn::matmul(q, nn::transpose(key)), scale, 0.0);
    Var attn = nn::softmax_rows(scores, key_valid);
    if (weights) weights->push_back(attn.value());
    attn = nn::dropout(attn, dropout, rng);
    outputs.push_back(nn::matmul(attn, v));
  }
  return nn::matmul(nn::concat_cols(outputs), tape.parameter(params.wo));
}

FcHead::FcHead(const std::string& name, std::size_t in, std::size_t width, Rng& rng)
    : hidden(name + ".fc1", in, width, rng), out(name + ".fc2", width, 1, rng) {}

Var FcHead::operator()(Var pooled, double dropout, Rng* rng) {
  return out(nn::dropout(nn::relu(hidden(pooled)), dropout, rng));
}

void FcHead::collect(std::vector<Parameter*>& out_params) {
  hidden.collect(out_params);
  out.collect(out_params);
}

// ---- Transformer ------------------------------------------------------------

TransformerHead::TransformerHead(const TransformerConfig& config, Rng& rng) : config_(config) {
  require(config.vocab_size > 0, "transformer vocabulary is empty");
  require(config.max_len > 0, "transformer max_len must be positive");
  require(config.layers > 0, "transformer needs at least one layer");
  const std::string p = kPrefix;
  const std::size_t d = config.d;
  positions_ = nn::positional_encoding(config.max_len, d);
  embed_ = make_param(p + "embed", {config.vocab_size + 1, d}, 1, rng);
  for (std::size_t c = 0; c < d; ++c) embed_.value.at(0, c) = 0.0;
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string base = p + "l" + std::to_string(l);
    Layer layer;
    layer.attn = MhaParams(base + ".attn", d, config.heads, rng);
    layer.ln1_gain = filled(base + ".ln1.gain", d, 1.0);
    layer.ln1_bias = filled(base + ".ln1.bias", d, 0.0);
    layer.ffn_in = Linear(base + ".ffn1", d, config.ffn_mult * d, rng);
    layer.ffn_out = Linear(base + ".ffn2", config.ffn_mult * d, d, rng);
    layer.ln2_gain = filled(base + ".ln2.gain", d, 1.0);
    layer.ln2_bias = filled(base + ".ln2.bias", d, 0.0);
    layers_.push_back(std::move(layer));
  }
  fc_ = FcHead(p + "head", d, config.fc, rng);
}

Forward TransformerHead::forward(Tape& tape, const Input& seq, Rng* dropout_rng,
                                 std::vector<Tensor>* attention) {
  const std::size_t len = seq.true_len;
  if (len == 0) throw Error(Errc::kShapeMismatch, "empty token sequence");
  if (len > config_.max_len || len > seq.ids.size()) {
    throw Error(Errc::kSequenceTooLong, std::to_string(len) + " tokens exceed max_len " +
                                            std::to_string(config_.max_len));
  }
  for (std::size_t k = 0; k < len; ++k) {
    if (seq.ids[k] < 1 || static_cast<std::size_t>(seq.ids[k]) > config_.vocab_size) {
      throw Error(Errc::kUnknownToken, "token id " + std::to_string(seq.ids[k]));
    }
  }
  const double p = config_.dropout;
  const std::span<const std::int32_t> ids(seq.ids.data(), len);
  Tensor pe({len, config_.d});
  std::copy_n(positions_.values().begin(), len * config_.d, pe.values().begin());
  Var x = nn::add(nn::gather_rows(tape.parameter(embed_), ids), tape.constant(std::move(pe)));
  for (Layer& layer : layers_) {
    const Var a = mha(x, layer.attn, {}, p, dropout_rng, attention);
    x = nn::layer_norm(nn::add(x, nn::dropout(a, p, dropout_rng)), tape.parameter(layer.ln1_gain),
                       tape.parameter(layer.ln1_bias));
    const Var f = layer.ffn_out(nn::relu(layer.ffn_in(x)));
    x = nn::layer_norm(nn::add(x, nn::dropout(f, p, dropout_rng)), tape.parameter(layer.ln2_gain),
                       tape.parameter(layer.ln2_bias));
  }
  const Var pooled = nn::mean_pool_rows(x);
  return {fc_(pooled, p, dropout_rng), pooled};
}

std::vector<Parameter*> TransformerHead::parameters() {
  std::vector<Parameter*> out{&embed_};
  for (Layer& layer : layers_) {
    layer.attn.collect(out);
    out.push_back(&layer.ln1_gain);
    out.push_back(&layer.ln1_bias);
    layer.ffn_in.collect(out);
    layer.ffn_out.collect(out);
    out.push_back(&layer.ln2_gain);
    out.push_back(&layer.ln2_bias);
  }
  fc_.collect(out);
  return out;
}

// ---- BiGRU ------------------------------------------------------------------

GruCell::GruCell(const std::string& name, std::size_t in, std::size_t hidden, Rng& rng)
    : w(make_param(name + ".w", {in, 3 * hidden}, hidden, rng)),
      bx(make_param(name + ".bx", {1, 3 * hidden}, hidden, rng)),
      u(make_param(name + ".u", {hidden, 3 * hidden}, hidden, rng)),
      bh(make_param(name + ".bh", {1, 3 * hidden}, hidden, rng)) {}

void GruCell::collect(std::vector<Parameter*>& out) {
  out.push_back(&w);
  out.push_back(&bx);
  out.push_back(&u);
  out.push_back(&bh);
}

namespace {

using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct GruTrace {
  std::vector<RowVec> h_prev, r, z, n, gh_n;
};

Var gru_scan(Var gx, Var u, Var bh, bool reverse) {
  Tape* tape = gx.tape;
  const std::size_t steps = gx.rows();
  const std::size_t hidden = u.rows();
  if (u.cols() != 3 * hidden || gx.cols() != 3 * hidden || bh.value().size() != 3 * hidden) {
    throw Error(Errc::kShapeMismatch, "GRU gates " + gx.value().shape_string() + " vs recurrent " +
                                          u.value().shape_string());
  }
  const Eigen::Index H = static_cast<Eigen::Index>(hidden);
  const auto gxm = gx.value().mat();
  const auto um = u.value().mat();
  const auto bhm = bh.value().mat();

  auto trace = std::make_shared<GruTrace>();
  Tensor out({steps, hidden});
  auto outm = out.mat();
  RowVec h = RowVec::Zero(H);
  for (std::size_t s = 0; s < steps; ++s) {
    const Eigen::Index t = static_cast<Eigen::Index>(reverse ? steps - 1 - s : s);
    const RowVec gh = h * um + bhm;
    RowVec r(H), z(H), n(H);
    for (Eigen::Index k = 0; k < H; ++k) {
      r[k] = logistic(gxm(t, k) + gh[k]);
      z[k] = logistic(gxm(t, H + k) + gh[H + k]);
      n[k] = std::tanh(gxm(t, 2 * H + k) + r[k] * gh[2 * H + k]);
    }
    trace->h_prev.push_back(h);
    trace->r.push_back(r);
    trace->z.push_back(z);
    trace->n.push_back(n);
    trace->gh_n.push_back(gh.segment(2 * H, H));
    h = (1.0 - z.array()).matrix().cwiseProduct(n) + z.cwiseProduct(h);
    outm.row(t) = h;
  }

  const Var inputs[] = {gx, u, bh};
  return tape->record(std::move(out), inputs, [=](const Tensor& g) {
    Tensor* ggx = tape->grad_buffer(gx);
    Tensor* gu = tape->grad_buffer(u);
    Tensor* gbh = tape->grad_buffer(bh);
    const auto gm = g.mat();
    const auto um_b = tape->value(u).mat();
    RowVec carry = RowVec::Zero(H);
    RowVec dgh(3 * H);
    for (std::size_t s = steps; s-- > 0;) {
      const Eigen::Index t = static_cast<Eigen::Index>(reverse ? steps - 1 - s : s);
      const RowVec dh = gm.row(t) + carry;
      const RowVec& r = trace->r[s];
      const RowVec& z = trace->z[s];
      const RowVec& n = trace->n[s];
      const RowVec& hp = trace->h_prev[s];
      const RowVec& ghn = trace->gh_n[s];
      for (Eigen::Index k = 0; k < H; ++k) {
        const double dn_pre = dh[k] * (1.0 - z[k]) * (1.0 - n[k] * n[k]);
        const double dz_pre = dh[k] * (hp[k] - n[k]) * z[k] * (1.0 - z[k]);
        const double dr_pre = dn_pre * ghn[k] * r[k] * (1.0 - r[k]);
        if (ggx) {
          ggx->at(t, k) += dr_pre;
          ggx->at(t, H + k) += dz_pre;
          ggx->at(t, 2 * H + k) += dn_pre;
        }
        dgh[k] = dr_pre;
        dgh[H + k] = dz_pre;
        dgh[2 * H + k] = dn_pre * r[k];
      }
      if (gu) gu->mat().noalias() += hp.transpose() * dgh;
      if (gbh) gbh->mat() += dgh;
      carry = dh.cwiseProduct(z) + dgh * um_b.transpose();
    }
  });
}

}  // namespace

Var gru_sequence(Var x, GruCell& cell, bool reverse) {
  Tape& tape = *x.tape;
  const Var gx = nn::add(nn::matmul(x, tape.parameter(cell.w)), tape.parameter(cell.bx));
  return gru_scan(gx, tape.parameter(cell.u), tape.parameter(cell.bh), reverse);
}

BiGruHead::BiGruHead(const BiGruConfig& config, Rng& rng) : config_(config) {
  require(config.chunk_bits > 0, "chunk_bits must be positive");
  require(config.layers > 0, "BiGRU needs at least one layer");
  const std::string p = kPrefix;
  const std::size_t h = config.hidden;
  project_ = Linear(p + "proj", config.chunk_bits, h, rng);
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string base = p + "l" + std::to_string(l);
    Layer layer;
    layer.forward = GruCell(base + ".fwd", h, h, rng);
    layer.backward = GruCell(base + ".bwd", h, h, rng);
    layer.wt = make_param(base + ".wt", {h, h}, h, rng);
    layer.wv = make_param(base + ".wv", {h, h}, h, rng);
    layers_.push_back(std::move(layer));
  }
  attn_ = MhaParams(p + "attn", h, config.heads, rng);
  fc_ = FcHead(p + "head", h, config.fc, rng);
}

Forward BiGruHead::forward(Tape& tape, const Input& chunks, Rng* dropout_rng) {
  if (chunks.rows() == 0 || chunks.cols() != config_.chunk_bits) {
    throw Error(Errc::kShapeMismatch, "fingerprint chunks " + chunks.shape_string() +
                                          " vs chunk width " + std::to_string(config_.chunk_bits));
  }
  const double p = config_.dropout;
  Var x = project_(tape.constant(chunks));
  for (Layer& layer : layers_) {
    const Var hf = gru_sequence(x, layer.forward, false);
    const Var hb = gru_sequence(x, layer.backward, true);
    x = nn::add(nn::matmul(hf, tape.parameter(layer.wt)), nn::matmul(hb, tape.parameter(layer.wv)));
  }
  const Var pooled = nn::mean_pool_rows(mha(x, attn_, {}, p, dropout_rng));
  return {fc_(pooled, p, dropout_rng), pooled};
}

std::vector<Parameter*> BiGruHead::parameters() {
  std::vector<Parameter*> out;
  project_.collect(out);
  for (Layer& layer : layers_) {
    layer.forward.collect(out);
    layer.backward.collect(out);
    out.push_back(&layer.wt);
    out.push_back(&layer.wv);
  }
  attn_.collect(out);
  fc_.collect(out);
  return out;
}

Tensor fingerprint_chunks(const ecfp::Fingerprint& fp, std::size_t chunk_bits) {
  if (chunk_bits == 0 || fp.nbits() % chunk_bits != 0) {
    throw Error(Errc::kInvalidConfig, std::to_string(fp.nbits()) + " bits do not split into chunks of " +
                                          std::to_string(chunk_bits));
  }
  Tensor out({fp.nbits() / chunk_bits, chunk_bits});
  for (std::size_t bit = 0; bit < fp.nbits(); ++bit) out[bit] = fp.test(bit) ? 1.0 : 0.0;
  return out;
}

// ---- GCN --------------------------------------------------------------------

GraphInput graph_input(const molgraph::Molecule& mol) {
  const auto features = molgraph::featurize(mol);
  const auto adjacency = molgraph::normalized_adjacency(mol);
  return {Tensor({features.rows, molgraph::kFeatureWidth}, features.values),
          Tensor({adjacency.n, adjacency.n}, adjacency.values)};
}

GcnHead::GcnHead(const GcnConfig& config, Rng& rng) : config_(config) {
  require(!config.widths.empty(), "GCN needs at least one layer");
  const std::string p = kPrefix;
  std::size_t in = config.in;
  for (std::size_t l = 0; l < config.widths.size(); ++l) {
    weights_.push_back(make_param(p + "w" + std::to_string(l), {in, config.widths[l]}, in, rng));
    in = config.widths[l];
  }
  fc_ = FcHead(p + "head", in, config.fc, rng);
}

Forward GcnHead::forward(Tape& tape, const Input& graph, Rng* dropout_rng,
                         std::vector<Tensor>* layer_outputs) {
  const std::size_t n = graph.x.rows();
  if (n == 0 || graph.x.cols() != config_.in || graph.a.rows() != n || graph.a.cols() != n) {
    throw Error(Errc::kShapeMismatch, "atom features " + graph.x.shape_string() + " vs adjacency " +
                                          graph.a.shape_string());
  }
  const Var a = tape.constant(graph.a);
  Var h = tape.constant(graph.x);
  for (Parameter& w : weights_) {
    h = nn::relu(nn::matmul(a, nn::matmul(h, tape.parameter(w))));
    if (layer_outputs) layer_outputs->push_back(h.value());
  }
  const Var pooled = nn::mean_pool_rows(h);
  return {fc_(pooled, config_.dropout, dropout_rng), pooled};
}

std::vector<Parameter*> GcnHead::parameters() {
  std::vector<Parameter*> out;
  for (Parameter& w : weights_) out.push_back(&w);
  fc_.collect(out);
  return out;
}

// ---- persistence ------------------------------------------------------------

template <typename Head>
void save_head(Head& head, const std::filesystem::path& path) {
  auto tensors = nn::snapshot(head.parameters());
  tensors.push_back({std::string(Head::kPrefix) + "target_scale",
                     Tensor::row({head.scale.mean, head.scale.std})});
  nn::save_checkpoint(path, tensors);
}

template <typename Head>
void load_head(Head& head, const std::filesystem::path& path) {
  const auto tensors = nn::load_checkpoint(path);
  nn::restore(head.parameters(), tensors);
  const std::string scale_name = std::string(Head::kPrefix) + "target_scale";
  for (const auto& t : tensors) {
    if (t.name == scale_name && t.tensor.size() == 2) {
      head.scale = {t.tensor[0], t.tensor[1]};
      return;
    }
  }
  throw Error(Errc::kBadCheckpoint, "missing " + scale_name + " in " + path.string());
}

// ---- training ---------------------------------------------------------------

bool TrainReport::operator==(const TrainReport& other) const {
  return initial_train_loss == other.initial_train_loss &&
         initial_val_loss == other.initial_val_loss && train_loss == other.train_loss &&
         val_loss == other.val_loss && best_epoch == other.best_epoch &&
         best_val_loss == other.best_val_loss;
}

template <typename Head>
double evaluate_loss(Head& head, std::span<const typename Head::Input> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(Errc::kLengthMismatch, std::to_string(x.size()) + " inputs vs " +
                                           std::to_string(y.size()) + " targets");
  }
  if (x.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Tape tape(false);
    const double diff = head.forward(tape, x[i]).prediction.item() - head.scale.to_standard(y[i]);
    total += diff * diff;
  }
  return total / static_cast<double>(x.size());
}

template <typename Head>
TrainReport train_head(Head& head, std::span<const typename Head::Input> train_x,
                       std::span<const double> train_y,
                       std::span<const typename Head::Input> val_x,
                       std::span<const double> val_y, const TrainConfig& config, Rng& rng) {
  const auto start = std::chrono::steady_clock::now();
  if (train_x.empty()) throw Error(Errc::kEmptyTrainSet, "no training molecules");
  if (val_x.empty()) throw Error(Errc::kEmptyDataset, "no validation molecules");
  if (train_x.size() != train_y.size() || val_x.size() != val_y.size()) {
    throw Error(Errc::kLengthMismatch, "inputs and targets differ in length");
  }
  if (config.batch_size == 0) throw Error(Errc::kInvalidConfig, "batch_size must be positive");

  if (config.epochs > 0) {
    const double n = static_cast<double>(train_y.size());
    const double mean = std::accumulate(train_y.begin(), train_y.end(), 0.0) / n;
    double var = 0.0;
    for (const double v : train_y) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / n);
    head.scale = {mean, sd > 0.0 ? sd : 1.0};
  }

  TrainReport report;
  report.initial_train_loss = evaluate_loss(head, train_x, train_y);
  report.initial_val_loss = evaluate_loss(head, val_x, val_y);
  report.best_val_loss = report.initial_val_loss;

  const auto params = head.parameters();
  auto best = nn::snapshot(params);
  nn::AdamState adam;
  adam.config.lr = config.lr;
  Rng order_rng = rng.split(1);
  Rng dropout_rng = rng.split(2);
  std::vector<std::size_t> order(train_x.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(std::span<std::size_t>(order));
    double epoch_total = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      nn::zero_grads(params);
      Tape tape;
      std::vector<Var> terms;
      terms.reserve(end - begin);
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t i = order[k];
        const Var pred = head.forward(tape, train_x[i], &dropout_rng).prediction;
        terms.push_back(nn::mse(pred, Tensor::scalar(head.scale.to_standard(train_y[i]))));
      }
      const Var loss =
          nn::affine(nn::sum(nn::concat_rows(terms)), 1.0 / static_cast<double>(end - begin), 0.0);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw Error(Errc::kNonFiniteLoss, "epoch " + std::to_string(epoch) + " batch " +
                                              std::to_string(batch_index));
      }
      tape.backward(loss);
      nn::adam_step(params, adam);
      epoch_total += value * static_cast<double>(end - begin);
    }
    report.train_loss.push_back(epoch_total / static_cast<double>(order.size()));
    const double val = evaluate_loss(head, val_x, val_y);
    report.val_loss.push_back(val);
    if (val < report.best_val_loss) {
      report.best_val_loss = val;
      report.best_epoch = epoch;
      best = nn::snapshot(params);
    } else if (epoch - report.best_epoch >= config.patience) {
      break;
    }
  }
  nn::restore(params, best);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

#define MMFDL_INSTANTIATE_HEAD(Head)                                                          \
  template void save_head<Head>(Head&, const std::filesystem::path&);                         \
  template void load_head<Head>(Head&, const std::filesystem::path&);                         \
  template double evaluate_loss<Head>(Head&, std::span<const Head::Input>,                    \
                                      std::span<const double>);                               \
  template TrainReport train_head<Head>(Head&, std::span<const Head::Input>,                  \
                                        std::span<const double>, std::span<const Head::Input>, \
                                        std::span<const double>, const TrainConfig&, Rng&);

MMFDL_INSTANTIATE_HEAD(TransformerHead)
MMFDL_INSTANTIATE_HEAD(BiGruHead)
MMFDL_INSTANTIATE_HEAD(GcnHead)

#undef MMFDL_INSTANTIATE_HEAD

}  // namespace mmfdl::encoders
