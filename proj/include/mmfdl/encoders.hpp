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

// Modal encoders: a Transformer over token ids, a BiGRU with attention over
// fingerprint chunks and a two-layer GCN over atom features. Each ends in
// the same fully connected head and predicts one standardized scalar.

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mmfdl/autodiff.hpp"
#include "mmfdl/chemlex.hpp"
#include "mmfdl/ecfp.hpp"
#include "mmfdl/molgraph.hpp"
#include "mmfdl/optim.hpp"
#include "mmfdl/tensor.hpp"

namespace mmfdl {
class Rng;
}

namespace mmfdl::encoders {

using nn::Parameter;
using nn::Tensor;
using nn::Tape;
using nn::Var;

struct Linear {
  Parameter w;  // in x out
  Parameter b;  // 1 x out

  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng);
  Var operator()(Var x);
  void collect(std::vector<Parameter*>& out);
};

/// Per-head query/key/value maps (d x d_k each) and the d x d output map.
struct MhaParams {
  std::vector<Parameter> wq;
  std::vector<Parameter> wk;
  std::vector<Parameter> wv;
  Parameter wo;

  MhaParams() = default;
  MhaParams(const std::string& name, std::size_t d, std::size_t heads, Rng& rng);
  std::size_t heads() const noexcept { return wq.size(); }
  std::size_t model_dim() const noexcept { return wo.value.cols(); }
  void collect(std::vector<Parameter*>& out);
};

/// Scaled dot-product attention per head, heads concatenated and mapped by
/// W_O. `key_valid` masks key columns; `dropout` applies to the attention
/// weights. When `weights` is given it receives one l x l matrix per head.
Var mha(Var h, MhaParams& params, std::span<const bool> key_valid = {}, double dropout = 0.0,
        Rng* rng = nullptr, std::vector<Tensor>* weights = nullptr);

/// Linear -> relu -> dropout -> Linear to a single output.
struct FcHead {
  Linear hidden;
  Linear out;

  FcHead() = default;
  FcHead(const std::string& name, std::size_t in, std::size_t width, Rng& rng);
  Var operator()(Var pooled, double dropout, Rng* rng);
  void collect(std::vector<Parameter*>& out);
};

/// Output of one forward pass. `prediction` is 1 x 1 in standardized target
/// units; `hidden` is the 1 x width input of the FC head.
struct Forward {
  Var prediction;
  Var hidden;
};

/// Affine map between standardized and raw target units.
struct TargetScale {
  double mean = 0.0;
  double std = 1.0;

  double to_raw(double z) const { return z * std + mean; }
  double to_standard(double y) const { return (y - mean) / std; }
  bool operator==(const TargetScale&) const = default;
};

// ---- Transformer ------------------------------------------------------------

struct TransformerConfig {
  std::size_t vocab_size = 0;
  std::size_t max_len = 0;
  std::size_t d = 128;
  std::size_t heads = 4;
  std::size_t layers = 2;
  std::size_t ffn_mult = 4;
  std::size_t fc = 128;
  double dropout = 0.1;
};

class TransformerHead {
 public:
  using Input = chemlex::EncodedSeq;
  static constexpr const char* kPrefix = "tf.";

  TransformerHead() = default;
  TransformerHead(const TransformerConfig& config, Rng& rng);

  /// Only the first true_len positions take part, which is the same as
  /// masking every padded key and excluding it from pooling.
  Forward forward(Tape& tape, const Input& seq, Rng* dropout_rng = nullptr,
                  std::vector<Tensor>* attention = nullptr);
  std::vector<Parameter*> parameters();
  const TransformerConfig& config() const noexcept { return config_; }

  TargetScale scale;

 private:
  struct Layer {
    MhaParams attn;
    Parameter ln1_gain, ln1_bias;
    Linear ffn_in, ffn_out;
    Parameter ln2_gain, ln2_bias;
  };
  TransformerConfig config_;
  Parameter embed_;
  Tensor positions_;
  std::vector<Layer> layers_;
  FcHead fc_;
};

// ---- BiGRU ------------------------------------------------------------------

struct BiGruConfig {
  std::size_t chunk_bits = 16;
  std::size_t hidden = 128;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t fc = 128;
  double dropout = 0.1;
};

/// One GRU direction: gx = x W + b_x, gh = h U + b_h with gate blocks
/// ordered (reset, update, candidate).
struct GruCell {
  Parameter w;    // in x 3H
  Parameter bx;   // 1 x 3H
  Parameter u;    // H x 3H
  Parameter bh;   // 1 x 3H

  GruCell() = default;
  GruCell(const std::string& name, std::size_t in, std::size_t hidden, Rng& rng);
  void collect(std::vector<Parameter*>& out);
};

/// Runs a GRU over the rows of `x` from h_0 = 0. Output row t is the state
/// after consuming row t; with reverse = true rows are consumed last to first.
Var gru_sequence(Var x, GruCell& cell, bool reverse);

class BiGruHead {
 public:
  /// T x chunk_bits matrix of 0/1 fingerprint chunks.
  using Input = Tensor;
  static constexpr const char* kPrefix = "gru.";

  struct Layer {
    GruCell forward;
    GruCell backward;
    Parameter wt;  // combines the forward state, H x H
    Parameter wv;  // combines the backward state, H x H
  };

  BiGruHead() = default;
  BiGruHead(const BiGruConfig& config, Rng& rng);

  Forward forward(Tape& tape, const Input& chunks, Rng* dropout_rng = nullptr);
  std::vector<Parameter*> parameters();
  const BiGruConfig& config() const noexcept { return config_; }
  std::vector<Layer>& layers() noexcept { return layers_; }

  TargetScale scale;

 private:
  BiGruConfig config_;
  Linear project_;
  std::vector<Layer> layers_;
  MhaParams attn_;
  FcHead fc_;
};

/// Splits a fingerprint into nbits / chunk_bits rows of chunk_bits bits,
/// lowest bits first.
Tensor fingerprint_chunks(const ecfp::Fingerprint& fp, std::size_t chunk_bits = 16);

// ---- GCN --------------------------------------------------------------------

struct GcnConfig {
  std::size_t in = molgraph::kFeatureWidth;
  std::vector<std::size_t> widths = {156, 312};
  std::size_t fc = 128;
  double dropout = 0.1;
};

struct GraphInput {
  Tensor x;  // n x in
  Tensor a;  // n x n normalized adjacency
};

GraphInput graph_input(const molgraph::Molecule& mol);

class GcnHead {
 public:
  using Input = GraphInput;
  static constexpr const char* kPrefix = "gcn.";

  GcnHead() = default;
  GcnHead(const GcnConfig& config, Rng& rng);

  /// When `layer_outputs` is given it receives H^(1), H^(2), ...
  Forward forward(Tape& tape, const Input& graph, Rng* dropout_rng = nullptr,
                  std::vector<Tensor>* layer_outputs = nullptr);
  std::vector<Parameter*> parameters();
  const GcnConfig& config() const noexcept { return config_; }

  TargetScale scale;

 private:
  GcnConfig config_;
  std::vector<Parameter> weights_;
  FcHead fc_;
};

// ---- shared helpers ---------------------------------------------------------

/// Raw-scale prediction without dropout or gradient tracking.
template <typename Head>
double predict(Head& head, const typename Head::Input& input) {
  Tape tape(false);
  return head.scale.to_raw(head.forward(tape, input).prediction.item());
}

template <typename Head>
Tensor hidden_vector(Head& head, const typename Head::Input& input) {
  Tape tape(false);
  return head.forward(tape, input).hidden.value();
}

/// Writes every parameter plus the target scale ("<prefix>target_scale").
template <typename Head>
void save_head(Head& head, const std::filesystem::path& path);
/// Head must already be constructed with the matching config.
template <typename Head>
void load_head(Head& head, const std::filesystem::path& path);

// ---- training ---------------------------------------------------------------

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  std::size_t patience = 20;
  double lr = 1e-3;
};

struct TrainReport {
  double initial_train_loss = 0.0;
  double initial_val_loss = 0.0;
  std::vector<double> train_loss;  // per epoch, standardized units
  std::vector<double> val_loss;
  std::size_t best_epoch = 0;      // 1-based; 0 when no epoch ran
  double best_val_loss = 0.0;
  double wall_seconds = 0.0;

  /// Equality ignores wall time.
  bool operator==(const TrainReport& other) const;
};

/// Minibatch MSE training with Adam on standardized targets. The head ends
/// at the parameters of its best validation epoch. Throws
/// Error(kNonFiniteLoss) naming the epoch and batch index.
template <typename Head>
TrainReport train_head(Head& head, std::span<const typename Head::Input> train_x,
                       std::span<const double> train_y,
                       std::span<const typename Head::Input> val_x,
                       std::span<const double> val_y, const TrainConfig& config, Rng& rng);

/// Mean squared error in standardized units, no dropout.
template <typename Head>
double evaluate_loss(Head& head, std::span<const typename Head::Input> x,
                     std::span<const double> y);

}  // namespace mmfdl::encoders
