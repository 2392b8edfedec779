// Copyright 2026 The lrd Authors. All Rights Reserved.
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

// Byte-level pre-norm decoder: learned positions, RMSNorm, causal multi-head
// attention, SiLU-gated MLP, untied output head. Every projection inside a
// layer is either a dense matrix or a low-rank factor pair.
//
// Weights follow the (out x in) convention and are applied to row-major
// activations as y = x W^T. A factored weight W ~ A B applies as
// y = (x B^T) A^T, i.e. two thin matmuls.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lrd/autodiff.hpp"
#include "lrd/linalg.hpp"
#include "lrd/tensor.hpp"

namespace lrd {

struct ModelConfig {
  std::size_t vocab = 256;
  std::size_t d_model = 128;
  std::size_t n_layers = 4;
  std::size_t n_heads = 4;
  std::size_t d_ff = 344;
  std::size_t max_seq = 256;

  /// Throws ConfigError when a dimension is zero or heads do not divide d_model.
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

enum class MatrixName : std::uint8_t { kQ, kK, kV, kO, kGate, kUp, kDown };

/// Canonical intra-layer order; also the planner's tie-break order.
inline constexpr std::array<MatrixName, 7> kMatrixNames = {
    MatrixName::kQ,    MatrixName::kK,  MatrixName::kV,   MatrixName::kO,
    MatrixName::kGate, MatrixName::kUp, MatrixName::kDown};

std::string_view to_string(MatrixName name);
std::optional<MatrixName> parse_matrix_name(std::string_view text);

/// (rows, cols) of a projection under a config.
std::pair<std::size_t, std::size_t> matrix_shape(const ModelConfig& cfg, MatrixName name);

using Weight = std::variant<Matrix, LowRankFactor>;

std::size_t weight_rows(const Weight& w);
std::size_t weight_cols(const Weight& w);
std::size_t weight_params(const Weight& w);
bool is_factored(const Weight& w);
/// Dense matrix equivalent (A B for factors).
Matrix dense(const Weight& w);
/// Multiply-adds times two for applying the weight to one token.
std::size_t weight_flops(const Weight& w);
/// out = x W^T.
void apply_weight(const Weight& w, const Matrix& x, Matrix& out);

struct LayerWeights {
  std::array<Weight, 7> proj;
  Matrix attn_norm;  // 1 x d_model
  Matrix mlp_norm;   // 1 x d_model

  Weight& operator[](MatrixName n) { return proj[static_cast<std::size_t>(n)]; }
  const Weight& operator[](MatrixName n) const { return proj[static_cast<std::size_t>(n)]; }
  bool any_factored() const;
};

struct Model {
  ModelConfig config;
  Matrix tok_embed;  // vocab x d_model
  Matrix pos_embed;  // max_seq x d_model
  std::vector<LayerWeights> layers;
  Matrix final_norm;  // 1 x d_model
  Matrix head;        // vocab x d_model
};

/// Small-normal initialization for pretraining (std 0.02; output projections
/// additionally scaled by 1/sqrt(2 * n_layers)). Norm gains start at 1.
Model init_model(const ModelConfig& cfg, Rng& rng);

/// A rectangular batch of token ids, sequence-major.
struct TokenBatch {
  std::size_t batch = 0;
  std::size_t seq_len = 0;
  std::vector<std::int32_t> ids;
};

/// Throws InputError for ids outside the vocabulary or over-length sequences.
void validate_batch(const ModelConfig& cfg, const TokenBatch& tokens);

/// Token plus positional embeddings, (batch*seq x d_model). Also the
/// "previous layer" activation for layer 0.
Matrix embed(const Model& model, const TokenBatch& tokens);

/// Pre-norm block: x + attn(norm(x)), then + mlp(norm(.)).
Matrix layer_forward(const LayerWeights& layer, const Matrix& x, const ModelConfig& cfg,
                     std::size_t seq_len);

/// head(final_norm(h)), (rows x vocab).
Matrix logits_from_hidden(const Model& model, const Matrix& hidden);

struct ForwardResult {
  Matrix logits;             // batch*seq x vocab
  std::vector<Matrix> taps;  // taps[i]: residual stream after layer i
};

ForwardResult forward_with_taps(const Model& model, const TokenBatch& tokens);
/// Logits only; intermediate activations are dropped as soon as possible.
Matrix forward_logits(const Model& model, const TokenBatch& tokens);

/// Runs only the first `depth` layers and returns {embedding, tap_0, ...,
/// tap_{depth-1}}; nothing deeper is ever materialized.
std::vector<Matrix> forward_prefix(const Model& model, const TokenBatch& tokens,
                                   std::size_t depth);

/// Swap a dense projection for a factor. Throws StateError if the target is
/// already factored, DimensionError on a shape mismatch, RankError if the
/// factor would not save parameters.
void replace_matrix(Model& model, std::size_t layer, MatrixName name, LowRankFactor factor);

std::size_t count_params(const Model& model);
/// Parameter count of the dense model a config describes.
std::size_t count_params(const ModelConfig& cfg);
std::size_t count_layer_params(const LayerWeights& layer);

// ---------------------------------------------------------------------------
// Autodiff graphs

enum class Trainable {
  kNone,     // everything constant
  kFactors,  // only low-rank factor pairs are parameters
  kAll,      // every weight including norms (pretraining)
};

/// A parameter leaf and the model storage it reads.
struct ParamRef {
  ad::Var var;
  Matrix* storage = nullptr;
  std::string name;
};

/// Appends one transformer layer to a tape. The tape keeps pointers into
/// `layer`, which must stay alive and structurally unchanged while the tape is
/// used. Created parameters are appended to `params` when non-null. Passing
/// the same `leaves` map to several calls makes them share weight leaves, so
/// gradients from every use accumulate in one place.
ad::Var build_layer_graph(ad::Tape& tape, LayerWeights& layer, ad::Var x,
                          const ModelConfig& cfg, std::size_t seq_len, Trainable which,
                          std::vector<ParamRef>* params, const std::string& prefix = "",
                          std::map<const Matrix*, ad::Var>* leaves = nullptr);

}  // namespace lrd
