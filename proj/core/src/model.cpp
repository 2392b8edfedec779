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

#include "lrd/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "kernels.hpp"
#include "lrd/errors.hpp"

namespace lrd {

namespace {

constexpr float kNormEps = 1e-5f;

Matrix ones_row(std::size_t n) {
  Matrix m(1, n);
  m.fill(1.0f);
  return m;
}

void add_inplace(Matrix& acc, const Matrix& x) {
  auto a = acc.data();
  auto b = x.data();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

}  // namespace

void ModelConfig::validate() const {
  if (vocab == 0 || d_model == 0 || n_heads == 0 || d_ff == 0 || max_seq == 0) {
    throw ConfigError("model config: dimensions must be positive");
  }
  if (d_model % n_heads != 0) {
    throw ConfigError("model config: d_model " + std::to_string(d_model) +
                      " is not divisible by n_heads " + std::to_string(n_heads));
  }
}

std::string_view to_string(MatrixName name) {
  switch (name) {
    case MatrixName::kQ: return "q_proj";
    case MatrixName::kK: return "k_proj";
    case MatrixName::kV: return "v_proj";
    case MatrixName::kO: return "o_proj";
    case MatrixName::kGate: return "gate_proj";
    case MatrixName::kUp: return "up_proj";
    case MatrixName::kDown: return "down_proj";
  }
  return "?";
}

std::optional<MatrixName> parse_matrix_name(std::string_view text) {
  for (MatrixName n : kMatrixNames) {
    if (to_string(n) == text) return n;
  }
  return std::nullopt;
}

std::pair<std::size_t, std::size_t> matrix_shape(const ModelConfig& cfg, MatrixName name) {
  switch (name) {
    case MatrixName::kGate:
    case MatrixName::kUp: return {cfg.d_ff, cfg.d_model};
    case MatrixName::kDown: return {cfg.d_model, cfg.d_ff};
    default: return {cfg.d_model, cfg.d_model};
  }
}

std::size_t weight_rows(const Weight& w) {
  return std::visit([](const auto& m) { return m.rows(); }, w);
}

std::size_t weight_cols(const Weight& w) {
  return std::visit([](const auto& m) { return m.cols(); }, w);
}

std::size_t weight_params(const Weight& w) {
  if (const auto* f = std::get_if<LowRankFactor>(&w)) return f->param_count();
  return std::get<Matrix>(w).size();
}

bool is_factored(const Weight& w) { return std::holds_alternative<LowRankFactor>(w); }

Matrix dense(const Weight& w) {
  if (const auto* f = std::get_if<LowRankFactor>(&w)) return f->product();
  return std::get<Matrix>(w);
}

std::size_t weight_flops(const Weight& w) {
  if (const auto* f = std::get_if<LowRankFactor>(&w)) {
    return 2 * f->rank() * (f->rows() + f->cols());
  }
  const auto& m = std::get<Matrix>(w);
  return 2 * m.rows() * m.cols();
}

void apply_weight(const Weight& w, const Matrix& x, Matrix& out) {
  if (const auto* f = std::get_if<LowRankFactor>(&w)) {
    Matrix thin;
    gemm(thin, x, false, f->b, true);
    gemm(out, thin, false, f->a, true);
    return;
  }
  gemm(out, x, false, std::get<Matrix>(w), true);
}

bool LayerWeights::any_factored() const {
  return std::any_of(proj.begin(), proj.end(), [](const Weight& w) { return is_factored(w); });
}

Model init_model(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  constexpr float kStd = 0.02f;
  const float out_std = kStd / std::sqrt(2.0f * static_cast<float>(std::max<std::size_t>(cfg.n_layers, 1)));
  auto normal = [&](std::size_t r, std::size_t c, float std) {
    Matrix m = randn(r, c, rng);
    for (float& v : m.data()) v *= std;
    return m;
  };
  Model model;
  model.config = cfg;
  model.tok_embed = normal(cfg.vocab, cfg.d_model, kStd);
  model.pos_embed = normal(cfg.max_seq, cfg.d_model, kStd);
  model.layers.reserve(cfg.n_layers);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    LayerWeights layer;
    for (MatrixName n : kMatrixNames) {
      const auto [r, c] = matrix_shape(cfg, n);
      const bool output = (n == MatrixName::kO || n == MatrixName::kDown);
      layer[n] = normal(r, c, output ? out_std : kStd);
    }
    layer.attn_norm = ones_row(cfg.d_model);
    layer.mlp_norm = ones_row(cfg.d_model);
    model.layers.push_back(std::move(layer));
  }
  model.final_norm = ones_row(cfg.d_model);
  model.head = normal(cfg.vocab, cfg.d_model, kStd);
  return model;
}

void validate_batch(const ModelConfig& cfg, const TokenBatch& tokens) {
  if (tokens.batch == 0 || tokens.seq_len == 0) {
    throw InputError("token batch is empty");
  }
  if (tokens.ids.size() != tokens.batch * tokens.seq_len) {
    throw InputError("token batch holds " + std::to_string(tokens.ids.size()) +
                     " ids, expected " + std::to_string(tokens.batch * tokens.seq_len));
  }
  if (tokens.seq_len > cfg.max_seq) {
    throw InputError("sequence length " + std::to_string(tokens.seq_len) +
                     " exceeds max_seq " + std::to_string(cfg.max_seq));
  }
  for (auto id : tokens.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab) {
      throw InputError("token id " + std::to_string(id) + " outside vocabulary of " +
                       std::to_string(cfg.vocab));
    }
  }
}

Matrix embed(const Model& model, const TokenBatch& tokens) {
  validate_batch(model.config, tokens);
  const std::size_t d = model.config.d_model;
  Matrix x(tokens.ids.size(), d);
  for (std::size_t row = 0; row < tokens.ids.size(); ++row) {
    const auto tok = model.tok_embed.row(static_cast<std::size_t>(tokens.ids[row]));
    const auto pos = model.pos_embed.row(row % tokens.seq_len);
    auto out = x.row(row);
    for (std::size_t j = 0; j < d; ++j) out[j] = tok[j] + pos[j];
  }
  return x;
}

Matrix layer_forward(const LayerWeights& layer, const Matrix& x, const ModelConfig& cfg,
                     std::size_t seq_len) {
  if (x.cols() != cfg.d_model) {
    throw DimensionError("layer_forward: input width " + std::to_string(x.cols()) +
                         " but d_model is " + std::to_string(cfg.d_model));
  }
  Matrix h, q, k, v, attn, proj;
  kernels::rmsnorm(x, layer.attn_norm, kNormEps, h, nullptr);
  apply_weight(layer[MatrixName::kQ], h, q);
  apply_weight(layer[MatrixName::kK], h, k);
  apply_weight(layer[MatrixName::kV], h, v);
  kernels::causal_attention(q, k, v, cfg.n_heads, seq_len, attn, nullptr);
  apply_weight(layer[MatrixName::kO], attn, proj);
  Matrix y = x;
  add_inplace(y, proj);

  Matrix gate, up, act;
  kernels::rmsnorm(y, layer.mlp_norm, kNormEps, h, nullptr);
  apply_weight(layer[MatrixName::kGate], h, gate);
  apply_weight(layer[MatrixName::kUp], h, up);
  kernels::silu(gate, act);
  auto a = act.data();
  auto u = up.data();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= u[i];
  apply_weight(layer[MatrixName::kDown], act, proj);
  add_inplace(y, proj);
  return y;
}

Matrix logits_from_hidden(const Model& model, const Matrix& hidden) {
  Matrix h, logits;
  kernels::rmsnorm(hidden, model.final_norm, kNormEps, h, nullptr);
  gemm(logits, h, false, model.head, true);
  return logits;
}

ForwardResult forward_with_taps(const Model& model, const TokenBatch& tokens) {
  ForwardResult out;
  Matrix x = embed(model, tokens);
  out.taps.reserve(model.layers.size());
  for (const auto& layer : model.layers) {
    x = layer_forward(layer, x, model.config, tokens.seq_len);
    out.taps.push_back(x);
  }
  out.logits = logits_from_hidden(model, x);
  return out;
}

Matrix forward_logits(const Model& model, const TokenBatch& tokens) {
  Matrix x = embed(model, tokens);
  for (const auto& layer : model.layers) x = layer_forward(layer, x, model.config, tokens.seq_len);
  return logits_from_hidden(model, x);
}

std::vector<Matrix> forward_prefix(const Model& model, const TokenBatch& tokens,
                                   std::size_t depth) {
  if (depth > model.layers.size()) {
    throw DimensionError("forward_prefix: depth " + std::to_string(depth) + " exceeds " +
                         std::to_string(model.layers.size()) + " layers");
  }
  std::vector<Matrix> acts;
  acts.reserve(depth + 1);
  acts.push_back(embed(model, tokens));
  for (std::size_t l = 0; l < depth; ++l) {
    acts.push_back(layer_forward(model.layers[l], acts.back(), model.config, tokens.seq_len));
  }
  return acts;
}

void replace_matrix(Model& model, std::size_t layer, MatrixName name, LowRankFactor factor) {
  if (layer >= model.layers.size()) {
    throw DimensionError("replace_matrix: layer " + std::to_string(layer) +
                         " does not exist (model has " +
                         std::to_string(model.layers.size()) + ")");
  }
  Weight& slot = model.layers[layer][name];
  const std::string where =
      "layer " + std::to_string(layer) + " " + std::string(to_string(name));
  if (is_factored(slot)) throw StateError("replace_matrix: " + where + " is already factored");
  const auto& w = std::get<Matrix>(slot);
  if (factor.a.rows() != w.rows() || factor.b.cols() != w.cols() ||
      factor.a.cols() != factor.b.rows()) {
    throw DimensionError("replace_matrix: factor " + factor.a.shape_string() + " x " +
                         factor.b.shape_string() + " does not match " + where + " " +
                         w.shape_string());
  }
  if (factor.rank() == 0 || !saves_parameters(factor.rank(), w.rows(), w.cols())) {
    throw RankError("replace_matrix: rank " + std::to_string(factor.rank()) +
                    " does not reduce the parameter count of " + where);
  }
  slot = std::move(factor);
}

std::size_t count_layer_params(const LayerWeights& layer) {
  std::size_t n = layer.attn_norm.size() + layer.mlp_norm.size();
  for (const auto& w : layer.proj) n += weight_params(w);
  return n;
}

std::size_t count_params(const Model& model) {
  std::size_t n = model.tok_embed.size() + model.pos_embed.size() + model.final_norm.size() +
                  model.head.size();
  for (const auto& layer : model.layers) n += count_layer_params(layer);
  return n;
}

std::size_t count_params(const ModelConfig& cfg) {
  const std::size_t d = cfg.d_model;
  const std::size_t per_layer = 4 * d * d + 3 * d * cfg.d_ff + 2 * d;
  return cfg.n_layers * per_layer + 2 * cfg.vocab * d + cfg.max_seq * d + d;
}

ad::Var build_layer_graph(ad::Tape& tape, LayerWeights& layer, ad::Var x,
                          const ModelConfig& cfg, std::size_t seq_len, Trainable which,
                          std::vector<ParamRef>* params, const std::string& prefix,
                          std::map<const Matrix*, ad::Var>* leaves) {
  auto leaf = [&](Matrix& m, bool trainable, const std::string& name) {
    if (leaves) {
      if (auto it = leaves->find(&m); it != leaves->end()) return it->second;
    }
    ad::Var v;
    if (trainable) {
      v = tape.parameter(&m);
      if (params) params->push_back({v, &m, prefix + name});
    } else {
      v = tape.constant(&m);
    }
    if (leaves) leaves->emplace(&m, v);
    return v;
  };
  // Factored weights become two leaves, applied as (x B^T) A^T.
  struct Linear {
    ad::Var first;
    ad::Var second;
    bool factored;
  };
  auto linear = [&](MatrixName n) {
    Weight& w = layer[n];
    const std::string name(to_string(n));
    if (auto* f = std::get_if<LowRankFactor>(&w)) {
      const bool t = which != Trainable::kNone;
      return Linear{leaf(f->b, t, name + ".b"), leaf(f->a, t, name + ".a"), true};
    }
    auto& m = std::get<Matrix>(w);
    return Linear{leaf(m, which == Trainable::kAll, name), ad::Var{}, false};
  };
  auto apply = [&](const Linear& lin, ad::Var in) {
    ad::Var y = tape.matmul(in, lin.first, true);
    return lin.factored ? tape.matmul(y, lin.second, true) : y;
  };

  const bool norms = which == Trainable::kAll;
  ad::Var attn_gain = leaf(layer.attn_norm, norms, "attn_norm");
  ad::Var mlp_gain = leaf(layer.mlp_norm, norms, "mlp_norm");

  ad::Var h = tape.rmsnorm(x, attn_gain, kNormEps);
  ad::Var q = apply(linear(MatrixName::kQ), h);
  ad::Var k = apply(linear(MatrixName::kK), h);
  ad::Var v = apply(linear(MatrixName::kV), h);
  ad::Var attn = tape.causal_attention(q, k, v, cfg.n_heads, seq_len);
  ad::Var y = tape.add(x, apply(linear(MatrixName::kO), attn));

  ad::Var h2 = tape.rmsnorm(y, mlp_gain, kNormEps);
  ad::Var gate = apply(linear(MatrixName::kGate), h2);
  ad::Var up = apply(linear(MatrixName::kUp), h2);
  ad::Var act = tape.hadamard(tape.silu(gate), up);
  return tape.add(y, apply(linear(MatrixName::kDown), act));
}

}  // namespace lrd
