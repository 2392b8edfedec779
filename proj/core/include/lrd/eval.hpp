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

// Perplexity, activation fidelity, stable-rank diagnostics, parameter and FLOP
// accounting, and forward throughput.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lrd/model.hpp"

namespace lrd {

struct PerplexityResult {
  double perplexity = 0.0;
  double mean_nll = 0.0;
  std::size_t tokens = 0;  // number of predicted targets
};

/// Teacher-forced next-token perplexity over non-overlapping windows of
/// `seq_len` inputs (the last window may be shorter). Windows are grouped
/// `windows_per_batch` at a time; the result does not depend on the grouping
/// beyond float rounding. Throws DataError for spans shorter than 2 tokens.
PerplexityResult perplexity(const Model& model, std::span<const std::int32_t> tokens,
                            std::size_t seq_len, std::size_t windows_per_batch = 8);

struct SrankRow {
  std::string kind;  // "weight" or "activation"
  std::size_t layer = 0;
  std::string name;  // matrix name, or "output" for activations
  std::size_t rows = 0;
  std::size_t cols = 0;
  double srank = 0.0;
};

/// Stable rank of every projection (factors as their product) and of each
/// layer's output activation over the probe batch.
std::vector<SrankRow> srank_report(const Model& model, const TokenBatch& probe);
std::string srank_csv(const std::vector<SrankRow>& rows);

/// Analytic multiply-add count (times two) for one token with `context`
/// visible positions: projections, attention scores and mixing, output head.
std::size_t flops_per_token(const Model& model, std::size_t context);
/// Same with context = max_seq.
std::size_t flops_per_token(const Model& model);
/// Contribution of one layer; flops_per_token sums these plus the head.
std::size_t layer_flops(const LayerWeights& layer, const ModelConfig& cfg, std::size_t context);

struct ThroughputResult {
  double median_tokens_per_second = 0.0;
  double iqr_tokens_per_second = 0.0;
  std::vector<double> samples;  // tokens/s of each timed repetition
};

/// Wall-clock forward throughput on one batch after `warmup` untimed passes.
ThroughputResult throughput(const Model& model, const TokenBatch& batch, std::size_t warmup = 2,
                            std::size_t reps = 5);

struct LayerFidelity {
  std::size_t layer = 0;
  double cosine = 0.0;  // mean per-token cosine to the reference
  double l1 = 0.0;      // mean absolute error per element
};

/// Compares each layer's output activation with the reference model's.
std::vector<LayerFidelity> activation_fidelity(const Model& reference, const Model& model,
                                               const TokenBatch& probe);

struct EvalReport {
  std::string label;
  double perplexity = 0.0;
  std::size_t params = 0;
  std::size_t dense_params = 0;
  std::size_t flops_per_token = 0;
  double tokens_per_second = 0.0;
  std::vector<LayerFidelity> fidelity;
};

/// One row per (report, layer); summary columns repeat on every row. Reports
/// without fidelity data get a single row with an empty layer column.
std::string eval_csv(const std::vector<EvalReport>& reports);
std::string eval_table(const std::vector<EvalReport>& reports);

}  // namespace lrd
