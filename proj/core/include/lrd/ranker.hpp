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

// Rank allocation. Plans are computed from shape metadata alone, so a plan can
// be produced before any weights are loaded.
//
// Bottom-first allocation: every compressible matrix contributes candidate
// ranks k, k+m, ... up to min(d1, d2) that strictly save parameters. The
// candidates are sorted by layer (ascending), then rank (descending), then the
// canonical matrix order, and popped one at a time until the model fits the
// target size. Popping a candidate for an already-factored matrix re-factors it
// from the original weight at the smaller rank, so a layer is driven down to
// rank k before the next layer is touched. Top-first reverses the layer order.

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "lrd/model.hpp"

namespace lrd {

struct MatrixShape {
  std::size_t layer = 0;
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

struct ModelShape {
  std::size_t n_layers = 0;
  /// Compressible (currently dense) matrices in canonical order.
  std::vector<MatrixShape> matrices;
  /// Current parameter count of the whole model.
  std::size_t total_params = 0;
  /// Token + positional embeddings.
  std::size_t embedding_params = 0;
  /// Final norm + output head.
  std::size_t head_params = 0;
  /// Current parameter count of each layer.
  std::vector<std::size_t> layer_params;
};

ModelShape shape_of(const ModelConfig& cfg);
/// Only dense projections are listed as compressible.
ModelShape shape_of(const Model& model);

enum class Strategy { kBottom, kTop, kUniform };
std::string_view to_string(Strategy s);
/// Throws ConfigError for unknown names.
Strategy parse_strategy(std::string_view text);

struct PlanEntry {
  std::size_t layer = 0;
  std::string matrix;
  std::size_t rank = 0;
  friend bool operator==(const PlanEntry&, const PlanEntry&) = default;
};

struct RankPlan {
  Strategy strategy = Strategy::kBottom;
  std::size_t min_rank = 0;   // k
  std::size_t rank_step = 0;  // m
  std::size_t target_size = 0;
  double reduction = 0.0;
  /// Final rank per matrix, in the order matrices were first compressed.
  std::vector<PlanEntry> entries;
};

/// floor((1 - reduction) * total), the size a reduction fraction targets.
std::size_t target_from_reduction(std::size_t total, double reduction);

/// Throws InfeasibleTargetError when even rank k everywhere cannot reach S,
/// ConfigError for k or m of zero. S >= total yields an empty plan.
RankPlan plan_bottom(const ModelShape& shape, std::size_t target_size, std::size_t min_rank,
                     std::size_t rank_step);
RankPlan plan_top(const ModelShape& shape, std::size_t target_size, std::size_t min_rank,
                  std::size_t rank_step);
/// Per matrix: the largest r >= 1 with r(d1+d2) <= (1-N) d1 d2 that also saves
/// parameters; matrices where no such r exists stay dense. Needs 0 < N < 1.
RankPlan plan_uniform(const ModelShape& shape, double reduction);

/// Parameter count after applying the plan.
std::size_t planned_size(const RankPlan& plan, const ModelShape& shape);

struct Footprint {
  std::size_t resident_layers = 0;
  std::size_t total_layers = 0;
  /// Teacher and student parameters that must be loaded while distilling.
  std::size_t resident_params = 0;
};
Footprint memory_footprint(const RankPlan& plan, const ModelShape& shape);

/// `#strategy k m S` header, then one `layer<TAB>matrix<TAB>rank` line per entry.
std::string format_plan(const RankPlan& plan);
/// Throws InputError on malformed text.
RankPlan parse_plan(std::string_view text);
void write_plan(const RankPlan& plan, const std::string& path);
RankPlan read_plan(const std::string& path);

/// Throws DimensionError if an entry names a matrix the shape does not have
/// or a rank that does not save parameters.
void check_plan(const RankPlan& plan, const ModelShape& shape);

}  // namespace lrd
