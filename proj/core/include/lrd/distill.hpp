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

// Local distillation of compressed layers. Each compressed layer i is trained
// on its own against the teacher's output activation Y_i:
//
//   L(Y, Yhat) = sum_t [ (1/D) |Y_t - Yhat_t|_1 - log sigmoid(cos(Y_t, Yhat_t)) ]
//
// with the student layer fed either the teacher's previous activation
// (teacher), the student stack's previous activation (student), or both with
// the two losses summed (joint). Inputs are treated as constants, so no
// gradient crosses a layer boundary, and each layer has its own optimizer.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lrd/autodiff.hpp"
#include "lrd/data.hpp"
#include "lrd/model.hpp"
#include "lrd/ranker.hpp"

namespace lrd {

enum class FeedStrategy { kTeacher, kStudent, kJoint };
enum class InitMethod { kSvd, kRandom };

std::string_view to_string(FeedStrategy s);
std::string_view to_string(InitMethod m);
/// Throw ConfigError for unknown names.
FeedStrategy parse_feed_strategy(std::string_view text);
InitMethod parse_init_method(std::string_view text);

struct DistillConfig {
  FeedStrategy strategy = FeedStrategy::kJoint;
  double learning_rate = 8.6e-4;
  std::size_t batch_size = 8;
  std::size_t seq_len = 256;
  std::size_t token_budget = 0;
  std::size_t eval_interval = 100000;
  /// Held-out tokens used per perplexity evaluation; 0 means the whole span.
  std::size_t eval_tokens = 0;
  InitMethod init = InitMethod::kSvd;
  std::uint64_t seed = 0;
  /// Update compressed layers deepest-first. Only meaningful for the teacher
  /// strategy, where layers do not depend on each other.
  bool reverse_layer_order = false;

  /// Throws ConfigError on zero sizes or a negative learning rate.
  void validate() const;
};

struct AdamWHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// Moments for one group of parameters; allocated on the first update.
struct OptimizerState {
  AdamWHyper hyper;
  std::size_t step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

/// One decoupled-weight-decay Adam step with bias correction over a group of
/// parameters. Throws DimensionError if shapes disagree with each other or
/// with moments from earlier steps.
void adamw_update(std::span<Matrix* const> params, std::span<const Matrix* const> grads,
                  OptimizerState& state, double lr);

/// Copies the teacher and factors every planned matrix, by truncated SVD or
/// by a seeded random draw (A ~ N(0, 1/r), B ~ N(0, 1/d2)).
Model init_students(const Model& teacher, const RankPlan& plan, InitMethod init,
                    std::uint64_t seed = 0);

/// Reference value of the per-layer loss, computed directly in double.
/// Throws DimensionError on mismatched shapes.
double token_loss(const Matrix& y_teacher, const Matrix& y_student);

struct LayerLoss {
  std::size_t layer = 0;
  double teacher_feed = 0.0;  // L_T; 0 when the strategy does not use it
  double student_feed = 0.0;  // L_S; 0 when the strategy does not use it
  double total = 0.0;         // the optimized loss
};

/// Owns a student model and the per-layer graphs and optimizers that train it.
class Distiller {
 public:
  /// The student must share the teacher's config; its factored matrices define
  /// the compressed layers. Throws ConfigError if there are none.
  Distiller(const Model& teacher, Model student, const DistillConfig& config);
  ~Distiller();
  Distiller(const Distiller&) = delete;
  Distiller& operator=(const Distiller&) = delete;

  /// One optimization step on every compressed layer; returns the losses
  /// measured before the update.
  std::vector<LayerLoss> step(const TokenBatch& batch);
  /// Losses on a batch without updating anything.
  std::vector<LayerLoss> evaluate(const TokenBatch& batch);

  const std::vector<std::size_t>& compressed_layers() const noexcept { return layers_; }
  const Model& student() const noexcept;
  Model release();

 private:
  struct LayerGraph;
  std::vector<LayerLoss> run(const TokenBatch& batch, bool update);

  const Model* teacher_;
  std::unique_ptr<Model> student_;
  DistillConfig config_;
  std::vector<std::size_t> layers_;
  std::vector<std::unique_ptr<LayerGraph>> graphs_;
  std::size_t graph_seq_len_ = 0;
};

struct DistillRecord {
  std::size_t tokens_seen = 0;
  std::vector<LayerLoss> losses;  // mean over steps since the previous record
  double held_out_ppl = 0.0;
};

struct DistillReport {
  std::vector<DistillRecord> records;
  std::size_t tokens_seen = 0;
  /// The data source ran dry before the budget was spent.
  bool truncated = false;
  Model model;
};

using DistillProgress = std::function<void(const DistillRecord&)>;

/// Initializes students from the plan, then distills them.
DistillReport run_distillation(const Model& teacher, const RankPlan& plan, BatchSource& data,
                               std::span<const std::int32_t> held_out,
                               const DistillConfig& config, const DistillProgress& progress = {});
/// Distills an already-compressed student.
DistillReport run_distillation(const Model& teacher, Model student, BatchSource& data,
                               std::span<const std::int32_t> held_out,
                               const DistillConfig& config, const DistillProgress& progress = {});

/// `tokens_seen,layer_index,loss,held_out_ppl`, one row per record and layer.
std::string distill_csv(const DistillReport& report);

}  // namespace lrd
