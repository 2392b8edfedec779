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

// Next-token pretraining of a dense model, used to produce teachers.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lrd/data.hpp"
#include "lrd/distill.hpp"
#include "lrd/model.hpp"

namespace lrd {

struct PretrainConfig {
  std::size_t token_budget = 1000000;
  std::size_t batch_size = 16;
  std::size_t seq_len = 256;
  double learning_rate = 2e-3;
  /// Cosine decay ends at learning_rate * min_lr_ratio.
  double min_lr_ratio = 0.1;
  std::size_t warmup_steps = 100;
  double weight_decay = 0.1;
  /// Global gradient-norm clip; 0 disables clipping.
  double grad_clip = 1.0;
  std::size_t eval_interval = 250000;
  /// Held-out tokens per evaluation; 0 means the whole span.
  std::size_t eval_tokens = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PretrainRecord {
  std::size_t tokens_seen = 0;
  std::size_t step = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;    // mean over steps since the previous record
  double held_out_ppl = 0.0;  // NaN when the held-out span is empty
};

struct PretrainResult {
  Model model;
  std::vector<PretrainRecord> records;
};

/// Learning rate at a step: linear warmup, then cosine decay.
double pretrain_lr(const PretrainConfig& cfg, std::size_t step, std::size_t total_steps);

/// Trains a freshly initialized model on random windows of the train span.
/// The first record is the untrained model.
PretrainResult pretrain(const ModelConfig& model_cfg, const Corpus& corpus,
                        const PretrainConfig& cfg,
                        const std::function<void(const PretrainRecord&)>& progress = {});

/// `tokens_seen,step,lr,train_loss,held_out_ppl`.
std::string pretrain_csv(const std::vector<PretrainRecord>& records);

}  // namespace lrd
