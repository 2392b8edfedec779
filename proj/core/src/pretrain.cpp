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

#include "lrd/pretrain.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include "lrd/errors.hpp"
#include "lrd/eval.hpp"

namespace lrd {

void PretrainConfig::validate() const {
  if (batch_size == 0 || seq_len == 0) throw ConfigError("pretrain: batch size and seq_len must be positive");
  if (eval_interval == 0) throw ConfigError("pretrain: eval interval must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("pretrain: learning rate must be positive");
  }
  if (min_lr_ratio < 0.0 || min_lr_ratio > 1.0) throw ConfigError("pretrain: min_lr_ratio must lie in [0, 1]");
  if (weight_decay < 0.0 || grad_clip < 0.0) throw ConfigError("pretrain: weight decay and clip must be non-negative");
}

double pretrain_lr(const PretrainConfig& cfg, std::size_t step, std::size_t total_steps) {
  if (step < cfg.warmup_steps) {
    return cfg.learning_rate * static_cast<double>(step + 1) / static_cast<double>(cfg.warmup_steps);
  }
  const std::size_t span = total_steps > cfg.warmup_steps ? total_steps - cfg.warmup_steps : 1;
  const double progress =
      std::min(1.0, static_cast<double>(step - cfg.warmup_steps) / static_cast<double>(span));
  const double lo = cfg.learning_rate * cfg.min_lr_ratio;
  return lo + 0.5 * (cfg.learning_rate - lo) * (1.0 + std::cos(std::numbers::pi * progress));
}

PretrainResult pretrain(const ModelConfig& model_cfg, const Corpus& corpus,
                        const PretrainConfig& cfg,
                        const std::function<void(const PretrainRecord&)>& progress) {
  cfg.validate();
  model_cfg.validate();
  if (cfg.seq_len > model_cfg.max_seq) {
    throw ConfigError("pretrain: seq_len " + std::to_string(cfg.seq_len) + " exceeds max_seq " +
                      std::to_string(model_cfg.max_seq));
  }
  Rng init_rng(cfg.seed);
  PretrainResult result;
  result.model = init_model(model_cfg, init_rng);
  Model& model = result.model;

  // Data draws use a stream separate from initialization.
  RandomBatches batches(corpus, cfg.batch_size, cfg.seq_len, cfg.seed ^ 0x5DEECE66DULL, true);

  ad::Tape tape;
  std::vector<ParamRef> params;
  auto param = [&](Matrix& m, const std::string& name) {
    const ad::Var v = tape.parameter(&m);
    params.push_back({v, &m, name});
    return v;
  };
  const ad::Var ids = tape.index_input("ids");
  const ad::Var pos = tape.index_input("pos");
  const ad::Var targets = tape.index_input("targets");
  ad::Var x = tape.add(tape.embedding(ids, param(model.tok_embed, "tok_embed")),
                       tape.embedding(pos, param(model.pos_embed, "pos_embed")));
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    x = build_layer_graph(tape, model.layers[l], x, model_cfg, cfg.seq_len, Trainable::kAll,
                          &params, "layers." + std::to_string(l) + ".");
  }
  const ad::Var h = tape.rmsnorm(x, param(model.final_norm, "final_norm"));
  const ad::Var logits = tape.matmul(h, param(model.head, "head"), true);
  tape.cross_entropy(logits, targets);

  // Norm gains are not decayed.
  std::vector<Matrix*> decayed, plain;
  std::vector<const Matrix*> decayed_g, plain_g;
  for (const ParamRef& p : params) {
    if (p.storage->rows() == 1) {
      plain.push_back(p.storage);
      plain_g.push_back(&tape.grad(p.var));
    } else {
      decayed.push_back(p.storage);
      decayed_g.push_back(&tape.grad(p.var));
    }
  }
  OptimizerState opt_decayed, opt_plain;
  opt_decayed.hyper.weight_decay = cfg.weight_decay;
  opt_plain.hyper.weight_decay = 0.0;

  std::vector<std::int32_t> positions(cfg.batch_size * cfg.seq_len);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    positions[i] = static_cast<std::int32_t>(i % cfg.seq_len);
  }

  auto held_out = corpus.held_out();
  if (cfg.eval_tokens > 0 && held_out.size() > cfg.eval_tokens + 1) {
    held_out = held_out.first(cfg.eval_tokens + 1);
  }
  auto evaluate = [&] {
    if (held_out.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    return perplexity(model, held_out, cfg.seq_len).perplexity;
  };
  auto emit = [&](PretrainRecord r) {
    result.records.push_back(r);
    if (progress) progress(r);
  };

  const std::size_t tokens_per_step = cfg.batch_size * cfg.seq_len;
  const std::size_t total_steps = (cfg.token_budget + tokens_per_step - 1) / tokens_per_step;
  emit({0, 0, 0.0, std::numeric_limits<double>::quiet_NaN(), evaluate()});

  double loss_sum = 0.0;
  std::size_t loss_count = 0;
  std::size_t tokens = 0;
  std::size_t next_eval = cfg.eval_interval;
  double lr = 0.0;
  for (std::size_t step = 0; step < total_steps; ++step) {
    const Batch batch = *batches.next();
    ad::Feed feed;
    feed.indices["ids"] = &batch.tokens.ids;
    feed.indices["pos"] = &positions;
    feed.indices["targets"] = &batch.targets;
    const double loss = tape.forward(feed);
    if (!std::isfinite(loss)) {
      throw NumericalError("pretrain: loss is not finite at step " + std::to_string(step), loss);
    }
    tape.backward();

    if (cfg.grad_clip > 0.0) {
      double sq = 0.0;
      for (const ParamRef& p : params) {
        for (float g : tape.grad(p.var).data()) sq += static_cast<double>(g) * g;
      }
      const double norm = std::sqrt(sq);
      if (norm > cfg.grad_clip) {
        const auto factor = static_cast<float>(cfg.grad_clip / norm);
        for (const ParamRef& p : params) {
          for (float& g : tape.grad(p.var).data()) g *= factor;
        }
      }
    }
    lr = pretrain_lr(cfg, step, total_steps);
    adamw_update(decayed, decayed_g, opt_decayed, lr);
    adamw_update(plain, plain_g, opt_plain, lr);

    loss_sum += loss;
    ++loss_count;
    tokens += tokens_per_step;
    if (tokens >= next_eval || step + 1 == total_steps) {
      emit({tokens, step + 1, lr, loss_sum / static_cast<double>(loss_count), evaluate()});
      loss_sum = 0.0;
      loss_count = 0;
      while (next_eval <= tokens) next_eval += cfg.eval_interval;
    }
  }
  return result;
}

std::string pretrain_csv(const std::vector<PretrainRecord>& records) {
  std::ostringstream out;
  out << "tokens_seen,step,lr,train_loss,held_out_ppl\n";
  char buf[160];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.9g,%.9g,%.9g\n", r.tokens_seen, r.step,
                  r.learning_rate, r.train_loss, r.held_out_ppl);
    out << buf;
  }
  return out.str();
}

}  // namespace lrd
