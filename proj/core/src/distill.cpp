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

#include "lrd/distill.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>

#include "lrd/errors.hpp"
#include "lrd/eval.hpp"
#include "lrd/linalg.hpp"

namespace lrd {

std::string_view to_string(FeedStrategy s) {
  switch (s) {
    case FeedStrategy::kTeacher: return "teacher";
    case FeedStrategy::kStudent: return "student";
    case FeedStrategy::kJoint: return "joint";
  }
  return "?";
}

std::string_view to_string(InitMethod m) {
  return m == InitMethod::kSvd ? "svd" : "random";
}

FeedStrategy parse_feed_strategy(std::string_view text) {
  if (text == "teacher") return FeedStrategy::kTeacher;
  if (text == "student") return FeedStrategy::kStudent;
  if (text == "joint") return FeedStrategy::kJoint;
  throw ConfigError("unknown distillation strategy '" + std::string(text) +
                    "' (expected teacher, student or joint)");
}

InitMethod parse_init_method(std::string_view text) {
  if (text == "svd") return InitMethod::kSvd;
  if (text == "random") return InitMethod::kRandom;
  throw ConfigError("unknown init method '" + std::string(text) + "' (expected svd or random)");
}

void DistillConfig::validate() const {
  if (batch_size == 0 || seq_len == 0) throw ConfigError("distill: batch size and seq_len must be positive");
  if (eval_interval == 0) throw ConfigError("distill: eval interval must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("distill: learning rate must be a finite non-negative number");
  }
}

void adamw_update(std::span<Matrix* const> params, std::span<const Matrix* const> grads,
                  OptimizerState& state, double lr) {
  if (params.size() != grads.size()) {
    throw DimensionError("adamw: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
  }
  if (state.m.empty()) {
    for (const Matrix* p : params) {
      state.m.emplace_back(p->rows(), p->cols());
      state.v.emplace_back(p->rows(), p->cols());
    }
  }
  if (state.m.size() != params.size()) {
    throw DimensionError("adamw: optimizer state holds " + std::to_string(state.m.size()) +
                         " moments but " + std::to_string(params.size()) + " parameters were given");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != grads[i]->rows() || params[i]->cols() != grads[i]->cols() ||
        params[i]->rows() != state.m[i].rows() || params[i]->cols() != state.m[i].cols()) {
      throw DimensionError("adamw: parameter " + std::to_string(i) + " " +
                           params[i]->shape_string() + " disagrees with gradient " +
                           grads[i]->shape_string() + " or its moments");
    }
  }
  const AdamWHyper& h = state.hyper;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  const double decay = 1.0 - lr * h.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    auto g = grads[i]->data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g[j];
      const double mj = h.beta1 * m[j] + (1.0 - h.beta1) * gj;
      const double vj = h.beta2 * v[j] + (1.0 - h.beta2) * gj * gj;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double step = lr * (mj / c1) / (std::sqrt(vj / c2) + h.eps);
      p[j] = static_cast<float>(static_cast<double>(p[j]) * decay - step);
    }
  }
}

Model init_students(const Model& teacher, const RankPlan& plan, InitMethod init,
                    std::uint64_t seed) {
  check_plan(plan, shape_of(teacher));
  Model student = teacher;
  Rng rng(seed);
  for (const PlanEntry& e : plan.entries) {
    const MatrixName name = *parse_matrix_name(e.matrix);
    const Matrix& w = std::get<Matrix>(teacher.layers[e.layer][name]);
    LowRankFactor f;
    if (init == InitMethod::kSvd) {
      f = truncate(svd(w), e.rank);
    } else {
      f.a = scale(randn(w.rows(), e.rank, rng), static_cast<float>(1.0 / std::sqrt(e.rank)));
      f.b = scale(randn(e.rank, w.cols(), rng), static_cast<float>(1.0 / std::sqrt(w.cols())));
    }
    replace_matrix(student, e.layer, name, std::move(f));
  }
  return student;
}

double token_loss(const Matrix& y_teacher, const Matrix& y_student) {
  if (y_teacher.rows() != y_student.rows() || y_teacher.cols() != y_student.cols()) {
    throw DimensionError("token_loss: " + y_teacher.shape_string() + " vs " +
                         y_student.shape_string());
  }
  const std::size_t d = y_teacher.cols();
  double total = 0.0;
  for (std::size_t t = 0; t < y_teacher.rows(); ++t) {
    const auto y = y_teacher.row(t);
    const auto p = y_student.row(t);
    double l1 = 0.0, dot = 0.0, ny = 0.0, np = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      l1 += std::abs(static_cast<double>(y[j]) - p[j]);
      dot += static_cast<double>(y[j]) * p[j];
      ny += static_cast<double>(y[j]) * y[j];
      np += static_cast<double>(p[j]) * p[j];
    }
    const double cos = (ny > 0.0 && np > 0.0) ? dot / std::sqrt(ny * np) : 0.0;
    total += l1 / static_cast<double>(d) + std::log1p(std::exp(-cos));
  }
  return total;
}

// ---------------------------------------------------------------------------

struct Distiller::LayerGraph {
  std::size_t layer = 0;
  ad::Tape tape;
  std::vector<ParamRef> params;
  std::optional<ad::Var> loss_t;
  std::optional<ad::Var> loss_s;
  std::optional<ad::Var> out_s;
  OptimizerState opt;
};

Distiller::Distiller(const Model& teacher, Model student, const DistillConfig& config)
    : teacher_(&teacher), student_(std::make_unique<Model>(std::move(student))), config_(config) {
  config_.validate();
  if (!(teacher.config == student_->config)) {
    throw DimensionError("distill: teacher and student configs differ");
  }
  for (std::size_t l = 0; l < student_->layers.size(); ++l) {
    if (student_->layers[l].any_factored()) layers_.push_back(l);
  }
  if (layers_.empty()) throw ConfigError("distill: the student has no compressed layers");
  for (std::size_t l : layers_) {
    auto g = std::make_unique<LayerGraph>();
    g->layer = l;
    graphs_.push_back(std::move(g));
  }
}

Distiller::~Distiller() = default;

const Model& Distiller::student() const noexcept { return *student_; }

Model Distiller::release() {
  graphs_.clear();
  return std::move(*student_);
}

std::vector<LayerLoss> Distiller::step(const TokenBatch& batch) { return run(batch, true); }
std::vector<LayerLoss> Distiller::evaluate(const TokenBatch& batch) { return run(batch, false); }

std::vector<LayerLoss> Distiller::run(const TokenBatch& batch, bool update) {
  if (graphs_.empty()) throw StateError("distill: student already released");
  validate_batch(student_->config, batch);
  const bool use_t = config_.strategy != FeedStrategy::kStudent;
  const bool use_s = config_.strategy != FeedStrategy::kTeacher;

  if (graph_seq_len_ != batch.seq_len) {
    // Graphs bake in seq_len for attention; optimizer state carries over.
    for (auto& g : graphs_) {
      g->tape = ad::Tape();
      g->params.clear();
      std::map<const Matrix*, ad::Var> leaves;
      LayerWeights& weights = student_->layers[g->layer];
      const ad::Var y = g->tape.input("y");
      auto branch = [&](const char* input) {
        const ad::Var x = g->tape.input(input);
        const ad::Var out = build_layer_graph(g->tape, weights, x, student_->config, batch.seq_len,
                                              Trainable::kFactors, &g->params, "", &leaves);
        const ad::Var loss = g->tape.add(g->tape.l1_mean(y, out), g->tape.cosine_logsig(y, out));
        return std::make_pair(out, loss);
      };
      g->loss_t.reset();
      g->loss_s.reset();
      g->out_s.reset();
      if (use_t) g->loss_t = branch("x_t").second;
      if (use_s) {
        auto [out, loss] = branch("x_s");
        g->out_s = out;
        g->loss_s = loss;
      }
      if (use_t && use_s) g->tape.add(*g->loss_t, *g->loss_s);
    }
    graph_seq_len_ = batch.seq_len;
  }

  const std::size_t deepest = layers_.back();
  // acts[j] is the input of layer j, acts[j + 1] its teacher output.
  const std::vector<Matrix> acts = forward_prefix(*teacher_, batch, deepest + 1);

  std::vector<LayerLoss> losses;
  losses.reserve(graphs_.size());
  auto train_layer = [&](LayerGraph& g, const Matrix* student_in) -> const Matrix* {
    ad::Feed feed;
    feed.matrices["y"] = &acts[g.layer + 1];
    if (use_t) feed.matrices["x_t"] = &acts[g.layer];
    if (use_s) feed.matrices["x_s"] = student_in;
    const double total = g.tape.forward(feed);
    LayerLoss l;
    l.layer = g.layer;
    if (g.loss_t) l.teacher_feed = g.tape.value(*g.loss_t)(0, 0);
    if (g.loss_s) l.student_feed = g.tape.value(*g.loss_s)(0, 0);
    l.total = total;
    if (!std::isfinite(total)) {
      throw NumericalError("distill: layer " + std::to_string(g.layer) + " loss is not finite",
                           total);
    }
    losses.push_back(l);
    if (update) {
      g.tape.backward();
      std::vector<Matrix*> params;
      std::vector<const Matrix*> grads;
      for (const ParamRef& p : g.params) {
        params.push_back(p.storage);
        grads.push_back(&g.tape.grad(p.var));
      }
      adamw_update(params, grads, g.opt, config_.learning_rate);
    }
    return g.out_s ? &g.tape.value(*g.out_s) : nullptr;
  };

  if (!use_s) {
    if (config_.reverse_layer_order) {
      for (auto it = graphs_.rbegin(); it != graphs_.rend(); ++it) train_layer(**it, nullptr);
      std::reverse(losses.begin(), losses.end());
    } else {
      for (auto& g : graphs_) train_layer(*g, nullptr);
    }
    return losses;
  }

  // Student stream: uncompressed layers pass the student's own activation
  // through unchanged teacher weights.
  Matrix carried;
  const Matrix* current = &acts[0];
  std::size_t next = 0;
  for (std::size_t j = 0; j <= deepest; ++j) {
    if (next < graphs_.size() && graphs_[next]->layer == j) {
      current = train_layer(*graphs_[next], current);
      ++next;
    } else {
      carried = layer_forward(student_->layers[j], *current, student_->config, batch.seq_len);
      current = &carried;
    }
  }
  return losses;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<LayerLoss> mean_losses(const std::vector<LayerLoss>& sum, std::size_t count) {
  std::vector<LayerLoss> out = sum;
  if (count == 0) return out;
  const double n = static_cast<double>(count);
  for (auto& l : out) {
    l.teacher_feed /= n;
    l.student_feed /= n;
    l.total /= n;
  }
  return out;
}

}  // namespace

DistillReport run_distillation(const Model& teacher, const RankPlan& plan, BatchSource& data,
                               std::span<const std::int32_t> held_out,
                               const DistillConfig& config, const DistillProgress& progress) {
  config.validate();
  return run_distillation(teacher, init_students(teacher, plan, config.init, config.seed), data,
                          held_out, config, progress);
}

DistillReport run_distillation(const Model& teacher, Model student, BatchSource& data,
                               std::span<const std::int32_t> held_out,
                               const DistillConfig& config, const DistillProgress& progress) {
  Distiller distiller(teacher, std::move(student), config);
  if (config.eval_tokens > 0 && held_out.size() > config.eval_tokens + 1) {
    held_out = held_out.first(config.eval_tokens + 1);
  }
  const std::size_t eval_seq = std::min(config.seq_len, teacher.config.max_seq);
  auto held_out_ppl = [&] { return perplexity(distiller.student(), held_out, eval_seq).perplexity; };

  DistillReport report;
  auto emit = [&](DistillRecord r) {
    report.records.push_back(std::move(r));
    if (progress) progress(report.records.back());
  };

  std::optional<Batch> pending = data.next();
  {
    DistillRecord first;
    first.tokens_seen = 0;
    if (pending) first.losses = distiller.evaluate(pending->tokens);
    first.held_out_ppl = held_out_ppl();
    emit(std::move(first));
  }

  std::vector<LayerLoss> sum;
  std::size_t steps_since = 0;
  std::size_t next_eval = config.eval_interval;
  while (report.tokens_seen < config.token_budget) {
    std::optional<Batch> batch = pending ? std::move(pending) : data.next();
    pending.reset();
    if (!batch) {
      report.truncated = true;
      break;
    }
    const auto losses = distiller.step(batch->tokens);
    if (sum.empty()) {
      sum = losses;
    } else {
      for (std::size_t i = 0; i < sum.size(); ++i) {
        sum[i].teacher_feed += losses[i].teacher_feed;
        sum[i].student_feed += losses[i].student_feed;
        sum[i].total += losses[i].total;
      }
    }
    ++steps_since;
    report.tokens_seen += batch->tokens.ids.size();
    if (report.tokens_seen >= next_eval) {
      emit({report.tokens_seen, mean_losses(sum, steps_since), held_out_ppl()});
      sum.clear();
      steps_since = 0;
      while (next_eval <= report.tokens_seen) next_eval += config.eval_interval;
    }
  }
  if (steps_since > 0) emit({report.tokens_seen, mean_losses(sum, steps_since), held_out_ppl()});
  report.model = distiller.release();
  return report;
}

std::string distill_csv(const DistillReport& report) {
  std::ostringstream out;
  out << "tokens_seen,layer_index,loss,held_out_ppl\n";
  char buf[64];
  for (const auto& r : report.records) {
    std::snprintf(buf, sizeof buf, "%.9g", r.held_out_ppl);
    const std::string ppl = buf;
    if (r.losses.empty()) {
      out << r.tokens_seen << ",,," << ppl << '\n';
      continue;
    }
    for (const auto& l : r.losses) {
      std::snprintf(buf, sizeof buf, "%.9g", l.total);
      out << r.tokens_seen << ',' << l.layer << ',' << buf << ',' << ppl << '\n';
    }
  }
  return out.str();
}

}  // namespace lrd
