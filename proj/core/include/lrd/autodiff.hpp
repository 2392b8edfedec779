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

// Reverse-mode differentiation over small static graphs.
//
// A Tape is built once, then driven repeatedly: bind inputs, forward(),
// backward(). Leaves either reference external matrices (constants and
// trainable parameters, read on every forward) or are named inputs bound per
// call. Gradients are materialized only for nodes downstream of a trainable
// parameter, so constant teacher weights never carry gradient buffers.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lrd/tensor.hpp"

namespace lrd::ad {

enum class Op {
  kInput,
  kIndexInput,
  kConstant,
  kParameter,
  kMatmul,
  kAdd,
  kScale,
  kHadamard,
  kSilu,
  kRmsNorm,
  kSoftmaxRows,
  kCausalAttention,
  kEmbedding,
  kL1Mean,
  kCosineLogSig,
  kSum,
  kCrossEntropy,
};

const char* op_name(Op op);

struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
  friend bool operator==(Var, Var) = default;
};

/// Per-call bindings for named inputs.
struct Feed {
  std::map<std::string, const Matrix*> matrices;
  std::map<std::string, const std::vector<std::int32_t>*> indices;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  // Leaves -----------------------------------------------------------------
  Var input(const std::string& name);
  /// Integer ids (token ids, positions, targets) bound per call.
  Var index_input(const std::string& name);
  /// Read-only external matrix; never receives a gradient.
  Var constant(const Matrix* value);
  /// Trainable external matrix; must outlive the tape.
  Var parameter(const Matrix* value);

  // Ops --------------------------------------------------------------------
  /// a * b, or a * b^T when transpose_b.
  Var matmul(Var a, Var b, bool transpose_b = false);
  Var add(Var a, Var b);
  Var scale(Var a, float factor);
  Var hadamard(Var a, Var b);
  Var silu(Var a);
  /// Row-wise RMS normalization with a 1 x D gain.
  Var rmsnorm(Var x, Var gain, float eps = 1e-5f);
  Var softmax_rows(Var a);
  Var causal_attention(Var q, Var k, Var v, std::size_t heads, std::size_t seq_len);
  /// Gathers rows of `table` by the ids bound to an index input.
  Var embedding(Var ids, Var table);
  /// sum_t (1/D) * ||target_t - pred_t||_1 over rows t; 1 x 1.
  Var l1_mean(Var target, Var pred);
  /// sum_t log(1 + exp(-cos(target_t, pred_t))), i.e. -log sigmoid(cos); 1 x 1.
  Var cosine_logsig(Var target, Var pred);
  Var sum(Var a);
  /// Mean next-token negative log-likelihood of `logits` rows at `targets`.
  Var cross_entropy(Var logits, Var targets);

  // Execution --------------------------------------------------------------
  /// Evaluates every node and returns the value of the last node, which must
  /// be 1 x 1. Throws GraphError on unbound inputs or shape mismatches.
  double forward(const Feed& feed);
  /// Gradient of the last node with respect to every trainable parameter.
  /// Throws StateError if forward has not run since the graph last changed.
  void backward();

  const Matrix& value(Var v) const;
  /// Gradient buffer of a node that depends on a parameter.
  const Matrix& grad(Var v) const;
  /// Mutable access, e.g. for gradient clipping before an optimizer step.
  Matrix& grad(Var v);
  bool requires_grad(Var v) const;
  Op op(Var v) const;

  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<Var>& parameters() const noexcept { return parameters_; }
  /// External matrix behind a parameter leaf.
  const Matrix* parameter_source(Var v) const;

 private:
  struct Node {
    Op op = Op::kInput;
    std::vector<std::size_t> in;
    std::string name;
    const Matrix* external = nullptr;
    const std::vector<std::int32_t>* ids = nullptr;
    float scalar = 0.0f;
    std::size_t heads = 0;
    std::size_t seq_len = 0;
    bool transpose_b = false;
    bool needs_grad = false;
    Matrix value;
    Matrix grad;
    std::vector<float> cache;  // op-specific forward state
  };

  Var push(Node node);
  const Matrix& val(std::size_t id) const;
  void eval(Node& n);
  void back(Node& n);
  Node& node_of(Var v, const char* op);

  std::vector<Node> nodes_;
  std::vector<Var> parameters_;
  bool forward_valid_ = false;
};

}  // namespace lrd::ad
