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

#include "lrd/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kernels.hpp"
#include "lrd/errors.hpp"

namespace lrd::ad {

namespace {

void same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw GraphError(std::string(op) + ": operand shapes differ " + a.shape_string() +
                     " vs " + b.shape_string());
  }
}

// d/dc of log(1 + exp(-c)) is -sigmoid(-c).
double logsig_slope(double c) { return -1.0 / (1.0 + std::exp(c)); }

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::kInput: return "input";
    case Op::kIndexInput: return "index-input";
    case Op::kConstant: return "constant";
    case Op::kParameter: return "parameter";
    case Op::kMatmul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kScale: return "scale";
    case Op::kHadamard: return "hadamard";
    case Op::kSilu: return "silu";
    case Op::kRmsNorm: return "rmsnorm";
    case Op::kSoftmaxRows: return "softmax-rows";
    case Op::kCausalAttention: return "causal-attention";
    case Op::kEmbedding: return "embedding";
    case Op::kL1Mean: return "l1-mean";
    case Op::kCosineLogSig: return "cosine-logsig";
    case Op::kSum: return "sum";
    case Op::kCrossEntropy: return "cross-entropy";
  }
  return "?";
}

Var Tape::push(Node node) {
  for (std::size_t id : node.in) {
    if (id >= nodes_.size()) throw GraphError("operand refers to an unknown node");
    node.needs_grad = node.needs_grad || nodes_[id].needs_grad;
  }
  nodes_.push_back(std::move(node));
  forward_valid_ = false;
  return Var{nodes_.size() - 1};
}

Tape::Node& Tape::node_of(Var v, const char* op) {
  if (v.id >= nodes_.size()) throw GraphError(std::string(op) + ": unknown node");
  return nodes_[v.id];
}

Var Tape::input(const std::string& name) {
  Node n;
  n.op = Op::kInput;
  n.name = name;
  return push(std::move(n));
}

Var Tape::index_input(const std::string& name) {
  Node n;
  n.op = Op::kIndexInput;
  n.name = name;
  return push(std::move(n));
}

Var Tape::constant(const Matrix* value) {
  if (!value) throw GraphError("constant: null matrix");
  Node n;
  n.op = Op::kConstant;
  n.external = value;
  return push(std::move(n));
}

Var Tape::parameter(const Matrix* value) {
  if (!value) throw GraphError("parameter: null matrix");
  Node n;
  n.op = Op::kParameter;
  n.external = value;
  n.needs_grad = true;
  Var v = push(std::move(n));
  parameters_.push_back(v);
  return v;
}

Var Tape::matmul(Var a, Var b, bool transpose_b) {
  Node n;
  n.op = Op::kMatmul;
  n.in = {a.id, b.id};
  n.transpose_b = transpose_b;
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  Node n;
  n.op = Op::kAdd;
  n.in = {a.id, b.id};
  return push(std::move(n));
}

Var Tape::scale(Var a, float factor) {
  Node n;
  n.op = Op::kScale;
  n.in = {a.id};
  n.scalar = factor;
  return push(std::move(n));
}

Var Tape::hadamard(Var a, Var b) {
  Node n;
  n.op = Op::kHadamard;
  n.in = {a.id, b.id};
  return push(std::move(n));
}

Var Tape::silu(Var a) {
  Node n;
  n.op = Op::kSilu;
  n.in = {a.id};
  return push(std::move(n));
}

Var Tape::rmsnorm(Var x, Var gain, float eps) {
  Node n;
  n.op = Op::kRmsNorm;
  n.in = {x.id, gain.id};
  n.scalar = eps;
  return push(std::move(n));
}

Var Tape::softmax_rows(Var a) {
  Node n;
  n.op = Op::kSoftmaxRows;
  n.in = {a.id};
  return push(std::move(n));
}

Var Tape::causal_attention(Var q, Var k, Var v, std::size_t heads, std::size_t seq_len) {
  Node n;
  n.op = Op::kCausalAttention;
  n.in = {q.id, k.id, v.id};
  n.heads = heads;
  n.seq_len = seq_len;
  return push(std::move(n));
}

Var Tape::embedding(Var ids, Var table) {
  if (node_of(ids, "embedding").op != Op::kIndexInput) {
    throw GraphError("embedding: ids must come from an index input");
  }
  Node n;
  n.op = Op::kEmbedding;
  n.in = {ids.id, table.id};
  return push(std::move(n));
}

Var Tape::l1_mean(Var target, Var pred) {
  Node n;
  n.op = Op::kL1Mean;
  n.in = {target.id, pred.id};
  return push(std::move(n));
}

Var Tape::cosine_logsig(Var target, Var pred) {
  Node n;
  n.op = Op::kCosineLogSig;
  n.in = {target.id, pred.id};
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  Node n;
  n.op = Op::kSum;
  n.in = {a.id};
  return push(std::move(n));
}

Var Tape::cross_entropy(Var logits, Var targets) {
  if (node_of(targets, "cross_entropy").op != Op::kIndexInput) {
    throw GraphError("cross_entropy: targets must come from an index input");
  }
  Node n;
  n.op = Op::kCrossEntropy;
  n.in = {logits.id, targets.id};
  return push(std::move(n));
}

const Matrix& Tape::val(std::size_t id) const {
  const Node& n = nodes_[id];
  if (n.op == Op::kConstant || n.op == Op::kParameter || n.op == Op::kInput) {
    return *n.external;
  }
  return n.value;
}

const Matrix& Tape::value(Var v) const {
  if (v.id >= nodes_.size()) throw GraphError("value: unknown node");
  if (!forward_valid_) throw StateError("value: forward has not run");
  return val(v.id);
}

const Matrix& Tape::grad(Var v) const {
  if (v.id >= nodes_.size()) throw GraphError("grad: unknown node");
  const Node& n = nodes_[v.id];
  if (!n.needs_grad) throw StateError("grad: node does not depend on a parameter");
  return n.grad;
}

Matrix& Tape::grad(Var v) {
  return const_cast<Matrix&>(static_cast<const Tape&>(*this).grad(v));
}

bool Tape::requires_grad(Var v) const { return nodes_.at(v.id).needs_grad; }

Op Tape::op(Var v) const { return nodes_.at(v.id).op; }

const Matrix* Tape::parameter_source(Var v) const {
  const Node& n = nodes_.at(v.id);
  return n.op == Op::kParameter ? n.external : nullptr;
}

double Tape::forward(const Feed& feed) {
  if (nodes_.empty()) throw GraphError("forward: empty graph");
  forward_valid_ = false;
  for (Node& n : nodes_) {
    if (n.op == Op::kInput) {
      auto it = feed.matrices.find(n.name);
      if (it == feed.matrices.end() || !it->second) {
        throw GraphError("forward: input '" + n.name + "' is not bound");
      }
      n.external = it->second;
    } else if (n.op == Op::kIndexInput) {
      auto it = feed.indices.find(n.name);
      if (it == feed.indices.end() || !it->second) {
        throw GraphError("forward: index input '" + n.name + "' is not bound");
      }
      n.ids = it->second;
    }
  }
  for (Node& n : nodes_) {
    try {
      eval(n);
    } catch (const DimensionError& e) {
      throw GraphError(std::string(op_name(n.op)) + ": " + e.what());
    }
  }
  const Matrix& out = val(nodes_.size() - 1);
  if (out.rows() != 1 || out.cols() != 1) {
    throw GraphError("forward: terminal node is " + out.shape_string() + ", not a scalar");
  }
  forward_valid_ = true;
  return out(0, 0);
}

void Tape::eval(Node& n) {
  auto in = [&](std::size_t k) -> const Matrix& { return val(n.in[k]); };
  switch (n.op) {
    case Op::kInput:
    case Op::kIndexInput:
    case Op::kConstant:
    case Op::kParameter:
      return;
    case Op::kMatmul:
      gemm(n.value, in(0), false, in(1), n.transpose_b);
      return;
    case Op::kAdd: {
      same_shape(in(0), in(1), "add");
      n.value.resize(in(0).rows(), in(0).cols());
      auto a = in(0).data();
      auto b = in(1).data();
      auto o = n.value.data();
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] + b[i];
      return;
    }
    case Op::kScale: {
      n.value.resize(in(0).rows(), in(0).cols());
      auto a = in(0).data();
      auto o = n.value.data();
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] * n.scalar;
      return;
    }
    case Op::kHadamard: {
      same_shape(in(0), in(1), "hadamard");
      n.value.resize(in(0).rows(), in(0).cols());
      auto a = in(0).data();
      auto b = in(1).data();
      auto o = n.value.data();
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] * b[i];
      return;
    }
    case Op::kSilu:
      kernels::silu(in(0), n.value);
      return;
    case Op::kRmsNorm:
      kernels::rmsnorm(in(0), in(1), n.scalar, n.value, &n.cache);
      return;
    case Op::kSoftmaxRows:
      kernels::softmax_rows(in(0), n.value);
      return;
    case Op::kCausalAttention:
      kernels::causal_attention(in(0), in(1), in(2), n.heads, n.seq_len, n.value,
                                n.needs_grad ? &n.cache : nullptr);
      return;
    case Op::kEmbedding: {
      const auto& ids = *nodes_[n.in[0]].ids;
      const Matrix& table = in(1);
      n.value.resize(ids.size(), table.cols());
      for (std::size_t t = 0; t < ids.size(); ++t) {
        const auto id = ids[t];
        if (id < 0 || static_cast<std::size_t>(id) >= table.rows()) {
          throw GraphError("embedding: id " + std::to_string(id) + " outside table of " +
                           std::to_string(table.rows()) + " rows");
        }
        std::copy_n(table.row(static_cast<std::size_t>(id)).data(), table.cols(),
                    n.value.row(t).data());
      }
      return;
    }
    case Op::kL1Mean: {
      same_shape(in(0), in(1), "l1-mean");
      const Matrix& y = in(0);
      const Matrix& p = in(1);
      double total = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        total += std::fabs(static_cast<double>(y.data()[i]) - p.data()[i]);
      }
      n.value.resize(1, 1);
      n.value(0, 0) = static_cast<float>(total / static_cast<double>(y.cols()));
      return;
    }
    case Op::kCosineLogSig: {
      same_shape(in(0), in(1), "cosine-logsig");
      const Matrix& y = in(0);
      const Matrix& p = in(1);
      // cache layout per row: cos, |y|, |p|
      n.cache.resize(3 * y.rows());
      double total = 0.0;
      for (std::size_t t = 0; t < y.rows(); ++t) {
        double dot = 0.0, ny = 0.0, np = 0.0;
        auto yr = y.row(t);
        auto pr = p.row(t);
        for (std::size_t j = 0; j < yr.size(); ++j) {
          dot += static_cast<double>(yr[j]) * pr[j];
          ny += static_cast<double>(yr[j]) * yr[j];
          np += static_cast<double>(pr[j]) * pr[j];
        }
        ny = std::sqrt(ny);
        np = std::sqrt(np);
        const double c = (ny == 0.0 || np == 0.0) ? 0.0 : dot / (ny * np);
        n.cache[3 * t] = static_cast<float>(c);
        n.cache[3 * t + 1] = static_cast<float>(ny);
        n.cache[3 * t + 2] = static_cast<float>(np);
        total += std::log1p(std::exp(-c));
      }
      n.value.resize(1, 1);
      n.value(0, 0) = static_cast<float>(total);
      return;
    }
    case Op::kSum: {
      double total = 0.0;
      for (float v : in(0).data()) total += v;
      n.value.resize(1, 1);
      n.value(0, 0) = static_cast<float>(total);
      return;
    }
    case Op::kCrossEntropy: {
      const Matrix& logits = in(0);
      const auto& targets = *nodes_[n.in[1]].ids;
      if (targets.size() != logits.rows()) {
        throw GraphError("cross-entropy: " + std::to_string(targets.size()) +
                         " targets for " + std::to_string(logits.rows()) + " rows");
      }
      Matrix probs;
      kernels::softmax_rows(logits, probs);
      double total = 0.0;
      for (std::size_t t = 0; t < targets.size(); ++t) {
        const auto id = targets[t];
        if (id < 0 || static_cast<std::size_t>(id) >= logits.cols()) {
          throw GraphError("cross-entropy: target " + std::to_string(id) + " out of range");
        }
        total -= std::log(std::max(static_cast<double>(probs(t, static_cast<std::size_t>(id))),
                                   1e-30));
      }
      n.cache.assign(probs.data().begin(), probs.data().end());
      n.value.resize(1, 1);
      n.value(0, 0) = static_cast<float>(total / static_cast<double>(targets.size()));
      return;
    }
  }
}

void Tape::backward() {
  if (!forward_valid_) throw StateError("backward: forward has not run on this graph");
  for (Node& n : nodes_) {
    if (!n.needs_grad) continue;
    const Matrix& v = val(static_cast<std::size_t>(&n - nodes_.data()));
    n.grad.resize(v.rows(), v.cols());
    n.grad.fill(0.0f);
  }
  Node& last = nodes_.back();
  if (!last.needs_grad) return;
  last.grad(0, 0) = 1.0f;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (n.needs_grad && !n.in.empty()) back(n);
  }
}

void Tape::back(Node& n) {
  auto in = [&](std::size_t k) -> const Matrix& { return val(n.in[k]); };
  auto wants = [&](std::size_t k) { return nodes_[n.in[k]].needs_grad; };
  auto g_in = [&](std::size_t k) -> Matrix& { return nodes_[n.in[k]].grad; };
  const Matrix& g = n.grad;

  switch (n.op) {
    case Op::kInput:
    case Op::kIndexInput:
    case Op::kConstant:
    case Op::kParameter:
      return;
    case Op::kMatmul:
      // C = A op(B): dA = dC op(B)^T, dB = A^T dC (or dC^T A when transposed).
      if (wants(0)) gemm(g_in(0), g, false, in(1), !n.transpose_b, 1.0f, 1.0f);
      if (wants(1)) {
        if (n.transpose_b) gemm(g_in(1), g, true, in(0), false, 1.0f, 1.0f);
        else gemm(g_in(1), in(0), true, g, false, 1.0f, 1.0f);
      }
      return;
    case Op::kAdd:
      for (std::size_t k = 0; k < 2; ++k) {
        if (!wants(k)) continue;
        auto d = g_in(k).data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += g.data()[i];
      }
      return;
    case Op::kScale: {
      auto d = g_in(0).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += n.scalar * g.data()[i];
      return;
    }
    case Op::kHadamard:
      for (std::size_t k = 0; k < 2; ++k) {
        if (!wants(k)) continue;
        auto d = g_in(k).data();
        auto other = in(1 - k).data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += g.data()[i] * other[i];
      }
      return;
    case Op::kSilu: {
      auto x = in(0).data();
      auto d = g_in(0).data();
      for (std::size_t i = 0; i < d.size(); ++i) {
        const float s = kernels::sigmoid(x[i]);
        d[i] += g.data()[i] * s * (1.0f + x[i] * (1.0f - s));
      }
      return;
    }
    case Op::kRmsNorm: {
      const Matrix& x = in(0);
      const Matrix& gain = in(1);
      const std::size_t d = x.cols();
      const float* gw = gain.data().data();
      float* dgain = wants(1) ? g_in(1).data().data() : nullptr;
      for (std::size_t t = 0; t < x.rows(); ++t) {
        const float r = n.cache[t];
        auto xr = x.row(t);
        auto gr = g.row(t);
        // xhat = x * r; dxhat = g * gain; dx = r * (dxhat - xhat * mean(dxhat * xhat))
        double proj = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const float xhat = xr[j] * r;
          proj += static_cast<double>(gr[j]) * gw[j] * xhat;
          if (dgain) dgain[j] += gr[j] * xhat;
        }
        if (!wants(0)) continue;
        const float m = static_cast<float>(proj / static_cast<double>(d));
        auto dx = g_in(0).row(t);
        for (std::size_t j = 0; j < d; ++j) {
          dx[j] += r * (gr[j] * gw[j] - xr[j] * r * m);
        }
      }
      return;
    }
    case Op::kSoftmaxRows: {
      const Matrix& y = n.value;
      for (std::size_t t = 0; t < y.rows(); ++t) {
        auto yr = y.row(t);
        auto gr = g.row(t);
        double dot = 0.0;
        for (std::size_t j = 0; j < yr.size(); ++j) dot += static_cast<double>(gr[j]) * yr[j];
        auto dx = g_in(0).row(t);
        for (std::size_t j = 0; j < yr.size(); ++j) {
          dx[j] += yr[j] * (gr[j] - static_cast<float>(dot));
        }
      }
      return;
    }
    case Op::kCausalAttention:
      kernels::causal_attention_backward(in(0), in(1), in(2), n.cache, g, n.heads,
                                         n.seq_len, wants(0) ? &g_in(0) : nullptr,
                                         wants(1) ? &g_in(1) : nullptr,
                                         wants(2) ? &g_in(2) : nullptr);
      return;
    case Op::kEmbedding: {
      if (!wants(1)) return;
      const auto& ids = *nodes_[n.in[0]].ids;
      Matrix& dt = g_in(1);
      for (std::size_t t = 0; t < ids.size(); ++t) {
        auto src = g.row(t);
        auto dst = dt.row(static_cast<std::size_t>(ids[t]));
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
      }
      return;
    }
    case Op::kL1Mean: {
      const Matrix& y = in(0);
      const Matrix& p = in(1);
      const float step = g(0, 0) / static_cast<float>(y.cols());
      for (std::size_t i = 0; i < y.size(); ++i) {
        const float diff = p.data()[i] - y.data()[i];
        const float s = diff > 0.0f ? step : (diff < 0.0f ? -step : 0.0f);
        if (wants(1)) g_in(1).data()[i] += s;
        if (wants(0)) g_in(0).data()[i] -= s;
      }
      return;
    }
    case Op::kCosineLogSig: {
      const Matrix& y = in(0);
      const Matrix& p = in(1);
      const double upstream = g(0, 0);
      for (std::size_t t = 0; t < y.rows(); ++t) {
        const double c = n.cache[3 * t];
        const double ny = n.cache[3 * t + 1];
        const double np = n.cache[3 * t + 2];
        if (ny == 0.0 || np == 0.0) continue;
        const double k = upstream * logsig_slope(c);
        auto yr = y.row(t);
        auto pr = p.row(t);
        // d cos / d p = y / (|y||p|) - cos * p / |p|^2, symmetric for y.
        if (wants(1)) {
          auto d = g_in(1).row(t);
          for (std::size_t j = 0; j < yr.size(); ++j) {
            d[j] += static_cast<float>(k * (yr[j] / (ny * np) - c * pr[j] / (np * np)));
          }
        }
        if (wants(0)) {
          auto d = g_in(0).row(t);
          for (std::size_t j = 0; j < yr.size(); ++j) {
            d[j] += static_cast<float>(k * (pr[j] / (ny * np) - c * yr[j] / (ny * ny)));
          }
        }
      }
      return;
    }
    case Op::kSum: {
      const float s = g(0, 0);
      for (float& d : g_in(0).data()) d += s;
      return;
    }
    case Op::kCrossEntropy: {
      if (!wants(0)) return;
      const auto& targets = *nodes_[n.in[1]].ids;
      Matrix& d = g_in(0);
      const std::size_t v = d.cols();
      const float s = g(0, 0) / static_cast<float>(targets.size());
      for (std::size_t t = 0; t < targets.size(); ++t) {
        auto dr = d.row(t);
        const float* pr = n.cache.data() + t * v;
        for (std::size_t j = 0; j < v; ++j) dr[j] += s * pr[j];
        dr[static_cast<std::size_t>(targets[t])] -= s;
      }
      return;
    }
  }
}

}  // namespace lrd::ad
