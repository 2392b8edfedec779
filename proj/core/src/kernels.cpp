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

#include "kernels.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <limits>
#include <string>

#include "lrd/errors.hpp"

namespace lrd::kernels {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Stride = Eigen::OuterStride<>;
using HeadMap = Eigen::Map<RowMat, 0, Stride>;
using ConstHeadMap = Eigen::Map<const RowMat, 0, Stride>;
using SquareMap = Eigen::Map<RowMat>;

void check_attention_shapes(const Matrix& q, const Matrix& k, const Matrix& v,
                            std::size_t heads, std::size_t seq_len) {
  if (q.rows() != k.rows() || q.rows() != v.rows() || q.cols() != k.cols() ||
      q.cols() != v.cols()) {
    throw DimensionError("attention: q/k/v shapes differ: " + q.shape_string() + ", " +
                         k.shape_string() + ", " + v.shape_string());
  }
  if (heads == 0 || q.cols() % heads != 0) {
    throw DimensionError("attention: width " + std::to_string(q.cols()) +
                         " not divisible by " + std::to_string(heads) + " heads");
  }
  if (seq_len == 0 || q.rows() % seq_len != 0) {
    throw DimensionError("attention: " + std::to_string(q.rows()) +
                         " rows is not a whole number of length-" +
                         std::to_string(seq_len) + " sequences");
  }
}

ConstHeadMap head_block(const Matrix& m, std::size_t seq, std::size_t head,
                        std::size_t seq_len, std::size_t head_dim) {
  const auto cols = static_cast<Eigen::Index>(m.cols());
  return ConstHeadMap(m.data().data() + seq * seq_len * m.cols() + head * head_dim,
                      static_cast<Eigen::Index>(seq_len),
                      static_cast<Eigen::Index>(head_dim), Stride(cols));
}

HeadMap head_block(Matrix& m, std::size_t seq, std::size_t head, std::size_t seq_len,
                   std::size_t head_dim) {
  const auto cols = static_cast<Eigen::Index>(m.cols());
  return HeadMap(m.data().data() + seq * seq_len * m.cols() + head * head_dim,
                 static_cast<Eigen::Index>(seq_len), static_cast<Eigen::Index>(head_dim),
                 Stride(cols));
}

}  // namespace

void rmsnorm(const Matrix& x, const Matrix& gain, float eps, Matrix& out,
             std::vector<float>* inv_rms) {
  const std::size_t d = x.cols();
  if (gain.size() != d) {
    throw DimensionError("rmsnorm: gain " + gain.shape_string() + " vs width " +
                         std::to_string(d));
  }
  out.resize(x.rows(), d);
  if (inv_rms) inv_rms->resize(x.rows());
  const float* g = gain.data().data();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto xr = x.row(i);
    auto yr = out.row(i);
    double ss = 0.0;
    for (float v : xr) ss += static_cast<double>(v) * v;
    const float r = static_cast<float>(1.0 / std::sqrt(ss / static_cast<double>(d) + eps));
    for (std::size_t j = 0; j < d; ++j) yr[j] = xr[j] * r * g[j];
    if (inv_rms) (*inv_rms)[i] = r;
  }
}

void silu(const Matrix& x, Matrix& out) {
  out.resize(x.rows(), x.cols());
  auto xs = x.data();
  auto ys = out.data();
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = xs[i] * sigmoid(xs[i]);
}

void softmax_rows(const Matrix& x, Matrix& out) {
  out.resize(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto xr = x.row(i);
    auto yr = out.row(i);
    const float mx = *std::max_element(xr.begin(), xr.end());
    double total = 0.0;
    for (std::size_t j = 0; j < xr.size(); ++j) {
      yr[j] = std::exp(xr[j] - mx);
      total += yr[j];
    }
    const float inv = static_cast<float>(1.0 / total);
    for (float& v : yr) v *= inv;
  }
}

void causal_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                      std::size_t heads, std::size_t seq_len, Matrix& out,
                      std::vector<float>* probs) {
  check_attention_shapes(q, k, v, heads, seq_len);
  const std::size_t width = q.cols();
  const std::size_t head_dim = width / heads;
  const std::size_t n_seq = q.rows() / seq_len;
  const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim));
  const auto t = static_cast<Eigen::Index>(seq_len);

  out.resize(q.rows(), width);
  std::vector<float> scratch;
  if (probs) {
    probs->resize(n_seq * heads * seq_len * seq_len);
  } else {
    scratch.resize(seq_len * seq_len);
  }
  for (std::size_t s = 0; s < n_seq; ++s) {
    for (std::size_t h = 0; h < heads; ++h) {
      float* p_data = probs ? probs->data() + (s * heads + h) * seq_len * seq_len
                            : scratch.data();
      SquareMap p(p_data, t, t);
      p.noalias() = scale * head_block(q, s, h, seq_len, head_dim) *
                    head_block(k, s, h, seq_len, head_dim).transpose();
      for (Eigen::Index i = 0; i < t; ++i) {
        float mx = -std::numeric_limits<float>::infinity();
        for (Eigen::Index j = 0; j <= i; ++j) mx = std::max(mx, p(i, j));
        double total = 0.0;
        for (Eigen::Index j = 0; j <= i; ++j) {
          p(i, j) = std::exp(p(i, j) - mx);
          total += p(i, j);
        }
        const float inv = static_cast<float>(1.0 / total);
        for (Eigen::Index j = 0; j <= i; ++j) p(i, j) *= inv;
        for (Eigen::Index j = i + 1; j < t; ++j) p(i, j) = 0.0f;
      }
      head_block(out, s, h, seq_len, head_dim).noalias() =
          p * head_block(v, s, h, seq_len, head_dim);
    }
  }
}

void causal_attention_backward(const Matrix& q, const Matrix& k, const Matrix& v,
                               std::span<const float> probs, const Matrix& d_out,
                               std::size_t heads, std::size_t seq_len, Matrix* dq,
                               Matrix* dk, Matrix* dv) {
  check_attention_shapes(q, k, v, heads, seq_len);
  const std::size_t width = q.cols();
  const std::size_t head_dim = width / heads;
  const std::size_t n_seq = q.rows() / seq_len;
  const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim));
  const auto t = static_cast<Eigen::Index>(seq_len);
  if (probs.size() != n_seq * heads * seq_len * seq_len) {
    throw StateError("attention backward: cached probabilities have the wrong size");
  }

  RowMat d_scores(t, t);
  for (std::size_t s = 0; s < n_seq; ++s) {
    for (std::size_t h = 0; h < heads; ++h) {
      const float* p_data = probs.data() + (s * heads + h) * seq_len * seq_len;
      Eigen::Map<const RowMat> p(p_data, t, t);
      auto go = head_block(d_out, s, h, seq_len, head_dim);
      if (dv) head_block(*dv, s, h, seq_len, head_dim).noalias() += p.transpose() * go;
      if (!dq && !dk) continue;
      d_scores.noalias() = go * head_block(v, s, h, seq_len, head_dim).transpose();
      for (Eigen::Index i = 0; i < t; ++i) {
        float dot = 0.0f;
        for (Eigen::Index j = 0; j <= i; ++j) dot += d_scores(i, j) * p(i, j);
        for (Eigen::Index j = 0; j <= i; ++j) d_scores(i, j) = p(i, j) * (d_scores(i, j) - dot);
        for (Eigen::Index j = i + 1; j < t; ++j) d_scores(i, j) = 0.0f;
      }
      if (dq) {
        head_block(*dq, s, h, seq_len, head_dim).noalias() +=
            scale * d_scores * head_block(k, s, h, seq_len, head_dim);
      }
      if (dk) {
        head_block(*dk, s, h, seq_len, head_dim).noalias() +=
            scale * d_scores.transpose() * head_block(q, s, h, seq_len, head_dim);
      }
    }
  }
}

}  // namespace lrd::kernels
