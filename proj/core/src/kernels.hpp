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

// Internal row-wise kernels shared by the autodiff tape and the straight-line
// model forward. Activations are (tokens x features); a batch of sequences is
// stored sequence-major, `seq_len` consecutive rows per sequence.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "lrd/tensor.hpp"

namespace lrd::kernels {

inline float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

/// y = x / sqrt(mean(x^2) + eps) * gain, row-wise. `inv_rms` (optional)
/// receives 1/rms per row.
void rmsnorm(const Matrix& x, const Matrix& gain, float eps, Matrix& out,
             std::vector<float>* inv_rms);

void silu(const Matrix& x, Matrix& out);

void softmax_rows(const Matrix& x, Matrix& out);

/// Multi-head causal softmax attention. q, k, v, out are (B*T x D); heads
/// split D into contiguous column groups. When `probs` is non-null it receives
/// the B*H*T*T attention probabilities for the backward pass.
void causal_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                      std::size_t heads, std::size_t seq_len, Matrix& out,
                      std::vector<float>* probs);

/// Accumulates (+=) into whichever of dq, dk, dv are non-null.
void causal_attention_backward(const Matrix& q, const Matrix& k, const Matrix& v,
                               std::span<const float> probs, const Matrix& d_out,
                               std::size_t heads, std::size_t seq_len, Matrix* dq,
                               Matrix* dk, Matrix* dv);

}  // namespace lrd::kernels
