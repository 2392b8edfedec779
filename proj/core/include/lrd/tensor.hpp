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

// Dense row-major float matrices and the handful of operations the rest of
// the library is built from.

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace lrd {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<float> data);
  /// Nested-list construction, mostly for tests: {{1, 2}, {3, 4}}.
  Matrix(std::initializer_list<std::initializer_list<float>> rows);

  static Matrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols}; }
  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const float> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  std::span<float> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  /// Copy of the sub-block starting at (r0, c0).
  Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;

  /// Reshape in place without touching data; used to reuse buffers.
  void resize(std::size_t rows, std::size_t cols);
  void fill(float v);

  std::string shape_string() const;

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

// ---------------------------------------------------------------------------
// Pure operations. None of these mutate their inputs.

Matrix matmul(const Matrix& a, const Matrix& b);
/// a * b^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// a^T * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);

/// out = alpha * op(a) * op(b) + beta * out; `out` must already have the
/// result shape when beta != 0. The workhorse behind the pure matmuls.
void gemm(Matrix& out, const Matrix& a, bool transpose_a, const Matrix& b,
          bool transpose_b, float alpha = 1.0f, float beta = 0.0f);

double frobenius_norm(const Matrix& m);
double abs_sum(const Matrix& m);

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, float factor);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
/// Mean of each row, as a rows x 1 column vector.
Matrix row_mean(const Matrix& m);
/// Cosine similarity between matching rows of a and b. A zero row on either
/// side yields 0.
std::vector<float> cosine_rows(const Matrix& a, const Matrix& b);

bool all_finite(const Matrix& m);
/// Largest absolute elementwise difference; shapes must match.
double max_abs_diff(const Matrix& a, const Matrix& b);

// ---------------------------------------------------------------------------
// Counter-based deterministic random numbers (splitmix64). The stream is a
// pure function of (seed, counter), independent of platform and compiler.

struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t counter = 0;
  friend bool operator==(const RngState&, const RngState&) = default;
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t counter = 0)
      : state_{seed, counter} {}
  explicit Rng(RngState s) : state_(s) {}

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Unbiased integer in [0, n); n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);
  /// Standard normal via Box-Muller (two draws per sample, no caching).
  double normal();

  const RngState& state() const noexcept { return state_; }

 private:
  RngState state_;
};

Matrix randn(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace lrd
