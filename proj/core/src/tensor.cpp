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

#include "lrd/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lrd/errors.hpp"

namespace lrd {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_string() +
                         " vs " + b.shape_string());
  }
}

template <typename F>
Matrix zip(const Matrix& a, const Matrix& b, const char* op, F f) {
  require_same_shape(a, b, op);
  Matrix out(a.rows(), a.cols());
  auto x = a.data();
  auto y = b.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(x[i], y[i]);
  return out;
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("Matrix: data length " + std::to_string(data_.size()) +
                         " does not match " + shape_string());
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<float>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0f;
  return m;
}

Matrix Matrix::diagonal(std::span<const float> values) {
  Matrix m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

Matrix Matrix::block(std::size_t r0, std::size_t c0, std::size_t nr,
                     std::size_t nc) const {
  if (r0 + nr > rows_ || c0 + nc > cols_) {
    throw DimensionError("block: " + std::to_string(nr) + "x" + std::to_string(nc) +
                         " at (" + std::to_string(r0) + "," + std::to_string(c0) +
                         ") exceeds " + shape_string());
  }
  Matrix out(nr, nc);
  for (std::size_t i = 0; i < nr; ++i) {
    std::copy_n(data_.data() + (r0 + i) * cols_ + c0, nc, out.data_.data() + i * nc);
  }
  return out;
}

void Matrix::resize(std::size_t rows, std::size_t cols) {
  rows_ = rows;
  cols_ = cols;
  data_.resize(rows * cols);
}

void Matrix::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

std::string Matrix::shape_string() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

void gemm(Matrix& out, const Matrix& a, bool transpose_a, const Matrix& b,
          bool transpose_b, float alpha, float beta) {
  const std::size_t m = transpose_a ? a.cols() : a.rows();
  const std::size_t k = transpose_a ? a.rows() : a.cols();
  const std::size_t kb = transpose_b ? b.cols() : b.rows();
  const std::size_t n = transpose_b ? b.rows() : b.cols();
  if (k != kb) {
    throw DimensionError("matmul: inner dimensions differ: " + a.shape_string() +
                         (transpose_a ? "^T" : "") + " x " + b.shape_string() +
                         (transpose_b ? "^T" : ""));
  }
  if (beta == 0.0f) {
    out.resize(m, n);
  } else if (out.rows() != m || out.cols() != n) {
    throw DimensionError("gemm: accumulator " + out.shape_string() +
                         " does not match product shape");
  }
  ConstMap A(a.data().data(), static_cast<Eigen::Index>(a.rows()),
             static_cast<Eigen::Index>(a.cols()));
  ConstMap B(b.data().data(), static_cast<Eigen::Index>(b.rows()),
             static_cast<Eigen::Index>(b.cols()));
  MutMap O(out.data().data(), static_cast<Eigen::Index>(m),
           static_cast<Eigen::Index>(n));
  if (k == 0) {
    if (beta == 0.0f) O.setZero(); else O *= beta;
    return;
  }
  auto run = [&](const auto& lhs, const auto& rhs) {
    if (beta == 0.0f) {
      O.noalias() = alpha * lhs * rhs;
    } else {
      if (beta != 1.0f) O *= beta;
      O.noalias() += alpha * lhs * rhs;
    }
  };
  if (!transpose_a && !transpose_b) run(A, B);
  else if (!transpose_a && transpose_b) run(A, B.transpose());
  else if (transpose_a && !transpose_b) run(A.transpose(), B);
  else run(A.transpose(), B.transpose());
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix out;
  gemm(out, a, false, b, false);
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  Matrix out;
  gemm(out, a, false, b, true);
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  Matrix out;
  gemm(out, a, true, b, false);
  return out;
}

double frobenius_norm(const Matrix& m) {
  double acc = 0.0;
  for (float v : m.data()) acc += static_cast<double>(v) * v;
  return std::sqrt(acc);
}

double abs_sum(const Matrix& m) {
  double acc = 0.0;
  for (float v : m.data()) acc += std::fabs(static_cast<double>(v));
  return acc;
}

Matrix add(const Matrix& a, const Matrix& b) {
  return zip(a, b, "add", [](float x, float y) { return x + y; });
}

Matrix sub(const Matrix& a, const Matrix& b) {
  return zip(a, b, "sub", [](float x, float y) { return x - y; });
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  return zip(a, b, "hadamard", [](float x, float y) { return x * y; });
}

Matrix scale(const Matrix& a, float factor) {
  Matrix out = a;
  for (float& v : out.data()) v *= factor;
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

Matrix row_mean(const Matrix& m) {
  Matrix out(m.rows(), 1);
  if (m.cols() == 0) return out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double acc = 0.0;
    for (float v : m.row(i)) acc += v;
    out(i, 0) = static_cast<float>(acc / static_cast<double>(m.cols()));
  }
  return out;
}

std::vector<float> cosine_rows(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "cosine_rows");
  std::vector<float> out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    auto x = a.row(i);
    auto y = b.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) {
      dot += static_cast<double>(x[j]) * y[j];
      na += static_cast<double>(x[j]) * x[j];
      nb += static_cast<double>(y[j]) * y[j];
    }
    out[i] = (na == 0.0 || nb == 0.0) ? 0.0f
                                      : static_cast<float>(dot / std::sqrt(na * nb));
  }
  return out;
}

bool all_finite(const Matrix& m) {
  return std::all_of(m.data().begin(), m.data().end(),
                     [](float v) { return std::isfinite(v); });
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::fabs(static_cast<double>(a.data()[i]) - b.data()[i]));
  }
  return worst;
}

std::uint64_t Rng::next_u64() {
  ++state_.counter;
  std::uint64_t z = state_.seed + state_.counter * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  if (n == 0) throw InputError("uniform_int: empty range");
  // Reject the short tail so every residue is equally likely.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

double Rng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Matrix randn(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix out(rows, cols);
  for (float& v : out.data()) v = static_cast<float>(rng.normal());
  return out;
}

}  // namespace lrd
