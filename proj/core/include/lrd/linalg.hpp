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

#pragma once

#include <cstddef>
#include <vector>

#include "lrd/tensor.hpp"

namespace lrd {

/// W (d1 x d2) approximated by a (d1 x r) times b (r x d2).
struct LowRankFactor {
  Matrix a;
  Matrix b;

  std::size_t rank() const noexcept { return a.cols(); }
  std::size_t rows() const noexcept { return a.rows(); }
  std::size_t cols() const noexcept { return b.cols(); }
  std::size_t param_count() const noexcept { return a.size() + b.size(); }
  /// Dense a * b.
  Matrix product() const { return matmul(a, b); }

  friend bool operator==(const LowRankFactor&, const LowRankFactor&) = default;
};

/// r * (d1 + d2) < d1 * d2: the factorization actually saves parameters.
constexpr bool saves_parameters(std::size_t rank, std::size_t d1, std::size_t d2) {
  return rank * (d1 + d2) < d1 * d2;
}

/// Full SVD, w = u * diag(s) * vt. u is d1 x d1, vt is d2 x d2, s holds
/// min(d1, d2) non-negative values in descending order. The largest-magnitude
/// entry of every column of u is positive.
struct SvdResult {
  Matrix u;
  std::vector<float> s;
  Matrix vt;
};

/// Eigenpairs of a symmetric matrix, values descending, vectors as columns.
struct EigResult {
  Matrix vectors;
  std::vector<float> values;
};

/// One-sided Jacobi SVD computed in double precision. Converges when every
/// column pair is orthogonal to 1e-7 relative; gives up after 100 sweeps with
/// a NumericalError carrying the remaining off-diagonal ratio.
SvdResult svd(const Matrix& w);

/// Keep the leading r singular triplets: a = U[:, :r] * diag(s[:r]),
/// b = Vt[:r, :]. Throws RankError unless 1 <= r <= min(d1, d2).
LowRankFactor truncate(const SvdResult& svd, std::size_t r);

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
EigResult symmetric_eigen(const Matrix& sym);

/// Population covariance E[yy^T] - E[y]E[y]^T of a d x N sample matrix whose
/// columns are observations. Needs N >= 2.
Matrix activation_covariance(const Matrix& y);

/// Activation-space factorization: eigendecompose the covariance of W * calib
/// (calib is d2 x N, one input per column) and return a = top-r eigenvectors,
/// b = a^T W. No mean correction is folded into the factors.
LowRankFactor afm_factor(const Matrix& w, const Matrix& calib, std::size_t r);

/// Mean squared activation error of a factor over a calibration set, both on
/// raw outputs and on mean-centred outputs.
struct AfmResiduals {
  double uncentered = 0.0;
  double centered = 0.0;
};
AfmResiduals afm_residuals(const Matrix& w, const Matrix& calib,
                           const LowRankFactor& factor);

/// sum(sigma_i^2) / sigma_1^2. Throws InputError for an all-zero matrix.
double stable_rank(const Matrix& m);

}  // namespace lrd
