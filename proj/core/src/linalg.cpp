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

#include "lrd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lrd/errors.hpp"

namespace lrd {

namespace {

constexpr double kOrthTol = 1e-7;
constexpr int kMaxSweeps = 100;

/// Column-major double working storage; column j is contiguous.
struct Columns {
  std::size_t len = 0;
  std::size_t count = 0;
  std::vector<double> data;

  Columns(std::size_t l, std::size_t c) : len(l), count(c), data(l * c, 0.0) {}
  double* col(std::size_t j) { return data.data() + j * len; }
  const double* col(std::size_t j) const { return data.data() + j * len; }
};

double dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void rotate(double* x, double* y, std::size_t n, double c, double s) {
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

std::size_t argmax_abs(const double* v, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (std::fabs(v[i]) > std::fabs(v[best])) best = i;
  }
  return best;
}

/// Appends orthonormal columns to `basis` (the first `have` columns are already
/// orthonormal) until all `basis.count` are filled, drawing candidates from the
/// standard basis in index order. Deterministic.
void complete_basis(Columns& basis, std::size_t have) {
  const std::size_t n = basis.len;
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n && have < basis.count; ++k) {
    std::fill(v.begin(), v.end(), 0.0);
    v[k] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < have; ++j) {
        const double* b = basis.col(j);
        const double proj = dot(b, v.data(), n);
        for (std::size_t i = 0; i < n; ++i) v[i] -= proj * b[i];
      }
    }
    const double norm = std::sqrt(dot(v.data(), v.data(), n));
    if (norm < 1e-6) continue;
    double* out = basis.col(have++);
    for (std::size_t i = 0; i < n; ++i) out[i] = v[i] / norm;
  }
  if (have < basis.count) {
    throw NumericalError("complete_basis: could not extend orthonormal basis");
  }
}

struct ThinSvd {
  Columns u;  // m x n, columns for zero singular values left unset
  std::vector<double> s;
  Columns v;  // n x n
  std::size_t nonzero = 0;
};

/// One-sided Jacobi on a tall matrix given column-wise (m >= n).
ThinSvd jacobi_svd(Columns x) {
  const std::size_t m = x.len;
  const std::size_t n = x.count;
  Columns v(n, n);
  for (std::size_t j = 0; j < n; ++j) v.col(j)[j] = 1.0;

  bool converged = (n < 2);
  double worst = 0.0;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    bool rotated = false;
    worst = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double* xp = x.col(p);
        double* xq = x.col(q);
        const double alpha = dot(xp, xp, m);
        const double beta = dot(xq, xq, m);
        const double gamma = dot(xp, xq, m);
        if (alpha == 0.0 || beta == 0.0) continue;
        const double ratio = std::fabs(gamma) / std::sqrt(alpha * beta);
        worst = std::max(worst, ratio);
        if (ratio <= kOrthTol) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) /
                         (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate(xp, xq, m, c, s);
        rotate(v.col(p), v.col(q), n, c, s);
      }
    }
    converged = !rotated;
  }
  if (!converged) {
    throw NumericalError("svd: no convergence after " + std::to_string(kMaxSweeps) +
                             " sweeps (off-diagonal ratio " + std::to_string(worst) + ")",
                         worst);
  }

  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) norms[j] = std::sqrt(dot(x.col(j), x.col(j), m));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

  const double top = n ? norms[order[0]] : 0.0;
  const double cutoff = top * 1e-12 * static_cast<double>(std::max(m, n));
  ThinSvd out{Columns(m, n), std::vector<double>(n), Columns(n, n), 0};
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.s[k] = norms[j];
    std::copy_n(v.col(j), n, out.v.col(k));
    if (norms[j] > cutoff && norms[j] > 0.0) {
      const double* src = x.col(j);
      double* dst = out.u.col(k);
      for (std::size_t i = 0; i < m; ++i) dst[i] = src[i] / norms[j];
      ++out.nonzero;
    }
  }
  return out;
}

}  // namespace

SvdResult svd(const Matrix& w) {
  if (!all_finite(w)) throw NumericalError("svd: input has non-finite entries");
  const std::size_t d1 = w.rows();
  const std::size_t d2 = w.cols();
  if (d1 == 0 || d2 == 0) throw DimensionError("svd: empty matrix " + w.shape_string());
  const bool tall = d1 >= d2;
  const std::size_t m = tall ? d1 : d2;
  const std::size_t n = tall ? d2 : d1;

  // Work on the tall orientation; columns of x are columns of W (or W^T).
  Columns x(m, n);
  for (std::size_t i = 0; i < d1; ++i) {
    for (std::size_t j = 0; j < d2; ++j) {
      if (tall) x.col(j)[i] = w(i, j); else x.col(i)[j] = w(i, j);
    }
  }
  ThinSvd thin = jacobi_svd(std::move(x));

  // Zero singular values leave holes in the thin basis; compact the nonzero
  // columns to the front (they already are, by the descending sort) and fill.
  Columns big(m, m);
  std::copy_n(thin.u.data.data(), m * thin.nonzero, big.data.data());
  complete_basis(big, thin.nonzero);

  // Left factor of W is `big` when tall, `thin.v` otherwise.
  Columns& left = tall ? big : thin.v;
  Columns& right = tall ? thin.v : big;
  const std::size_t k = n;  // min(d1, d2)

  for (std::size_t j = 0; j < d1; ++j) {
    double* l = left.col(j);
    if (l[argmax_abs(l, d1)] < 0.0) {
      for (std::size_t i = 0; i < d1; ++i) l[i] = -l[i];
      if (j < k) {
        double* r = right.col(j);
        for (std::size_t i = 0; i < d2; ++i) r[i] = -r[i];
      }
    }
  }
  // Right vectors without a singular-value partner get the same rule.
  for (std::size_t j = k; j < d2; ++j) {
    double* r = right.col(j);
    if (r[argmax_abs(r, d2)] < 0.0) {
      for (std::size_t i = 0; i < d2; ++i) r[i] = -r[i];
    }
  }

  SvdResult out{Matrix(d1, d1), std::vector<float>(k), Matrix(d2, d2)};
  for (std::size_t j = 0; j < d1; ++j)
    for (std::size_t i = 0; i < d1; ++i) out.u(i, j) = static_cast<float>(left.col(j)[i]);
  for (std::size_t j = 0; j < d2; ++j)
    for (std::size_t i = 0; i < d2; ++i) out.vt(j, i) = static_cast<float>(right.col(j)[i]);
  for (std::size_t j = 0; j < k; ++j) out.s[j] = static_cast<float>(thin.s[j]);
  return out;
}

LowRankFactor truncate(const SvdResult& svd, std::size_t r) {
  const std::size_t d1 = svd.u.rows();
  const std::size_t d2 = svd.vt.cols();
  const std::size_t limit = svd.s.size();
  if (r < 1 || r > limit) {
    throw RankError("truncate: rank " + std::to_string(r) + " outside [1, " +
                    std::to_string(limit) + "]");
  }
  LowRankFactor f{Matrix(d1, r), svd.vt.block(0, 0, r, d2)};
  for (std::size_t i = 0; i < d1; ++i)
    for (std::size_t j = 0; j < r; ++j) f.a(i, j) = svd.u(i, j) * svd.s[j];
  return f;
}

EigResult symmetric_eigen(const Matrix& sym) {
  const std::size_t n = sym.rows();
  if (n != sym.cols()) throw DimensionError("symmetric_eigen: not square " + sym.shape_string());
  if (!all_finite(sym)) throw NumericalError("symmetric_eigen: non-finite input");

  std::vector<double> a(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      a[i * n + j] = 0.5 * (static_cast<double>(sym(i, j)) + sym(j, i));
  Columns v(n, n);
  for (std::size_t j = 0; j < n; ++j) v.col(j)[j] = 1.0;

  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
  double total = 0.0;
  for (double x : a) total += x * x;
  const double target = kOrthTol * kOrthTol * std::max(total, 1e-300);

  bool converged = (n < 2);
  double off = 0.0;
  for (int sweep = 0; sweep <= kMaxSweeps && !converged; ++sweep) {
    off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += 2.0 * at(p, q) * at(p, q);
    if (off <= target) {
      converged = true;
      break;
    }
    if (sweep == kMaxSweeps) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) /
                         (std::fabs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // A <- J^T A J with J rotating the (p, q) plane.
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = at(k, p);
          const double akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = at(p, k);
          const double aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
        rotate(v.col(p), v.col(q), n, c, s);
      }
    }
  }
  if (!converged) {
    throw NumericalError("symmetric_eigen: no convergence after " +
                             std::to_string(kMaxSweeps) + " sweeps",
                         std::sqrt(off / std::max(total, 1e-300)));
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return at(x, x) > at(y, y); });
  EigResult out{Matrix(n, n), std::vector<float>(n)};
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.values[k] = static_cast<float>(at(j, j));
    double* col = v.col(j);
    const double sign = col[argmax_abs(col, n)] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = static_cast<float>(sign * col[i]);
  }
  return out;
}

Matrix activation_covariance(const Matrix& y) {
  const std::size_t d = y.rows();
  const std::size_t n = y.cols();
  if (n < 2) {
    throw DataError("activation_covariance: need at least 2 samples, got " +
                    std::to_string(n));
  }
  std::vector<double> centered(d * n);
  for (std::size_t i = 0; i < d; ++i) {
    double mean = 0.0;
    for (std::size_t t = 0; t < n; ++t) mean += y(i, t);
    mean /= static_cast<double>(n);
    for (std::size_t t = 0; t < n; ++t) centered[i * n + t] = y(i, t) - mean;
  }
  Matrix cov(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      const double c = dot(&centered[i * n], &centered[j * n], n) / static_cast<double>(n);
      cov(i, j) = cov(j, i) = static_cast<float>(c);
    }
  }
  return cov;
}

LowRankFactor afm_factor(const Matrix& w, const Matrix& calib, std::size_t r) {
  if (w.cols() != calib.rows()) {
    throw DimensionError("afm_factor: weight " + w.shape_string() +
                         " incompatible with calibration " + calib.shape_string());
  }
  if (r < 1 || r > w.rows()) {
    throw RankError("afm_factor: rank " + std::to_string(r) + " outside [1, " +
                    std::to_string(w.rows()) + "]");
  }
  const Matrix outputs = matmul(w, calib);
  const EigResult eig = symmetric_eigen(activation_covariance(outputs));
  LowRankFactor f;
  f.a = eig.vectors.block(0, 0, w.rows(), r);
  f.b = matmul_tn(f.a, w);
  return f;
}

AfmResiduals afm_residuals(const Matrix& w, const Matrix& calib,
                           const LowRankFactor& factor) {
  const Matrix y = matmul(w, calib);
  const Matrix y_hat = matmul(factor.a, matmul(factor.b, calib));
  const Matrix mean_y = row_mean(y);
  const Matrix mean_hat = row_mean(y_hat);
  const std::size_t n = y.cols();
  AfmResiduals out;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t t = 0; t < n; ++t) {
      const double raw = static_cast<double>(y(i, t)) - y_hat(i, t);
      const double cen = raw - (static_cast<double>(mean_y(i, 0)) - mean_hat(i, 0));
      out.uncentered += raw * raw;
      out.centered += cen * cen;
    }
  }
  out.uncentered /= static_cast<double>(n);
  out.centered /= static_cast<double>(n);
  return out;
}

double stable_rank(const Matrix& m) {
  if (frobenius_norm(m) == 0.0) {
    throw InputError("stable_rank: undefined for the zero matrix " + m.shape_string());
  }
  const SvdResult d = svd(m);
  double total = 0.0;
  for (float s : d.s) total += static_cast<double>(s) * s;
  const double top = static_cast<double>(d.s.front()) * d.s.front();
  return total / top;
}

}  // namespace lrd
