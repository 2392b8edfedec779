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

#include <cmath>
#include <numeric>

#include "doctest.h"
#include "lrd/errors.hpp"
#include "lrd/linalg.hpp"
#include "oracles.hpp"

using lrd::Matrix;

namespace {

double sq_norm(const Matrix& m) {
  double s = 0.0;
  for (float v : m.data()) s += static_cast<double>(v) * v;
  return s;
}

void check_orthonormal(const Matrix& q, double tol) {
  const Matrix g = lrd::matmul_tn(q, q);
  CHECK(lrd::max_abs_diff(g, Matrix::identity(q.cols())) < tol);
}

}  // namespace

TEST_CASE("svd of a diagonal matrix") {
  const auto r = lrd::svd(Matrix{{3, 0, 0}, {0, 2, 0}, {0, 0, 1}});
  REQUIRE(r.s.size() == 3);
  CHECK(r.s[0] == doctest::Approx(3));
  CHECK(r.s[1] == doctest::Approx(2));
  CHECK(r.s[2] == doctest::Approx(1));
}

TEST_CASE("svd of a rank-1 outer product") {
  const Matrix u{{1}, {2}, {2}};
  const Matrix v{{3, 4}};
  const auto r = lrd::svd(lrd::matmul(u, v));
  CHECK(r.s[0] == doctest::Approx(15.0));
  CHECK(std::abs(r.s[1]) < 1e-5);
}

TEST_CASE("svd matches eigenvalues of the Gram matrix") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix w = oracle::lcg_matrix(8, 6, seed);
    const auto g = oracle::to_grid(w);
    const auto ev = oracle::jacobi_eigenvalues(oracle::matmul(oracle::transpose(g), g));
    const auto r = lrd::svd(w);
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(r.s[i] == doctest::Approx(std::sqrt(std::max(ev[i], 0.0))).epsilon(1e-4));
    }
  }
}

TEST_CASE("svd invariants on tall, wide and degenerate shapes") {
  const std::vector<Matrix> cases = {oracle::lcg_matrix(9, 4, 1), oracle::lcg_matrix(4, 9, 2),
                                     oracle::lcg_matrix(1, 5, 3), oracle::lcg_matrix(5, 1, 4),
                                     Matrix::zeros(3, 2),
                                     lrd::matmul(oracle::lcg_matrix(6, 2, 5),
                                                 oracle::lcg_matrix(2, 5, 6))};
  for (const Matrix& w : cases) {
    const auto r = lrd::svd(w);
    CHECK(r.u.rows() == w.rows());
    CHECK(r.u.cols() == w.rows());
    CHECK(r.vt.rows() == w.cols());
    CHECK(r.vt.cols() == w.cols());
    for (std::size_t i = 0; i < r.s.size(); ++i) {
      CHECK(r.s[i] >= 0.0f);
      if (i) CHECK(r.s[i] <= r.s[i - 1]);
    }
    check_orthonormal(r.u, 1e-4);
    check_orthonormal(lrd::transpose(r.vt), 1e-4);
    Matrix sigma(w.rows(), w.cols());
    for (std::size_t i = 0; i < r.s.size(); ++i) sigma(i, i) = r.s[i];
    const Matrix rec = lrd::matmul(lrd::matmul(r.u, sigma), r.vt);
    CHECK(lrd::frobenius_norm(lrd::sub(rec, w)) <= 1e-4 * std::max(1.0, lrd::frobenius_norm(w)));
    // Sign convention: the largest-magnitude entry of each left vector is positive.
    for (std::size_t c = 0; c < r.u.cols(); ++c) {
      float best = 0.0f;
      for (std::size_t i = 0; i < r.u.rows(); ++i) {
        if (std::abs(r.u(i, c)) > std::abs(best)) best = r.u(i, c);
      }
      CHECK(best > 0.0f);
    }
  }
}

TEST_CASE("svd is bitwise deterministic") {
  const Matrix w = oracle::lcg_matrix(12, 7, 11);
  const auto a = lrd::svd(w);
  const auto b = lrd::svd(w);
  CHECK(a.u == b.u);
  CHECK(a.s == b.s);
  CHECK(a.vt == b.vt);
}

TEST_CASE("truncate") {
  const Matrix d{{3, 0, 0}, {0, 2, 0}, {0, 0, 1}};
  const auto f = lrd::truncate(lrd::svd(d), 2);
  CHECK(f.rank() == 2);
  CHECK(lrd::max_abs_diff(f.product(), Matrix{{3, 0, 0}, {0, 2, 0}, {0, 0, 0}}) < 1e-5);
  CHECK(sq_norm(lrd::sub(d, f.product())) == doctest::Approx(1.0).epsilon(1e-4));

  const Matrix w = oracle::lcg_matrix(8, 6, 4);
  const auto s = lrd::svd(w);
  const auto full = lrd::truncate(s, 6);
  CHECK(lrd::frobenius_norm(lrd::sub(w, full.product())) <= 1e-4 * lrd::frobenius_norm(w));
  const auto f3 = lrd::truncate(s, 3);
  CHECK(f3.a.rows() == 8);
  CHECK(f3.a.cols() == 3);
  CHECK(f3.b.rows() == 3);
  CHECK(f3.b.cols() == 6);
  const double tail = double(s.s[3]) * s.s[3] + double(s.s[4]) * s.s[4] + double(s.s[5]) * s.s[5];
  CHECK(sq_norm(lrd::sub(w, f3.product())) == doctest::Approx(tail).epsilon(1e-4));

  CHECK_THROWS_AS(lrd::truncate(s, 0), lrd::RankError);
  CHECK_THROWS_AS(lrd::truncate(s, 7), lrd::RankError);
}

TEST_CASE("truncation beats random factorizations") {
  lrd::Rng rng(3);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix w = oracle::lcg_matrix(10, 7, seed + 50);
    const auto s = lrd::svd(w);
    for (std::size_t r = 1; r <= 7; ++r) {
      const double best = sq_norm(lrd::sub(w, lrd::truncate(s, r).product()));
      for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = lrd::randn(10, r, rng);
        const Matrix b = lrd::randn(r, 7, rng);
        CHECK(best <= sq_norm(lrd::sub(w, lrd::matmul(a, b))) + 1e-6);
      }
    }
  }
}

TEST_CASE("symmetric eigen") {
  const Matrix a = oracle::lcg_matrix(6, 6, 21);
  const Matrix sym = lrd::add(a, lrd::transpose(a));
  const auto e = lrd::symmetric_eigen(sym);
  const auto want = oracle::jacobi_eigenvalues(oracle::to_grid(sym));
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(e.values[i] == doctest::Approx(want[i]).epsilon(1e-4));
    if (i) CHECK(e.values[i] <= e.values[i - 1]);
    Matrix v(6, 1);
    for (std::size_t k = 0; k < 6; ++k) v(k, 0) = e.vectors(k, i);
    const Matrix av = lrd::matmul(sym, v);
    CHECK(lrd::frobenius_norm(lrd::sub(av, lrd::scale(v, e.values[i]))) <=
          1e-4 * std::max(1.0, std::abs(double(e.values[i]))));
  }
  check_orthonormal(e.vectors, 1e-4);
}

TEST_CASE("activation covariance") {
  CHECK(lrd::activation_covariance(Matrix{{2, 2, 2}, {-1, -1, -1}}) == Matrix::zeros(2, 2));
  const Matrix one = lrd::activation_covariance(Matrix{{1, -1}});
  CHECK(one(0, 0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(lrd::activation_covariance(Matrix{{1}, {2}}), lrd::DataError);

  // Two-pass textbook oracle.
  const Matrix y = oracle::lcg_matrix(4, 500, 9);
  const Matrix c = lrd::activation_covariance(y);
  std::vector<double> mean(4, 0.0);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t n = 0; n < 500; ++n) mean[i] += y(i, n);
    mean[i] /= 500.0;
  }
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      double s = 0.0;
      for (std::size_t n = 0; n < 500; ++n) s += (y(i, n) - mean[i]) * (y(j, n) - mean[j]);
      CHECK(c(i, j) == doctest::Approx(s / 500.0).epsilon(1e-5).scale(1.0));
    }
}

TEST_CASE("afm factor with a full basis reproduces W on the calibration set") {
  const Matrix w = oracle::lcg_matrix(5, 4, 31);
  const Matrix x = oracle::lcg_matrix(4, 50, 32);
  const auto f = lrd::afm_factor(w, x, 5);
  const Matrix want = lrd::matmul(w, x);
  const Matrix got = lrd::matmul(f.a, lrd::matmul(f.b, x));
  CHECK(lrd::frobenius_norm(lrd::sub(want, got)) <= 1e-4 * lrd::frobenius_norm(want));
}

TEST_CASE("afm factor on collinear centred outputs") {
  // W maps every input onto the line spanned by (1, 2, -1) once centred.
  const Matrix w{{1, 0}, {2, 0}, {-1, 0}};
  const Matrix x = oracle::lcg_matrix(2, 40, 33);
  const auto f = lrd::afm_factor(w, x, 1);
  const auto res = lrd::afm_residuals(w, x, f);
  CHECK(res.centered < 1e-8);
}

TEST_CASE("afm factor beats random rank-r factorizations on activations") {
  const Matrix w = oracle::lcg_matrix(6, 5, 41);
  // Anisotropic inputs so the activation-space basis matters.
  Matrix x = oracle::lcg_matrix(5, 200, 42);
  for (std::size_t n = 0; n < 200; ++n) {
    x(0, n) *= 5.0f;
    x(1, n) *= 3.0f;
  }
  const std::size_t r = 2;
  const double afm = lrd::afm_residuals(w, x, lrd::afm_factor(w, x, r)).centered;
  lrd::Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    lrd::LowRankFactor f{lrd::randn(6, r, rng), lrd::randn(r, 5, rng)};
    CHECK(afm <= lrd::afm_residuals(w, x, f).centered + 1e-9);
  }
}

TEST_CASE("stable rank") {
  CHECK(lrd::stable_rank(Matrix::identity(4)) == doctest::Approx(4.0));
  CHECK(lrd::stable_rank(lrd::matmul(Matrix{{1}, {2}, {3}}, Matrix{{1, -1, 2}})) ==
        doctest::Approx(1.0));
  CHECK(lrd::stable_rank(Matrix{{2, 0}, {0, 1}}) == doctest::Approx(1.25));
  const Matrix m = oracle::lcg_matrix(7, 5, 8);
  CHECK(lrd::stable_rank(lrd::scale(m, -3.5f)) == doctest::Approx(lrd::stable_rank(m)).epsilon(1e-5));
  const double sr = lrd::stable_rank(m);
  CHECK(sr >= 1.0);
  CHECK(sr <= 5.0);
  CHECK_THROWS_AS(lrd::stable_rank(Matrix::zeros(3, 3)), lrd::InputError);
}

TEST_CASE("saves_parameters boundary") {
  CHECK(lrd::saves_parameters(2, 6, 4));
  CHECK_FALSE(lrd::saves_parameters(3, 6, 4));  // 30 > 24
  CHECK_FALSE(lrd::saves_parameters(64, 128, 128));
  CHECK(lrd::saves_parameters(63, 128, 128));
}
