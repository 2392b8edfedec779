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

#include "doctest.h"
#include "gradcheck.hpp"
#include "lrd/autodiff.hpp"
#include "lrd/errors.hpp"
#include "lrd/linalg.hpp"
#include "oracles.hpp"

using lrd::Matrix;
using lrd::ad::Feed;
using lrd::ad::Tape;

TEST_CASE("every op kind passes a finite-difference check over ten seeds") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto cases = gradcheck::all_cases(seed);
    for (auto& c : cases) {
      CAPTURE(c.op);
      CAPTURE(seed);
      CHECK(gradcheck::relative_error(c) < 1e-2);
    }
  }
}

TEST_CASE("squared norm and its gradient") {
  const Matrix x{{3, 4}};
  Tape t;
  auto v = t.parameter(&x);
  t.sum(t.hadamard(v, v));
  CHECK(t.forward({}) == doctest::Approx(25.0));
  t.backward();
  CHECK(t.grad(v) == Matrix{{6, 8}});
}

TEST_CASE("a parameter the loss ignores gets a zero gradient") {
  const Matrix x{{1, 2}};
  const Matrix unused{{5, 5}};
  Tape t;
  auto a = t.parameter(&x);
  auto b = t.parameter(&unused);
  (void)b;
  t.sum(a);
  t.forward({});
  t.backward();
  CHECK(t.grad(b) == Matrix::zeros(1, 2));
}

TEST_CASE("state and graph errors") {
  const Matrix x{{1, 2}};
  Tape t;
  auto in = t.input("x");
  auto p = t.parameter(&x);
  t.sum(t.add(in, p));
  CHECK_THROWS_AS(t.backward(), lrd::StateError);
  CHECK_THROWS_AS(t.forward({}), lrd::GraphError);
  const Matrix wrong{{1, 2, 3}};
  Feed f;
  f.matrices["x"] = &wrong;
  CHECK_THROWS_AS(t.forward(f), lrd::GraphError);
  f.matrices["x"] = &x;
  CHECK(t.forward(f) == doctest::Approx(6.0));
}

TEST_CASE("gradient of a sum of losses is the sum of gradients") {
  lrd::Rng rng(4);
  const Matrix y = lrd::randn(6, 5, rng);
  const Matrix p = lrd::randn(6, 5, rng);
  auto grad_of = [&](int which) {
    Tape t;
    auto target = t.constant(&y);
    auto pred = t.parameter(&p);
    if (which == 0) t.l1_mean(target, pred);
    if (which == 1) t.cosine_logsig(target, pred);
    if (which == 2) t.add(t.l1_mean(target, pred), t.cosine_logsig(target, pred));
    t.forward({});
    t.backward();
    return t.grad(pred);
  };
  const Matrix both = grad_of(2);
  CHECK(lrd::max_abs_diff(both, lrd::add(grad_of(0), grad_of(1))) < 1e-5);
}

TEST_CASE("forward and backward are bitwise repeatable") {
  auto cases = gradcheck::all_cases(99);
  for (auto& c : cases) {
    Tape t;
    std::vector<lrd::ad::Var> vars;
    for (const Matrix& p : c.params) vars.push_back(t.parameter(&p));
    c.build(t, vars);
    const double l1 = t.forward(c.feed);
    t.backward();
    std::vector<Matrix> g1;
    for (auto v : vars) g1.push_back(t.grad(v));
    const double l2 = t.forward(c.feed);
    t.backward();
    CHECK(l1 == l2);
    for (std::size_t i = 0; i < vars.size(); ++i) CHECK(t.grad(vars[i]) == g1[i]);
  }
}

TEST_CASE("l1 subgradient at zero is zero") {
  const Matrix y{{1, 2}};
  const Matrix p{{1, 2}};
  Tape t;
  const auto pv = t.parameter(&p);
  t.l1_mean(t.constant(&y), pv);
  t.forward({});
  t.backward();
  CHECK(t.grad(pv) == Matrix::zeros(1, 2));
}

TEST_CASE("cosine-logsig stays finite on zero rows") {
  const Matrix y{{0, 0}, {1, 0}};
  const Matrix p{{0, 0}, {0, 0}};
  Tape t;
  auto v = t.parameter(&p);
  t.cosine_logsig(t.constant(&y), v);
  // Both rows have cos = 0, each contributing log 2.
  CHECK(t.forward({}) == doctest::Approx(2.0 * std::log(2.0)));
  t.backward();
  CHECK(lrd::all_finite(t.grad(v)));
}

TEST_CASE("linear student from an exact factor sits at the loss floor") {
  lrd::Rng rng(12);
  const Matrix w = lrd::randn(6, 4, rng);
  const auto f = lrd::truncate(lrd::svd(w), 4);
  const Matrix x = lrd::randn(10, 4, rng);  // ten tokens
  const Matrix y = lrd::matmul_nt(x, w);
  Tape t;
  auto in = t.input("x");
  auto out = t.matmul(t.matmul(in, t.parameter(&f.b), true), t.parameter(&f.a), true);
  auto target = t.constant(&y);
  t.add(t.l1_mean(target, out), t.cosine_logsig(target, out));
  Feed feed;
  feed.matrices["x"] = &x;
  const double floor = std::log1p(std::exp(-1.0));
  CHECK(floor == doctest::Approx(0.3133).epsilon(1e-3));
  CHECK(t.forward(feed) == doctest::Approx(10 * floor).epsilon(1e-4));
}

TEST_CASE("gated MLP graph matches a straight-line computation") {
  lrd::Rng rng(21);
  const std::size_t n = 5, d = 6, f = 9;
  const Matrix x = lrd::randn(n, d, rng);
  const Matrix gain = gradcheck::uniform(1, d, rng, 0.5, 1.5);
  const Matrix wg = lrd::randn(f, d, rng), wu = lrd::randn(f, d, rng), wd = lrd::randn(d, f, rng);
  Tape t;
  auto xin = t.input("x");
  auto h = t.rmsnorm(xin, t.constant(&gain));
  auto act = t.hadamard(t.silu(t.matmul(h, t.constant(&wg), true)),
                        t.matmul(h, t.constant(&wu), true));
  auto out = t.add(xin, t.matmul(act, t.constant(&wd), true));
  t.sum(out);
  Feed feed;
  feed.matrices["x"] = &x;
  t.forward(feed);
  const Matrix& got = t.value(out);

  for (std::size_t i = 0; i < n; ++i) {
    double ms = 0.0;
    for (std::size_t j = 0; j < d; ++j) ms += double(x(i, j)) * x(i, j);
    const double inv = 1.0 / std::sqrt(ms / d + 1e-5);
    std::vector<double> hn(d), a(f);
    for (std::size_t j = 0; j < d; ++j) hn[j] = x(i, j) * inv * gain(0, j);
    for (std::size_t k = 0; k < f; ++k) {
      double g = 0.0, u = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        g += wg(k, j) * hn[j];
        u += wu(k, j) * hn[j];
      }
      a[k] = g * oracle::sigmoid(g) * u;
    }
    for (std::size_t j = 0; j < d; ++j) {
      double o = x(i, j);
      for (std::size_t k = 0; k < f; ++k) o += wd(j, k) * a[k];
      CHECK(got(i, j) == doctest::Approx(o).epsilon(1e-6));
    }
  }
}

TEST_CASE("op names") {
  CHECK(std::string(lrd::ad::op_name(lrd::ad::Op::kCosineLogSig)) == "cosine-logsig");
  CHECK(std::string(lrd::ad::op_name(lrd::ad::Op::kMatmul)) == "matmul");
}
