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

// Central finite-difference gradient checks for every differentiable tape op.
// Shared by the unit tests and the acceptance suite.

#pragma once

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lrd/autodiff.hpp"
#include "lrd/tensor.hpp"

namespace gradcheck {

using lrd::Matrix;
using lrd::ad::Tape;
using lrd::ad::Var;

/// Builds a graph whose last node is a scalar loss, from parameter leaves
/// bound to `params` (in order).
using Builder = std::function<void(Tape&, const std::vector<Var>&)>;

struct Case {
  std::string op;
  std::vector<Matrix> params;
  lrd::ad::Feed feed;
  std::vector<std::vector<std::int32_t>> ids;  // owned storage referenced by feed
  Builder build;
};

/// ||analytic - numeric|| / max(||analytic||, ||numeric||, 1e-6) over all
/// parameters, with central differences of step h.
inline double relative_error(Case& c, double h = 1e-3) {
  Tape tape;
  std::vector<Var> vars;
  for (const Matrix& p : c.params) vars.push_back(tape.parameter(&p));
  c.build(tape, vars);
  tape.forward(c.feed);
  tape.backward();
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < c.params.size(); ++i) {
    const Matrix analytic = tape.grad(vars[i]);
    auto data = c.params[i].data();
    for (std::size_t j = 0; j < data.size(); ++j) {
      const float saved = data[j];
      data[j] = static_cast<float>(saved + h);
      const double up = tape.forward(c.feed);
      data[j] = static_cast<float>(saved - h);
      const double down = tape.forward(c.feed);
      data[j] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic.data()[j];
      diff += (a - numeric) * (a - numeric);
      na += a * a;
      nn += numeric * numeric;
    }
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-6});
}

inline Matrix uniform(std::size_t r, std::size_t c, lrd::Rng& rng, double lo = -1.0,
                      double hi = 1.0) {
  Matrix m(r, c);
  for (float& v : m.data()) v = static_cast<float>(lo + (hi - lo) * rng.uniform());
  return m;
}

/// One case per differentiable op kind. The op output is reduced to a scalar
/// through a fixed random weighting so every output entry matters.
inline std::vector<Case> all_cases(std::uint64_t seed) {
  lrd::Rng rng(seed * 7919 + 17);
  std::vector<Case> cases;
  auto weighted = [](Tape& t, Var out, const Matrix* w) {
    t.sum(t.hadamard(out, t.constant(w)));
  };
  // Weight matrices must outlive the tape; they are kept in shared storage.
  auto keep = std::make_shared<std::vector<std::unique_ptr<Matrix>>>();
  auto hold = [keep](Matrix m) {
    keep->push_back(std::make_unique<Matrix>(std::move(m)));
    return keep->back().get();
  };

  {
    Case c{"matmul", {uniform(3, 4, rng), uniform(4, 5, rng)}, {}, {}, {}};
    const Matrix* w = hold(uniform(3, 5, rng));
    c.build = [=](Tape& t, const std::vector<Var>& p) { weighted(t, t.matmul(p[0], p[1]), w); };
    cases.push_back(std::move(c));
  }
  {
    Case c{"matmul-nt", {uniform(3, 4, rng), uniform(5, 4, rng)}, {}, {}, {}};
    const Matrix* w = hold(uniform(3, 5, rng));
    c.build = [=](Tape& t, const std::vector<Var>& p) {
      weighted(t, t.matmul(p[0], p[1], true), w);
    };
    cases.push_back(std::move(c));
  }
  {
    Case c{"add", {uniform(3, 4, rng), uniform(3, 4, rng)}, {}, {}, {}};
    const Matrix* w = hold(uniform(3, 4, rng));
    c.build = [=](Tape& t, const std::vector<Var>& p) { weighted(t, t.add(p[0], p[1]), w); };
    cases.push_back(std::move(c));
  }
  {
    Case c{"scale", {uniform(3, 4, rng)}, {}, {}, {}};
    const Matrix* w = hold(uniform(3, 4, rng));
    c.build = [=](Tape& t, const std::vector<Var>& p) { weighted(t, t.scale(p[0], -1.7f), w); };
    cases.push_back(std::move(c));
  }
  {
    Case c{"hadamard", {uniform(3, 4, rng), uniform(3, 4, rng)}, {}, {}, {}};
    const Matrix* w = hold(uniform(3, 4, rng));
    c.build = [=](Tape& t, const std::vector<Var>& p) { weighted(t, t.hadamard(p[0], p[1]), w); };
    cases.push_back(std::move(c));
  }
  {
    Case c{"silu", {uniform(3, 4, rng, -3, 3)}, {}, {}, {}};
    const Matrix* w = hold(uniform(3, 4, rng));
    c.build = [=](Tape& t, const std::vector<Var>& p) { weighted(t, t.silu(p[0]), w); };
    cases.push_back(std::move(c));
  }
  {
    Case c{"rmsnorm", {uniform(4, 6, rng), uniform(1, 6, rng, 0.5, 1.5)}, {}, {}, {}};
    const Matrix* w = hold(uniform(4, 6, rng));
    c.build = [=](Tape& t, const std::vector<Var>& p) { weighted(t, t.rmsnorm(p[0], p[1]), w); };
    cases.push_back(std::move(c));
  }
  {
    Case c{"softmax-rows", {uniform(3, 5, rng, -2, 2)}, {}, {}, {}};
    const Matrix* w = hold(uniform(3, 5, rng));
    c.build = [=](Tape& t, const std::vector<Var>& p) { weighted(t, t.softmax_rows(p[0]), w); };
    cases.push_back(std::move(c));
  }
  {
    // Two sequences of three tokens, two heads of width four.
    Case c{"causal-attention", {uniform(6, 8, rng), uniform(6, 8, rng), uniform(6, 8, rng)}, {}, {}, {}};
    const Matrix* w = hold(uniform(6, 8, rng));
    c.build = [=](Tape& t, const std::vector<Var>& p) {
      weighted(t, t.causal_attention(p[0], p[1], p[2], 2, 3), w);
    };
    cases.push_back(std::move(c));
  }
  {
    Case c{"embedding", {uniform(7, 4, rng)}, {}, {{3, 0, 3, 6, 1}}, {}};
    const Matrix* w = hold(uniform(5, 4, rng));
    c.build = [=](Tape& t, const std::vector<Var>& p) {
      weighted(t, t.embedding(t.index_input("ids"), p[0]), w);
    };
    cases.push_back(std::move(c));
  }
  {
    // Keep every difference well away from the kink at zero.
    Matrix target = uniform(4, 5, rng);
    Matrix pred = target;
    for (float& v : pred.data()) v += (rng.uniform() < 0.5 ? -1.0f : 1.0f) * (0.1f + float(rng.uniform()));
    Case c{"l1-mean", {std::move(target), std::move(pred)}, {}, {}, {}};
    c.build = [](Tape& t, const std::vector<Var>& p) { t.l1_mean(p[0], p[1]); };
    cases.push_back(std::move(c));
  }
  {
    Case c{"cosine-logsig", {uniform(4, 5, rng), uniform(4, 5, rng)}, {}, {}, {}};
    c.build = [](Tape& t, const std::vector<Var>& p) { t.cosine_logsig(p[0], p[1]); };
    cases.push_back(std::move(c));
  }
  {
    Case c{"sum", {uniform(3, 4, rng)}, {}, {}, {}};
    c.build = [](Tape& t, const std::vector<Var>& p) { t.sum(p[0]); };
    cases.push_back(std::move(c));
  }
  {
    Case c{"cross-entropy", {uniform(5, 7, rng, -2, 2)}, {}, {{0, 6, 2, 2, 5}}, {}};
    c.build = [](Tape& t, const std::vector<Var>& p) {
      t.cross_entropy(p[0], t.index_input("targets"));
    };
    cases.push_back(std::move(c));
  }
  for (Case& c : cases) {
    if (c.op == "embedding") c.feed.indices["ids"] = &c.ids[0];
    if (c.op == "cross-entropy") c.feed.indices["targets"] = &c.ids[0];
    // Keep the weighting matrices alive as long as the case.
    auto inner = c.build;
    c.build = [inner, keep](Tape& t, const std::vector<Var>& p) { inner(t, p); };
  }
  return cases;
}

}  // namespace gradcheck
