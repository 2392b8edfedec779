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
#include <string>

#include "doctest.h"
#include "lrd/errors.hpp"
#include "lrd/pretrain.hpp"

namespace {

lrd::ModelConfig tiny() {
  lrd::ModelConfig c;
  c.d_model = 32;
  c.n_layers = 2;
  c.n_heads = 2;
  c.d_ff = 64;
  c.max_seq = 32;
  return c;
}

lrd::Corpus text() {
  std::string s;
  for (int i = 0; i < 400; ++i) s += "the quick brown fox jumps over the lazy dog. ";
  return lrd::Corpus(lrd::tokenize(s), 0.05);
}

}  // namespace

TEST_CASE("learning rate schedule") {
  lrd::PretrainConfig c;
  c.learning_rate = 1e-3;
  c.warmup_steps = 10;
  c.min_lr_ratio = 0.1;
  CHECK(lrd::pretrain_lr(c, 0, 110) == doctest::Approx(1e-4));
  CHECK(lrd::pretrain_lr(c, 9, 110) == doctest::Approx(1e-3));
  CHECK(lrd::pretrain_lr(c, 10, 110) == doctest::Approx(1e-3));
  CHECK(lrd::pretrain_lr(c, 60, 110) == doctest::Approx(0.55e-3));
  CHECK(lrd::pretrain_lr(c, 110, 110) == doctest::Approx(1e-4));
  CHECK(lrd::pretrain_lr(c, 500, 110) == doctest::Approx(1e-4));
  double prev = 1.0;
  for (std::size_t s = 10; s <= 110; ++s) {
    const double lr = lrd::pretrain_lr(c, s, 110);
    CHECK(lr <= prev);
    prev = lr;
  }
}

TEST_CASE("pretraining lowers held-out perplexity and is deterministic") {
  const auto corpus = text();
  lrd::PretrainConfig c;
  c.token_budget = 40000;
  c.batch_size = 8;
  c.seq_len = 32;
  c.warmup_steps = 10;
  c.learning_rate = 3e-3;
  c.eval_interval = 10000;
  c.seed = 5;
  std::size_t seen = 0;
  const auto a = lrd::pretrain(tiny(), corpus, c, [&](const lrd::PretrainRecord&) { ++seen; });
  const auto b = lrd::pretrain(tiny(), corpus, c);
  REQUIRE(a.records.size() >= 3);
  CHECK(seen == a.records.size());
  CHECK(a.records.front().tokens_seen == 0);
  CHECK(std::isnan(a.records.front().train_loss));
  CHECK(a.records.front().held_out_ppl > 100.0);
  CHECK(a.records.back().held_out_ppl < 0.1 * a.records.front().held_out_ppl);
  CHECK(a.records.back().tokens_seen >= c.token_budget);
  CHECK(lrd::pretrain_csv(a.records) == lrd::pretrain_csv(b.records));
  CHECK(a.model.head == b.model.head);
  CHECK(lrd::pretrain_csv(a.records).rfind("tokens_seen,step,lr,train_loss,held_out_ppl\n", 0) == 0);
}

TEST_CASE("pretraining configuration errors") {
  const auto corpus = text();
  lrd::PretrainConfig c;
  c.seq_len = 64;
  CHECK_THROWS_AS(lrd::pretrain(tiny(), corpus, c), lrd::ConfigError);
  c.seq_len = 16;
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(lrd::pretrain(tiny(), corpus, c), lrd::ConfigError);
}
