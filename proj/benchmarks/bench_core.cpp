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

#include <benchmark/benchmark.h>

#include "lrd/distill.hpp"
#include "lrd/eval.hpp"
#include "lrd/linalg.hpp"
#include "lrd/model.hpp"

namespace {

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto m = static_cast<std::size_t>(state.range(2));
  lrd::Rng rng(1);
  const lrd::Matrix a = lrd::randn(n, k, rng);
  const lrd::Matrix b = lrd::randn(k, m, rng);
  for (auto _ : state) benchmark::DoNotOptimize(lrd::matmul(a, b));
  state.counters["flop/s"] =
      benchmark::Counter(2.0 * double(n * k * m), benchmark::Counter::kIsIterationInvariantRate);
}
// Token-batch times toy projection shapes.
BENCHMARK(BM_Matmul)->Args({2048, 128, 128})->Args({2048, 128, 344})->Args({2048, 344, 128});

void BM_Svd(benchmark::State& state) {
  lrd::Rng rng(2);
  const lrd::Matrix w =
      lrd::randn(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(lrd::svd(w));
}
BENCHMARK(BM_Svd)->Args({64, 48})->Args({128, 128})->Args({344, 128})->Unit(benchmark::kMillisecond);

// One layer of the default toy model, dense or with every projection factored.
void BM_LayerForward(benchmark::State& state) {
  const std::size_t rank = static_cast<std::size_t>(state.range(0));
  const lrd::ModelConfig cfg;
  lrd::Rng rng(3);
  lrd::Model model = lrd::init_model(cfg, rng);
  if (rank > 0) {
    for (lrd::MatrixName n : lrd::kMatrixNames) {
      const auto& w = std::get<lrd::Matrix>(model.layers[0][n]);
      lrd::replace_matrix(model, 0, n, lrd::truncate(lrd::svd(w), rank));
    }
  }
  const std::size_t batch = 8;
  const lrd::Matrix x = lrd::randn(batch * cfg.max_seq, cfg.d_model, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lrd::layer_forward(model.layers[0], x, cfg, cfg.max_seq));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch * cfg.max_seq));
  state.counters["flops/token"] = double(lrd::layer_flops(model.layers[0], cfg, cfg.max_seq));
}
BENCHMARK(BM_LayerForward)->Arg(0)->Arg(56)->Arg(32)->Unit(benchmark::kMillisecond);

// A joint-loss distillation step on the default 20% bottom plan.
void BM_DistillStep(benchmark::State& state) {
  const lrd::ModelConfig cfg;
  lrd::Rng rng(4);
  const lrd::Model teacher = lrd::init_model(cfg, rng);
  const auto shape = lrd::shape_of(teacher);
  const auto plan =
      lrd::plan_bottom(shape, lrd::target_from_reduction(shape.total_params, 0.2), 32, 8);
  lrd::DistillConfig dc;
  lrd::Distiller d(teacher, lrd::init_students(teacher, plan, lrd::InitMethod::kSvd), dc);
  lrd::TokenBatch batch{dc.batch_size, dc.seq_len, {}};
  for (std::size_t i = 0; i < dc.batch_size * dc.seq_len; ++i) {
    batch.ids.push_back(static_cast<std::int32_t>(rng.uniform_int(cfg.vocab)));
  }
  for (auto _ : state) benchmark::DoNotOptimize(d.step(batch));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch.ids.size()));
}
BENCHMARK(BM_DistillStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
