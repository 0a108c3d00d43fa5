/*
 * Copyright 2026 The growprune Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <benchmark/benchmark.h>

#include "growprune/data.hpp"
#include "growprune/engine.hpp"
#include "growprune/network.hpp"
#include "growprune/ops.hpp"
#include "growprune/rng.hpp"
#include "growprune/training.hpp"

using namespace growprune;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (auto& v : t.values()) v = static_cast<float>(rng.normal());
  return t;
}

void BM_AffineForward(benchmark::State& st) {
  const auto batch = static_cast<std::size_t>(st.range(0));
  const auto x = random_tensor({batch, 784}, 1);
  const auto w = random_tensor({300, 784}, 2);
  const Tensor b({300});
  for (auto _ : st) benchmark::DoNotOptimize(affine_forward(x, w, b));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_AffineForward)->Arg(1)->Arg(64);

void BM_AffineBackward(benchmark::State& st) {
  const auto x = random_tensor({64, 784}, 1);
  const auto w = random_tensor({300, 784}, 2);
  const Tensor b({300});
  const auto g = random_tensor({64, 300}, 3);
  for (auto _ : st) {
    st.PauseTiming();
    LayerCache cache;
    affine_forward(x, w, b, &cache);
    st.ResumeTiming();
    benchmark::DoNotOptimize(affine_backward(g, cache));
  }
}
BENCHMARK(BM_AffineBackward);

void BM_Conv2dForward(benchmark::State& st) {
  const auto x = random_tensor({64, 1, 32, 32}, 1);
  const auto k = random_tensor({6, 1, 5, 5}, 2);
  const Tensor b({6});
  for (auto _ : st) benchmark::DoNotOptimize(conv2d_forward(x, k, b));
}
BENCHMARK(BM_Conv2dForward);

void BM_Conv2dBackward(benchmark::State& st) {
  const auto x = random_tensor({64, 6, 14, 14}, 1);
  const auto k = random_tensor({16, 6, 5, 5}, 2);
  const Tensor b({16});
  const auto g = random_tensor({64, 16, 10, 10}, 3);
  for (auto _ : st) {
    st.PauseTiming();
    LayerCache cache;
    conv2d_forward(x, k, b, &cache);
    st.ResumeTiming();
    benchmark::DoNotOptimize(conv2d_backward(g, cache));
  }
}
BENCHMARK(BM_Conv2dBackward);

Dataset image_batch(std::size_t n) {
  Dataset d;
  d.images = random_tensor({n, 1, 28, 28}, 4);
  for (std::size_t i = 0; i < n; ++i) d.labels.push_back(static_cast<std::int32_t>(i % 10));
  return d;
}

void BM_TrainEpoch(benchmark::State& st) {
  const auto arch = st.range(0) ? ArchitectureSpec::lenet5() : ArchitectureSpec::lenet300100();
  auto model = build_model(arch, InitSpec::sparse(0.3), 1);
  auto state = make_training_state(SgdConfig{0.01f, 0.9f, 0.0f}, 64, 1);
  const auto data = image_batch(512);
  for (auto _ : st) train_epoch(model, state, data);
  st.SetItemsProcessed(st.iterations() * 512);
  st.SetLabel(st.range(0) ? "lenet5" : "lenet-300-100");
}
BENCHMARK(BM_TrainEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_AccumulateGradients(benchmark::State& st) {
  const auto model = build_model(ArchitectureSpec::lenet300100(), InitSpec::sparse(0.1), 1);
  const auto data = image_batch(512);
  for (auto _ : st) benchmark::DoNotOptimize(accumulate_gradients(model, data, 64));
}
BENCHMARK(BM_AccumulateGradients)->Unit(benchmark::kMillisecond);

void BM_PruneStep(benchmark::State& st) {
  const auto base = build_model(ArchitectureSpec::lenet300100(), InitSpec::dense(), 1);
  PruneConfig cfg;
  for (auto _ : st) {
    st.PauseTiming();
    auto m = base;
    st.ResumeTiming();
    benchmark::DoNotOptimize(prune_step(m, cfg));
  }
}
BENCHMARK(BM_PruneStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
