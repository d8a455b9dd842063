// Copyright 2026 The otinfill Authors
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

#include <vector>

#include "otinfill/denoiser.hpp"
#include "otinfill/ot_coupling.hpp"
#include "otinfill/position_diffusion.hpp"
#include "otinfill/trainer.hpp"

namespace {

using namespace otinfill;

// One coupling per iteration at L = 64 with a fresh random limit each time,
// mirroring what precompute-ot does per sample. Target: >= 10k/s.
void BM_BuildCoupling(benchmark::State& state) {
  const int L = 64;
  const int l = static_cast<int>(state.range(0));
  const int lp = l / 4;
  Rng rng(42);
  const auto z0 = build_z0(l, L);
  std::vector<SlotClass> c0(l, SlotClass::kResponse);
  for (int i = 0; i < lp; ++i) c0[i * 4] = SlotClass::kPrompt;
  std::vector<PositionVector> limits;
  for (int k = 0; k < 256; ++k) limits.push_back(sample_zT_random(L, lp, rng));
  std::size_t k = 0;
  for (auto _ : state) {
    const auto& zT = limits[k++ % limits.size()];
    benchmark::DoNotOptimize(build_coupling(z0, c0, zT.values, zT.classes, l, L));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_BuildCoupling)->Arg(8)->Arg(32)->Arg(64);

DenoiserConfig bench_model(int D, int layers) {
  DenoiserConfig c;
  c.vocab_size = 32;
  c.embed_dim = D;
  c.num_layers = layers;
  c.num_heads = 4;
  c.mlp_ratio = 4;
  c.context_length = 64;
  return c;
}

DiffusionState bench_state(const DenoiserConfig& c) {
  DiffusionState s;
  Rng rng(7);
  const auto zT = sample_zT_random(c.context_length, 8, rng);
  s.positions = zT.values;
  s.classes = zT.classes;
  s.tokens.assign(c.context_length, c.vocab().mask());
  for (int i = 0; i < 8; ++i) s.tokens[i] = i;
  s.t = 0.5;
  return s;
}

void BM_Forward(benchmark::State& state) {
  const auto c = bench_model(static_cast<int>(state.range(0)), 2);
  const auto params = init_parameters(c, 1);
  const auto s = bench_state(c);
  for (auto _ : state) benchmark::DoNotOptimize(forward(params, s));
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_ForwardBackward(benchmark::State& state) {
  const auto c = bench_model(static_cast<int>(state.range(0)), 2);
  const auto params = init_parameters(c, 1);
  const auto s = bench_state(c);
  auto grads = ParameterSet::zeros_like(params);
  OutputGrad up;
  up.d_log_scores = ScoreTable::Constant(c.context_length, c.vocab_size, 1e-3);
  up.d_velocities.assign(c.context_length, 1e-3);
  for (auto _ : state) {
    ForwardCacheHandle cache;
    benchmark::DoNotOptimize(forward(params, s, &cache));
    backward(params, cache, up, grads);
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
