// Copyright 2026 The STT Authors.
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

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "stt/adam.h"
#include "stt/graph.h"
#include "stt/model.h"
#include "stt/retrieval.h"
#include "stt/samples.h"
#include "stt/trainer.h"

namespace {

using namespace stt;

template <typename Real>
Tensor<Real> Random(Shape shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor<Real> t(std::move(shape));
  for (Real& x : t.data()) x = static_cast<Real>(u(rng));
  return t;
}

void BM_MatMulForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  Tensor<float> a = Random<float>({n, n}, rng);
  Tensor<float> b = Random<float>({n, n}, rng);
  for (auto _ : state) {
    Graph<float> g;
    const NodeId x = g.Variable(a);
    const NodeId y = g.Variable(b);
    g.Backward(g.Sum(g.MatMul(x, y)));
    benchmark::DoNotOptimize(a.grad().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_MatMulForwardBackward)->Arg(32)->Arg(128)->Arg(256);

void BM_DecoderStep(benchmark::State& state) {
  model::HyperParams hp = model::HyperParams::Paper();
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto params = model::ModelParams<float>::Initialize(hp, 2048, 10000, 1);
  std::mt19937_64 rng(2);
  const Tensor<float> condition = Random<float>({batch, hp.cvs_dim}, rng);
  const std::vector<data::TokenId> inputs(batch, 5);
  for (auto _ : state) {
    // Binding copies every parameter; keep it out of the timed region.
    state.PauseTiming();
    Graph<float> g;
    const auto p = model::BindConstants(g, params);
    const NodeId cond = g.Constant(condition);
    state.ResumeTiming();
    const auto s0 = model::InitialDecoderState(g, p, cond);
    benchmark::DoNotOptimize(model::DecoderStep(g, p, s0, inputs).second);
  }
}
BENCHMARK(BM_DecoderStep)->Arg(1)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_ToyTrainStep(benchmark::State& state) {
  const model::HyperParams hp = model::HyperParams::Toy();
  std::mt19937_64 rng(3);
  data::FeatureStore store(1, 64);
  std::vector<data::Sample> samples;
  for (std::uint64_t id = 0; id < 8; ++id) {
    const Tensor<float> f = Random<float>({64}, rng);
    store.Add(id, f.values());
    for (int c = 0; c < 4; ++c) {
      std::vector<data::TokenId> cap{1};
      for (int w = 0; w < 20; ++w) cap.push_back(static_cast<data::TokenId>(4 + (id * 7 + w + c) % 60));
      cap.push_back(2);
      samples.push_back({id, cap, cap});
    }
  }
  const auto batch = data::MakeBatches(samples, store, hp.batch_size, 0).front();
  auto params = model::ModelParams<float>::Initialize(hp, 64, 64, 1);
  auto adam = train::AdamState::ZerosLike(params.Named());
  for (auto _ : state) benchmark::DoNotOptimize(train::TrainStep(params, adam, batch, hp));
}
BENCHMARK(BM_ToyTrainStep)->Unit(benchmark::kMillisecond);

void BM_RecallAtK(benchmark::State& state) {
  const auto images = static_cast<std::size_t>(state.range(0));
  const std::size_t captions = images * 5;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> values(images * captions);
  for (double& v : values) v = u(rng);
  std::vector<std::size_t> owner(captions);
  for (std::size_t c = 0; c < captions; ++c) owner[c] = c / 5;
  const eval::SimilarityMatrix sim(images, std::move(values), std::move(owner));
  for (auto _ : state) benchmark::DoNotOptimize(eval::EvaluateRetrieval(sim));
}
BENCHMARK(BM_RecallAtK)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
