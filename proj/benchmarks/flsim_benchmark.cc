// Copyright 2026 The flsim Authors.
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

#include "benchmark/benchmark.h"
#include "flsim/aggregators.hpp"
#include "flsim/flanders_filter.hpp"
#include "flsim/mar.hpp"

namespace flsim {
namespace {

Matrix RandomMatrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (double& v : m.data()) v = n(rng);
  return m;
}

UpdateMatrix Wrap(Matrix values, std::size_t round) {
  UpdateMatrix u;
  u.round_id = round;
  for (std::size_t c = 0; c < values.cols(); ++c)
    u.client_ids.push_back(ClientId{static_cast<std::uint32_t>(c)});
  u.values = std::move(values);
  return u;
}

// Args: sampled coordinates, clients, window length.
void BM_EstimateMar(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto m = static_cast<std::size_t>(state.range(1));
  const auto l = static_cast<std::size_t>(state.range(2));
  std::mt19937_64 rng(1);
  std::vector<Matrix> series;
  for (std::size_t t = 0; t < l; ++t) series.push_back(RandomMatrix(d, m, rng));
  for (auto _ : state) benchmark::DoNotOptimize(EstimateMar(series, {.iters = 20}));
}
BENCHMARK(BM_EstimateMar)
    ->Args({100, 20, 2})
    ->Args({500, 20, 2})
    ->Args({500, 20, 4})
    ->Args({2000, 50, 2})
    ->Unit(benchmark::kMillisecond);

void BM_FilterRound(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const std::size_t m = 20;
  std::mt19937_64 rng(2);
  HistoryWindow history(2);
  history.Push(Wrap(RandomMatrix(d, m, rng), 1));
  history.Push(Wrap(RandomMatrix(d, m, rng), 2));
  const UpdateMatrix observed = Wrap(RandomMatrix(d, m, rng), 3);
  const Vector global(d, 0.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(FilterRound(history, observed, global, 16, {.iters = 20}));
  }
}
BENCHMARK(BM_FilterRound)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

AggregationInput RandomInput(std::size_t m, std::size_t d) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  AggregationInput in;
  for (std::size_t i = 0; i < m; ++i) {
    Vector v(d);
    for (double& x : v) x = n(rng);
    in.columns.push_back({ClientId{static_cast<std::uint32_t>(i)}, std::move(v)});
  }
  return in;
}

void BM_FedMedian(benchmark::State& state) {
  const AggregationInput in = RandomInput(20, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(FedMedian(in));
}
BENCHMARK(BM_FedMedian)->Arg(1000)->Arg(10000);

void BM_MultiKrum(benchmark::State& state) {
  const AggregationInput in = RandomInput(20, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(MultiKrum(in, 4, 16));
}
BENCHMARK(BM_MultiKrum)->Arg(1000)->Arg(10000);

void BM_Bulyan(benchmark::State& state) {
  const AggregationInput in = RandomInput(23, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Bulyan(in, 5));
}
BENCHMARK(BM_Bulyan)->Arg(1000)->Arg(10000);

}  // namespace
}  // namespace flsim

BENCHMARK_MAIN();
