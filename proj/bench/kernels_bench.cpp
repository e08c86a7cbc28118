/*
 * Copyright 2026 The LongHorizon Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Serial reference loops against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "longhorizon/kernels.hpp"
#include "longhorizon/parallel.hpp"
#include "longhorizon/rng.hpp"

namespace lh = longhorizon;
namespace kn = longhorizon::kernels;

namespace {

struct Fixture {
  std::vector<int> actions;
  lh::Matrix propensities;
  lh::Matrix target;
  std::vector<double> outcomes;
  lh::Matrix mu;
  std::vector<std::size_t> rows;

  Fixture(std::size_t n, std::size_t k) : propensities(n, k), target(n, k, 0.0), mu(n, k) {
    lh::Rng rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    actions.resize(n);
    outcomes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double total = 0.0;
      for (std::size_t a = 0; a < k; ++a) total += propensities(i, a) = 0.2 + u(rng);
      for (std::size_t a = 0; a < k; ++a) {
        propensities(i, a) /= total;
        mu(i, a) = g(rng);
      }
      actions[i] = static_cast<int>(rng() % k);
      target(i, rng() % k) = 1.0;
      outcomes[i] = g(rng);
    }
    rows = kn::AllRows(n);
  }

  kn::EstimatorInputs Inputs() const { return {actions, &propensities, &target, outcomes, &mu}; }
};

const Fixture& Get(std::size_t n) {
  static const Fixture f(n, 3);
  return f;
}

void BM_AccumulateSerial(benchmark::State& state) {
  const auto& f = Get(1 << 20);
  for (auto _ : state) benchmark::DoNotOptimize(kn::serial::AccumulateEstimator(f.Inputs(), f.rows));
}

void BM_AccumulateParallel(benchmark::State& state) {
  const auto& f = Get(1 << 20);
  for (auto _ : state) benchmark::DoNotOptimize(kn::parallel::AccumulateEstimator(f.Inputs(), f.rows));
}

void BM_DrScoresSerial(benchmark::State& state) {
  const auto& f = Get(1 << 20);
  lh::Matrix out;
  for (auto _ : state) {
    kn::serial::DrScores(f.Inputs(), out);
    benchmark::DoNotOptimize(out.data().data());
  }
}

void BM_DrScoresParallel(benchmark::State& state) {
  const auto& f = Get(1 << 20);
  lh::Matrix out;
  for (auto _ : state) {
    kn::parallel::DrScores(f.Inputs(), out);
    benchmark::DoNotOptimize(out.data().data());
  }
}

void BM_TallySerial(benchmark::State& state) {
  const std::size_t n = 1 << 16;
  std::vector<std::vector<int>> reps(100, std::vector<int>(n));
  lh::Rng rng(3);
  for (auto& r : reps)
    for (auto& a : r) a = static_cast<int>(rng() % 3);
  for (auto _ : state) benchmark::DoNotOptimize(kn::serial::TallyActions(reps, n, 3));
}

void BM_TallyParallel(benchmark::State& state) {
  const std::size_t n = 1 << 16;
  std::vector<std::vector<int>> reps(100, std::vector<int>(n));
  lh::Rng rng(3);
  for (auto& r : reps)
    for (auto& a : r) a = static_cast<int>(rng() % 3);
  for (auto _ : state) benchmark::DoNotOptimize(kn::parallel::TallyActions(reps, n, 3));
}

}  // namespace

BENCHMARK(BM_AccumulateSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AccumulateParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DrScoresSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DrScoresParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TallySerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TallyParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
