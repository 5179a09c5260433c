/*
 * Copyright 2026 The survbench Authors.
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

#include <benchmark/benchmark.h>

#include <string>

#include "survbench/coxph.h"
#include "survbench/estimators.h"
#include "survbench/metrics.h"
#include "survbench/rsf.h"
#include "test_data.h"

namespace {

using survbench::Index;
using survbench::testing::exponential_data;

void BM_HarrellC(benchmark::State& state) {
  const auto ds = exponential_data(state.range(0), {1.0}, 0.5, 7);
  const Eigen::VectorXd risk = ds.x.col(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(survbench::harrell_c(risk, ds.time, ds.status));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_HarrellC)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

void BM_CoxFit(benchmark::State& state) {
  const auto ds = exponential_data(state.range(0), {0.5, -0.3, 0.2, 0.0, 0.8}, 0.5, 11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(survbench::fit_cox(ds));
  }
}
BENCHMARK(BM_CoxFit)->Arg(400)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_SplitScore(benchmark::State& state) {
  const auto rule = static_cast<survbench::SplitRule>(state.range(0));
  const auto ds = exponential_data(1000, {1.0}, 0.5, 13);
  const auto censor = survbench::censoring_km(ds.time, ds.status);
  const Eigen::VectorXd x = ds.x.col(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(survbench::split_score(rule, ds.time, ds.status, x, 0.1, censor));
  }
  state.SetLabel(std::string(survbench::to_string(rule)));
}
BENCHMARK(BM_SplitScore)->DenseRange(0, 5);

void BM_GrowForest(benchmark::State& state) {
  const auto ds = exponential_data(state.range(0), {0.7, -0.5, 0.3, 0.0, 0.0, 0.2}, 0.5, 17);
  survbench::ForestParams params;
  params.n_trees = 50;
  for (auto _ : state) {
    benchmark::DoNotOptimize(survbench::grow_forest(ds, params));
  }
}
BENCHMARK(BM_GrowForest)->Arg(400)->Arg(1600)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
