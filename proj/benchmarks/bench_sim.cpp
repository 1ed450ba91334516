// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "haan/accel_sim.hpp"
#include "haan/trace.hpp"

namespace {

void BM_SimTrace(benchmark::State& state) {
  haan::SyntheticTraceSpec spec;
  spec.layer_count = 32;
  spec.embedding_dim = static_cast<std::size_t>(state.range(0));
  spec.sample_count = 4;
  spec.isd_profile = haan::LogLinearTail{10, 25, -0.1};
  const auto trace = haan::generate_synthetic(spec, 3);
  haan::sim::ModelPlan plan;
  if (state.range(1)) plan.predictor = haan::IsdPredictor{10, 25, -0.1};
  const haan::sim::AccelConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(haan::sim::sim_trace(trace, plan, cfg));
}
BENCHMARK(BM_SimTrace)->ArgsProduct({{1024, 4096}, {0, 1}})->ArgNames({"N", "pred"});

void BM_SchedulePipeline(benchmark::State& state) {
  const std::vector<haan::sim::StageCycles> batch(static_cast<std::size_t>(state.range(0)),
                                                  haan::sim::StageCycles{42, 6, 34});
  for (auto _ : state) benchmark::DoNotOptimize(haan::sim::schedule_pipeline(batch, 2, 0, 0));
}
BENCHMARK(BM_SchedulePipeline)->Arg(100)->Arg(10000);

}  // namespace
