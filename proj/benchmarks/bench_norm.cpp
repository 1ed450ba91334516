// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "haan/norm_core.hpp"

namespace {

std::vector<double> vec(std::size_t n) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.1, 1.5);
  std::vector<double> z(n);
  for (auto& v : z) v = g(rng);
  return z;
}

// range(0): N, range(1): format (0 fp64, 1 fp16, 2 fp32, 3 int8), range(2): n_sub divisor
void BM_NormalizeLayer(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const haan::NumericFormat formats[] = {haan::NumericFormat::fp64(), haan::NumericFormat::fp16(),
                                         haan::NumericFormat::fp32(), haan::NumericFormat::int8()};
  auto cfg = haan::NormConfig::identity(haan::NormKind::kLayerNorm, n,
                                        formats[state.range(1)]);
  cfg.n_sub = n / static_cast<std::size_t>(state.range(2));
  const auto z = vec(n);
  for (auto _ : state) benchmark::DoNotOptimize(haan::normalize_layer(z, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_NormalizeLayer)
    ->ArgsProduct({{1024, 4096}, {0, 1, 2, 3}, {1, 16}})
    ->ArgNames({"N", "fmt", "sub"});

void BM_ReferenceLayerNorm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto cfg = haan::NormConfig::identity(haan::NormKind::kLayerNorm, n);
  const auto z = vec(n);
  for (auto _ : state) benchmark::DoNotOptimize(haan::reference_normalize(z, cfg));
}
BENCHMARK(BM_ReferenceLayerNorm)->Arg(1024)->Arg(4096);

}  // namespace
