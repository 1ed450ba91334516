// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "haan/invsqrt.hpp"

namespace {

std::vector<double> inputs() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(1e-3, 1e3);
  std::vector<double> v(4096);
  for (auto& x : v) x = d(rng);
  return v;
}

void BM_InvSqrt(benchmark::State& state) {
  const auto xs = inputs();
  haan::InvSqrtConfig cfg;
  cfg.newton_iters = static_cast<int>(state.range(0));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(haan::invsqrt(xs[i++ & 4095], cfg));
  }
}
BENCHMARK(BM_InvSqrt)->Arg(0)->Arg(1)->Arg(3);

void BM_InvSqrtFixed(benchmark::State& state) {
  const auto xs = inputs();
  const haan::InvSqrtConfig cfg;
  const haan::FixedPointSpec spec{32, 24, true};
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(haan::invsqrt_fixed_output(xs[i++ & 4095], cfg, spec));
  }
}
BENCHMARK(BM_InvSqrtFixed);

}  // namespace
