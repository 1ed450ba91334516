// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <random>

#include "haan/accel_sim.hpp"
#include "haan/invsqrt.hpp"
#include "haan/norm_core.hpp"
#include "haan/tools/commands.hpp"
#include "haan/tools/documents.hpp"

namespace haan::tools {

namespace {

struct Check {
  const char* name;
  std::function<std::pair<bool, std::string>()> run;
};

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

}  // namespace

int cmd_verify(const VerifyOptions& opt, std::ostream& out, std::ostream&) {
  const RunConfig cfg = opt.config ? RunConfig::load(*opt.config) : RunConfig{};
  const std::uint64_t seed = opt.seed ? *opt.seed : default_seed();
  const InvSqrtConfig inv = cfg.datapath.inverter;

  std::vector<Check> checks;
  checks.push_back({"magic constant", [&] {
                      const auto m = magic_constant(FloatWidth::kFP32, inv.sigma);
                      char buf[96];
                      std::snprintf(buf, sizeof buf, "magic(fp32, sigma=%.9g) = 0x%08x", inv.sigma, m);
                      return std::pair{m == kMagicFP32, std::string(buf)};
                    }});

  checks.push_back({"invsqrt envelope", [&] {
                      std::mt19937_64 rng(seed);
                      const bool fp16 = inv.float_width == FloatWidth::kFP16;
                      std::uniform_real_distribution<double> logx(fp16 ? -9.0 : -80.0,
                                                                  fp16 ? 11.0 : 80.0);
                      const double bound = inv.newton_iters == 0 ? 0.035 : 0.002;
                      double worst = 0.0;
                      for (int i = 0; i < 200000; ++i) {
                        const double x = round_to_width(std::exp(logx(rng)), inv.float_width);
                        const long double exact = 1.0L / std::sqrt(static_cast<long double>(x));
                        const double y = invsqrt(x, inv);
                        worst = std::max(worst, static_cast<double>(std::fabs(y - exact) / exact));
                      }
                      return std::pair{worst <= bound,
                                       fmt("max rel error %.4g%% (bound %.4g%%)", 100 * worst,
                                           100 * bound)};
                    }});

  checks.push_back({"one-pass variance", [&] {
                      std::mt19937_64 rng(seed + 1);
                      std::normal_distribution<double> g(0.0, 1.0);
                      std::uniform_real_distribution<double> shift(-2.0, 2.0);
                      double worst = 0.0;
                      for (std::size_t n : {16u, 257u, 4096u}) {
                        for (int t = 0; t < 300; ++t) {
                          const double mu = shift(rng);
                          std::vector<double> z(n);
                          for (auto& v : z) v = mu + g(rng);
                          const double one = onepass_stats(z, NumericFormat::fp64()).variance;
                          const double two = two_pass_variance(z);
                          worst = std::max(worst, std::fabs(one - two) / two);
                        }
                      }
                      return std::pair{worst <= 1e-9, fmt("max rel diff %.3g (bound 1e-9)", worst)};
                    }});

  checks.push_back({"fixed-point round trip", [&] {
                      const FixedPointSpec spec = cfg.datapath.fixed;
                      std::mt19937_64 rng(seed + 2);
                      std::uniform_real_distribution<double> u(spec.min_value(), spec.max_value());
                      double worst = 0.0;
                      for (int i = 0; i < 100000; ++i) {
                        const double x = u(rng);
                        const auto c = fp_to_fixed(x, spec, cfg.datapath.rounding);
                        worst = std::max(worst, std::fabs(c.value.to_double() - x));
                      }
                      const double bound = cfg.datapath.rounding == Rounding::kNearestEven
                                               ? spec.resolution() / 2
                                               : spec.resolution();
                      return std::pair{worst <= bound,
                                       fmt("max abs error %.3g (bound %.3g)", worst, bound)};
                    }});

  checks.push_back({"trace round trip", [&] {
                      SyntheticTraceSpec s;
                      s.layer_count = 6;
                      s.embedding_dim = 64;
                      s.sample_count = 3;
                      s.isd_profile = LogLinearTail{1, 4, -0.1};
                      const auto t = generate_synthetic(s, seed);
                      const bool ok = parse_trace(serialize_trace(t)) == t;
                      return std::pair{ok, std::string(ok ? "HAANTRC1 identical" : "mismatch")};
                    }});

  checks.push_back({"predictor document round trip", [&] {
                      PredictorDocument d;
                      d.model_id = "verify";
                      d.predictor = {3, 14, -0.1 / 3.0, AnchorPolicy::kLiveMeasurement, 0.7};
                      d.min_cor = -0.99999999999999989;
                      d.min_gap = 11;
                      d.trace_digest = hex64(0x0123456789abcdefULL);
                      const auto back = PredictorDocument::from_json(Json::parse(dump_json(d.to_json())));
                      const bool ok = back.predictor == d.predictor && back.min_cor == d.min_cor &&
                                      back.min_gap == d.min_gap && back.model_id == d.model_id &&
                                      back.trace_digest == d.trace_digest;
                      return std::pair{ok, std::string(ok ? "lossless" : "mismatch")};
                    }});

  checks.push_back({"simulator matches library", [&] {
                      if (!cfg.format.is_hardware()) {
                        return std::pair{true, std::string("skipped for fp64")};
                      }
                      std::mt19937_64 rng(seed + 3);
                      std::normal_distribution<double> g(0.0, 1.0);
                      const std::size_t n = 200;
                      std::vector<std::vector<double>> batch(4, std::vector<double>(n));
                      for (auto& v : batch)
                        for (auto& x : v) x = 0.3 + 1.7 * g(rng);
                      sim::AccelConfig accel = cfg.accel;
                      if (accel.n_sub && *accel.n_sub > n) accel.n_sub = n;
                      const sim::LayerSpec layer{cfg.kind, IsdMode::kCompute, {}, {}};
                      const auto rep = sim::sim_layer(batch, layer, accel);
                      const NormConfig nc = sim::make_norm_config(layer, accel, n);
                      bool ok = rep.total_cycles == rep.closed_form_cycles;
                      for (std::size_t s = 0; s < batch.size(); ++s) {
                        ok = ok && normalize_layer(batch[s], nc).output == rep.outputs[s];
                      }
                      return std::pair{ok, std::string(ok ? "bit-identical, cycles match closed form"
                                                          : "mismatch")};
                    }});

  int failed = 0;
  for (const auto& c : checks) {
    auto [ok, detail] = c.run();
    out << (ok ? "PASS " : "FAIL ") << c.name << ": " << detail << "\n";
    failed += ok ? 0 : 1;
  }
  out << (failed ? "verify: " + std::to_string(failed) + " check(s) failed\n"
                 : std::string("verify: all checks passed\n"));
  return failed ? exit_code_for(ErrorCode::kDomain) : 0;
}

}  // namespace haan::tools
