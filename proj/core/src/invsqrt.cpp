// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#include "haan/invsqrt.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "haan/wide.hpp"

namespace haan {

std::uint32_t magic_constant(FloatWidth width, double sigma) {
  if (!(sigma >= 0.0 && sigma <= 1.0)) {
    fail(ErrorCode::kConfig, "magic_constant: sigma must lie in [0, 1]");
  }
  const int q = exponent_bias(width);
  const int l = mantissa_length(width);
  return static_cast<std::uint32_t>(std::floor(1.5 * std::ldexp(1.0, l) * (q - sigma)));
}

void InvSqrtConfig::validate() const {
  if (newton_iters < 0) fail(ErrorCode::kConfig, "invsqrt: newton_iters must be >= 0");
  (void)magic();
}

namespace {

void check_domain(double x, FloatWidth width) {
  const double min_normal = width == FloatWidth::kFP32
                                ? static_cast<double>(std::numeric_limits<float>::min())
                                : std::ldexp(1.0, -14);
  if (!std::isfinite(x) || !(x > 0.0)) {
    fail(ErrorCode::kDomain, "invsqrt: input must be positive and finite");
  }
  if (x < min_normal) {
    fail(ErrorCode::kDomain, "invsqrt: subnormal input is not supported");
  }
}

}  // namespace

double invsqrt_initial(double x, const InvSqrtConfig& cfg) {
  const double xr = std::isfinite(x) ? round_to_width(x, cfg.float_width) : x;
  check_domain(xr, cfg.float_width);
  const std::uint32_t magic = cfg.magic();
  if (cfg.float_width == FloatWidth::kFP32) {
    const std::uint32_t bits = float_to_bits(static_cast<float>(xr));
    return static_cast<double>(bits_to_float(magic - (bits >> 1)));
  }
  const std::uint16_t bits = half_bits_from_double(xr);
  const auto y = static_cast<std::uint16_t>(magic - (bits >> 1));
  return half_to_double(y);
}

float newton_refine(float y0, float x, int iters) {
  const float half_x = 0.5f * x;
  float y = y0;
  for (int i = 0; i < iters; ++i) {
    y = y * (1.5f - half_x * y * y);
  }
  return y;
}

double invsqrt(double x, const InvSqrtConfig& cfg) {
  const double y0 = invsqrt_initial(x, cfg);
  const auto xf = static_cast<float>(round_to_width(x, cfg.float_width));
  return static_cast<double>(newton_refine(static_cast<float>(y0), xf, cfg.newton_iters));
}

FixedNewtonResult newton_refine_fixed(Raw y0, Raw half_x, const FixedPointSpec& spec,
                                      int iters, Rounding rounding) {
  const int f = spec.frac_bits;
  const Raw three_halves = Raw{3} << (f - 1);
  FixedNewtonResult out;
  Raw y = saturate(y0, spec, &out.saturated);
  for (int i = 0; i < iters; ++i) {
    bool overflow = false;
    const Raw y2 = wide::mul(y, f, y, f, f, rounding, &overflow);
    const Raw t = wide::mul(half_x, f, y2, f, f, rounding, &overflow);
    const Raw u = wide::add(three_halves, -t, &overflow);
    y = wide::mul(y, f, u, f, f, rounding, &overflow);
    y = saturate(y, spec, &out.saturated);
    out.saturated = out.saturated || overflow;
  }
  out.isd = y;
  return out;
}

FixedConversion invsqrt_fixed_output(double x, const InvSqrtConfig& cfg,
                                     const FixedPointSpec& spec, Rounding rounding) {
  spec.validate();
  const double y0 = invsqrt_initial(x, cfg);
  const FixedConversion seed = fp_to_fixed(y0, spec, rounding);
  const FixedConversion half_x =
      fp_to_fixed(round_to_width(x, cfg.float_width) * 0.5, spec, rounding);
  const FixedNewtonResult r =
      newton_refine_fixed(seed.value.raw, half_x.value.raw, spec, cfg.newton_iters, rounding);
  FixedConversion out;
  out.value = FixedValue{r.isd, spec};
  out.saturated = seed.saturated || half_x.saturated || r.saturated;
  return out;
}

}  // namespace haan
