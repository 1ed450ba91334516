// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "haan/numerics.hpp"

namespace haan {

/// Log-linear correction term of log2(1 + m) ~= m + sigma on m in [0, 1).
inline constexpr double kDefaultSigma = 0.0450465;
inline constexpr std::uint32_t kMagicFP32 = 0x5f3759df;

/// floor(1.5 * 2^L * (Q - sigma)) for the mantissa length L and bias Q of
/// `width`. Requires 0 <= sigma <= 1.
std::uint32_t magic_constant(FloatWidth width, double sigma);

struct InvSqrtConfig {
  FloatWidth float_width = FloatWidth::kFP32;
  double sigma = kDefaultSigma;
  int newton_iters = 1;

  std::uint32_t magic() const { return magic_constant(float_width, sigma); }
  void validate() const;
};

/// Magic-constant seed: bits(y0) = magic - (bits(x) >> 1) in the configured
/// width. `x` is first rounded to that width. Throws Error(kDomain) for
/// x <= 0, NaN, Inf or subnormal x.
double invsqrt_initial(double x, const InvSqrtConfig& cfg = {});

/// Newton steps y <- y * (1.5 - (x/2) * y^2) carried out in binary32.
float newton_refine(float y0, float x, int iters);

/// Seed plus cfg.newton_iters refinements.
double invsqrt(double x, const InvSqrtConfig& cfg = {});

struct FixedNewtonResult {
  Raw isd = 0;
  bool saturated = false;
};

/// Newton refinement in fixed point. `y0` and `half_x` are raw values with
/// `spec.frac_bits` fractional bits; 1.5 is the constant 3 << (frac_bits - 1)
/// (0x00C00000 when frac_bits = 23).
FixedNewtonResult newton_refine_fixed(Raw y0, Raw half_x, const FixedPointSpec& spec,
                                      int iters, Rounding rounding = Rounding::kNearestEven);

/// Seed in floating point, then FP2FX and Newton in the given Q-format.
FixedConversion invsqrt_fixed_output(double x, const InvSqrtConfig& cfg,
                                     const FixedPointSpec& spec,
                                     Rounding rounding = Rounding::kNearestEven);

}  // namespace haan
