// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "haan/invsqrt.hpp"
#include "haan/norm_types.hpp"
#include "haan/numerics.hpp"

// The fixed-point arithmetic kernel shared by the normalization library and
// the accelerator simulator. Every numeric result either path produces is a
// composition of the functions below, so the two agree bit for bit.
//
// Precisions, with f = fixed.frac_bits:
//   lanes, mean, outputs            frac f
//   z^2/N terms, E(z^2), variance   frac 2f
//   ISD and Newton registers        frac f + guard_bits

namespace haan::datapath {

struct Config {
  NumericFormat input = NumericFormat::fp16();
  FixedPointSpec fixed = kQ16_16;
  InvSqrtConfig inverter{};
  int guard_bits = 8;
  Rounding rounding = Rounding::kNearestEven;

  /// Defaults per input format; FP32 inputs get three Newton steps so the
  /// ISD error stays below binary32 output precision.
  static Config for_format(const NumericFormat& fmt);

  /// Throws Error(kConfig) for FP64 or inconsistent fields.
  void validate() const;

  int lane_frac() const { return fixed.frac_bits; }
  int acc_frac() const { return 2 * fixed.frac_bits; }
  FixedPointSpec isd_spec() const {
    return {fixed.total_bits + guard_bits, fixed.frac_bits + guard_bits, true};
  }
};

struct Diagnostics {
  std::int64_t saturations = 0;
  std::int64_t variance_clamps = 0;

  Diagnostics& operator+=(const Diagnostics& o) {
    saturations += o.saturations;
    variance_clamps += o.variance_clamps;
    return *this;
  }
  friend bool operator==(const Diagnostics&, const Diagnostics&) = default;
};

/// The precomputed 1/N constant; a right shift when N is a power of two.
class Reciprocal {
 public:
  static Reciprocal of(std::int64_t count, int frac_bits);

  /// v / N at the fractional width of v.
  Raw apply(Raw v, Rounding rounding, bool* overflow = nullptr) const;

  std::int64_t count() const { return count_; }
  bool is_shift() const { return shift_ >= 0; }

 private:
  std::int64_t count_ = 1;
  int shift_ = 0;
  Raw value_ = 0;
  int value_frac_ = 0;
};

/// FP2FX (with INT8 dequantization) of one input vector.
std::vector<Raw> ingress(std::span<const double> z, const Config& cfg, Diagnostics& diag);

/// Affine parameters (alpha, beta) to lane precision.
std::vector<Raw> encode_params(std::span<const double> p, const Config& cfg,
                               Diagnostics& diag);

/// z_i^2 / N at frac 2f.
Raw square_term(Raw z, const Reciprocal& inv_n, const Config& cfg, Diagnostics& diag);

/// The two running sums of the statistics calculator.
struct StatsRegisters {
  Raw sum = 0;     // sum z_i, frac f
  Raw sum_sq = 0;  // sum z_i^2 / N, frac 2f

  void accumulate(Raw z, Raw sq_term, Diagnostics& diag);
  void merge(const StatsRegisters& other, Diagnostics& diag);
};

struct FixedStats {
  Raw mean = 0;      // frac f; zero for RMSNorm
  Raw variance = 0;  // frac 2f; mean square for RMSNorm
  std::int64_t count = 0;
  bool clamped = false;

  friend bool operator==(const FixedStats&, const FixedStats&) = default;
};

/// Mean and one-pass variance E(z^2) - E(z)^2, clamped at zero.
/// `mean_regs` normally equals `regs`; it differs when the mean is taken over
/// a different element count than the variance.
FixedStats finalize_stats(const StatsRegisters& regs, const Reciprocal& inv_n,
                          const StatsRegisters& mean_regs, const Reciprocal& inv_mean,
                          NormKind kind, double epsilon, const Config& cfg,
                          Diagnostics& diag);

/// Runs the statistics calculator over lanes[0, n_stats), with the mean over
/// lanes[0, n_mean). Plain sequential accumulation.
FixedStats compute_stats(std::span<const Raw> lanes, std::size_t n_stats, std::size_t n_mean,
                         NormKind kind, double epsilon, const Config& cfg, Diagnostics& diag);

/// Square root inverter: FX2FP, magic seed, fixed-point Newton.
/// Throws Error(kZeroVariance) for a zero variance.
Raw invert(Raw variance, const Config& cfg, Diagnostics& diag);

/// Predicted ISD into the inverter's output register. Throws Error(kInvalidIsd).
Raw encode_isd(double isd, const Config& cfg, Diagnostics& diag);

double decode_isd(Raw isd, const Config& cfg);
double decode_mean(Raw mean, const Config& cfg);
double decode_variance(Raw variance, const Config& cfg);

/// alpha * (z - mean) * isd + beta, saturated to the lane format.
Raw normalize_element(Raw z, Raw mean, Raw isd, Raw alpha, Raw beta, const Config& cfg,
                      Diagnostics& diag);

/// FX2FP to the input float format; fixed-point and INT8 outputs stay in
/// fixed point and are only reinterpreted as reals.
double egress(Raw out, const Config& cfg);

}  // namespace haan::datapath
