// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "haan/datapath.hpp"
#include "haan/norm_types.hpp"
#include "haan/numerics.hpp"

namespace haan {

/// One normalization layer.
struct NormConfig {
  NormKind kind = NormKind::kLayerNorm;
  std::size_t n = 0;
  std::vector<double> alpha;
  std::vector<double> beta;
  NumericFormat format = NumericFormat::fp64();
  std::size_t n_sub = 0;  // == n: no subsampling
  IsdMode isd_mode = IsdMode::kCompute;
  double epsilon = 0.0;
  // Take the LayerNorm mean over all n elements even when n_sub < n.
  bool full_length_mean = false;
  // Overrides datapath::Config::for_format(format) for hardware formats.
  std::optional<datapath::Config> datapath_config;

  /// alpha = 1, beta = 0, no subsampling.
  static NormConfig identity(NormKind kind, std::size_t n,
                             NumericFormat format = NumericFormat::fp64());

  void validate() const;
  datapath::Config datapath() const;
  std::size_t mean_length() const { return full_length_mean ? n : n_sub; }
};

struct InputStats {
  double mean = 0.0;
  double variance = 0.0;
  double isd = 0.0;  // 1/sigma or 1/r_z
  std::size_t sample_count = 0;
  bool variance_clamped = false;

  // Exact register contents when produced by the fixed-point datapath.
  std::optional<datapath::FixedStats> fixed;
  std::optional<Raw> fixed_isd;
};

struct PredictedIsd {
  double isd = 0.0;
};

using IsdSource = std::variant<InputStats, PredictedIsd>;

// High-precision reference (long double, two-pass). Throws Error(kZeroVariance).
std::vector<double> reference_layernorm(std::span<const double> z, const NormConfig& cfg);
std::vector<double> reference_rmsnorm(std::span<const double> z, const NormConfig& cfg);
std::vector<double> reference_normalize(std::span<const double> z, const NormConfig& cfg);

/// Exact ISD of the whole vector (two-pass, long double).
double reference_isd(std::span<const double> z, NormKind kind);
/// sum (z_i - mean)^2 / N in long double.
double two_pass_variance(std::span<const double> z);

/// Mean and variance via E(z^2) - E(z)^2 with per-element z_i^2/N terms,
/// clamped at zero, plus the ISD from the format's inverter. For FP64 the
/// sums run in double and the ISD is 1/sqrt(variance) (0 when it is zero).
InputStats onepass_stats(std::span<const double> z, const NumericFormat& fmt,
                         NormKind kind = NormKind::kLayerNorm);
InputStats onepass_stats(std::span<const double> z, const datapath::Config& cfg,
                         NormKind kind = NormKind::kLayerNorm);

/// ISD estimated from the first n_sub elements. RMSNorm uses the mean square;
/// LayerNorm subtracts the mean of the same prefix. Throws Error(kZeroVariance).
double subsampled_isd(std::span<const double> z, std::size_t n_sub, const NumericFormat& fmt,
                      NormKind kind = NormKind::kRMSNorm);

/// (z - mean) * isd (LayerNorm) or z * isd (RMSNorm), then alpha, beta.
/// With a PredictedIsd the mean is still measured (over cfg.mean_length()).
/// Throws Error(kInvalidIsd) for a non-positive or non-finite ISD.
std::vector<double> normalize(std::span<const double> z, const NormConfig& cfg,
                              const IsdSource& isd_source);

struct LayerResult {
  std::vector<double> output;
  InputStats stats;
  double isd = 0.0;  // the ISD actually applied
  datapath::Diagnostics diagnostics;
};

/// The complete approximate path for one vector: ingress, subsampled
/// statistics, inverter or predicted ISD, normalization unit, egress.
LayerResult normalize_layer(std::span<const double> z, const NormConfig& cfg,
                            std::optional<double> predicted_isd = std::nullopt);

/// max|a - b| / max|b|.
double relative_error(std::span<const double> approx, std::span<const double> exact);

}  // namespace haan
