// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#include "haan/norm_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace haan {

NormConfig NormConfig::identity(NormKind kind, std::size_t n, NumericFormat format) {
  NormConfig cfg;
  cfg.kind = kind;
  cfg.n = n;
  cfg.alpha.assign(n, 1.0);
  cfg.beta.assign(n, 0.0);
  cfg.format = std::move(format);
  cfg.n_sub = n;
  return cfg;
}

void NormConfig::validate() const {
  if (n == 0) fail(ErrorCode::kConfig, "NormConfig: N must be positive");
  if (alpha.size() != n || beta.size() != n) {
    fail(ErrorCode::kDimensionMismatch, "NormConfig: alpha and beta must have length N");
  }
  if (n_sub == 0 || n_sub > n) fail(ErrorCode::kConfig, "NormConfig: n_sub must lie in [1, N]");
  if (!(epsilon >= 0.0)) fail(ErrorCode::kConfig, "NormConfig: epsilon must be >= 0");
  format.validate();
  if (datapath_config) datapath_config->validate();
}

datapath::Config NormConfig::datapath() const {
  return datapath_config ? *datapath_config : datapath::Config::for_format(format);
}

// ---------------------------------------------------------------------------
// Reference

namespace {

struct Moments {
  long double mean = 0;
  long double variance = 0;  // around the mean
  long double mean_square = 0;
};

Moments two_pass(std::span<const double> z) {
  Moments m;
  const auto n = static_cast<long double>(z.size());
  for (double v : z) m.mean += v;
  m.mean /= n;
  for (double v : z) {
    const long double d = v - m.mean;
    m.variance += d * d;
    m.mean_square += static_cast<long double>(v) * v;
  }
  m.variance /= n;
  m.mean_square /= n;
  return m;
}

void check_lengths(std::span<const double> z, const NormConfig& cfg) {
  cfg.validate();
  if (z.size() != cfg.n) {
    fail(ErrorCode::kDimensionMismatch, "input length " + std::to_string(z.size()) +
                                            " does not match N=" + std::to_string(cfg.n));
  }
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!std::isfinite(z[i])) {
      fail(ErrorCode::kDomain, "non-finite input at element " + std::to_string(i));
    }
  }
}

}  // namespace

double two_pass_variance(std::span<const double> z) {
  if (z.empty()) fail(ErrorCode::kConfig, "variance of an empty vector");
  return static_cast<double>(two_pass(z).variance);
}

double reference_isd(std::span<const double> z, NormKind kind) {
  if (z.empty()) fail(ErrorCode::kConfig, "ISD of an empty vector");
  const Moments m = two_pass(z);
  const long double v = kind == NormKind::kLayerNorm ? m.variance : m.mean_square;
  if (!(v > 0)) fail(ErrorCode::kZeroVariance, "reference ISD: zero variance");
  return static_cast<double>(1.0L / std::sqrt(v));
}

std::vector<double> reference_layernorm(std::span<const double> z, const NormConfig& cfg) {
  check_lengths(z, cfg);
  const Moments m = two_pass(z);
  if (!(m.variance > 0)) fail(ErrorCode::kZeroVariance, "LayerNorm: constant input");
  const long double inv = 1.0L / std::sqrt(m.variance + cfg.epsilon);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = static_cast<double>(cfg.alpha[i] * ((z[i] - m.mean) * inv) + cfg.beta[i]);
  }
  return out;
}

std::vector<double> reference_rmsnorm(std::span<const double> z, const NormConfig& cfg) {
  check_lengths(z, cfg);
  const Moments m = two_pass(z);
  if (!(m.mean_square > 0)) fail(ErrorCode::kZeroVariance, "RMSNorm: all-zero input");
  const long double inv = 1.0L / std::sqrt(m.mean_square + cfg.epsilon);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = static_cast<double>(cfg.alpha[i] * (z[i] * inv) + cfg.beta[i]);
  }
  return out;
}

std::vector<double> reference_normalize(std::span<const double> z, const NormConfig& cfg) {
  return cfg.kind == NormKind::kLayerNorm ? reference_layernorm(z, cfg)
                                          : reference_rmsnorm(z, cfg);
}

// ---------------------------------------------------------------------------
// One-pass statistics

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct DoubleStats {
  double mean = 0.0;
  double variance = 0.0;
  bool clamped = false;
};

// Per-element z_i^2 * (1/N) summed, exactly as the statistics calculator
// orders the work.
DoubleStats double_stats(std::span<const double> z, std::size_t n_stats, std::size_t n_mean,
                         NormKind kind) {
  const double inv_n = 1.0 / static_cast<double>(n_stats);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < n_stats; ++i) {
    sum += z[i];
    sum_sq += (z[i] * z[i]) * inv_n;
  }
  DoubleStats s;
  if (kind == NormKind::kRMSNorm) {
    s.variance = sum_sq;
    return s;
  }
  const double mean = sum * inv_n;
  s.variance = sum_sq - mean * mean;
  if (s.variance < 0.0) {
    s.variance = 0.0;
    s.clamped = true;
  }
  s.mean = mean;
  if (n_mean != n_stats) {
    double msum = 0.0;
    for (std::size_t i = 0; i < n_mean; ++i) msum += z[i];
    s.mean = msum * (1.0 / static_cast<double>(n_mean));
  }
  return s;
}

InputStats fixed_input_stats(const std::vector<Raw>& lanes, std::size_t n_stats,
                             std::size_t n_mean, NormKind kind, double epsilon,
                             const datapath::Config& cfg, datapath::Diagnostics& diag) {
  const auto fs = datapath::compute_stats(lanes, n_stats, n_mean, kind, epsilon, cfg, diag);
  InputStats s;
  s.mean = datapath::decode_mean(fs.mean, cfg);
  s.variance = datapath::decode_variance(fs.variance, cfg);
  s.sample_count = n_stats;
  s.variance_clamped = fs.clamped;
  s.fixed = fs;
  if (fs.variance > 0) {
    const Raw isd = datapath::invert(fs.variance, cfg, diag);
    s.fixed_isd = isd;
    s.isd = datapath::decode_isd(isd, cfg);
  } else {
    s.isd = kInf;
  }
  return s;
}

}  // namespace

InputStats onepass_stats(std::span<const double> z, const NumericFormat& fmt, NormKind kind) {
  if (z.empty()) fail(ErrorCode::kConfig, "onepass_stats: empty input");
  fmt.validate();
  if (fmt.is_hardware()) return onepass_stats(z, datapath::Config::for_format(fmt), kind);
  const DoubleStats d = double_stats(z, z.size(), z.size(), kind);
  InputStats s;
  s.mean = d.mean;
  s.variance = d.variance;
  s.variance_clamped = d.clamped;
  s.sample_count = z.size();
  s.isd = d.variance > 0.0 ? 1.0 / std::sqrt(d.variance) : kInf;
  return s;
}

InputStats onepass_stats(std::span<const double> z, const datapath::Config& cfg, NormKind kind) {
  if (z.empty()) fail(ErrorCode::kConfig, "onepass_stats: empty input");
  cfg.validate();
  datapath::Diagnostics diag;
  const auto lanes = datapath::ingress(z, cfg, diag);
  return fixed_input_stats(lanes, z.size(), z.size(), kind, 0.0, cfg, diag);
}

double subsampled_isd(std::span<const double> z, std::size_t n_sub, const NumericFormat& fmt,
                      NormKind kind) {
  if (n_sub == 0 || n_sub > z.size()) {
    fail(ErrorCode::kConfig, "subsampled_isd: n_sub must lie in [1, N]");
  }
  fmt.validate();
  double isd;
  if (fmt.is_hardware()) {
    const auto cfg = datapath::Config::for_format(fmt);
    datapath::Diagnostics diag;
    const auto lanes = datapath::ingress(z, cfg, diag);
    isd = fixed_input_stats(lanes, n_sub, n_sub, kind, 0.0, cfg, diag).isd;
  } else {
    const DoubleStats d = double_stats(z, n_sub, n_sub, kind);
    isd = d.variance > 0.0 ? 1.0 / std::sqrt(d.variance) : kInf;
  }
  if (std::isinf(isd)) {
    fail(ErrorCode::kZeroVariance, "subsampled_isd: the first n_sub elements have zero variance");
  }
  return isd;
}

// ---------------------------------------------------------------------------
// Normalization

namespace {

void check_isd(double isd) {
  if (!std::isfinite(isd) || !(isd > 0.0)) {
    fail(ErrorCode::kInvalidIsd, "ISD must be positive and finite");
  }
}

std::vector<double> apply_double(std::span<const double> z, const NormConfig& cfg, double mean,
                                 double isd) {
  std::vector<double> out(z.size());
  const double mu = cfg.kind == NormKind::kLayerNorm ? mean : 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = cfg.alpha[i] * ((z[i] - mu) * isd) + cfg.beta[i];
  }
  return out;
}

std::vector<double> apply_fixed(const std::vector<Raw>& lanes, const NormConfig& cfg, Raw mean,
                                Raw isd, const datapath::Config& dp,
                                datapath::Diagnostics& diag) {
  const auto alpha = datapath::encode_params(cfg.alpha, dp, diag);
  const auto beta = datapath::encode_params(cfg.beta, dp, diag);
  const Raw mu = cfg.kind == NormKind::kLayerNorm ? mean : 0;
  std::vector<double> out(lanes.size());
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    out[i] = datapath::egress(
        datapath::normalize_element(lanes[i], mu, isd, alpha[i], beta[i], dp, diag), dp);
  }
  return out;
}

// Mean register for a layer whose ISD is predicted.
Raw predicted_mode_mean(const std::vector<Raw>& lanes, const NormConfig& cfg,
                        const datapath::Config& dp, datapath::Diagnostics& diag) {
  if (cfg.kind == NormKind::kRMSNorm) return 0;
  return datapath::compute_stats(lanes, cfg.n_sub, cfg.mean_length(), cfg.kind, cfg.epsilon, dp,
                                 diag)
      .mean;
}

}  // namespace

std::vector<double> normalize(std::span<const double> z, const NormConfig& cfg,
                              const IsdSource& isd_source) {
  check_lengths(z, cfg);
  const auto* stats = std::get_if<InputStats>(&isd_source);
  const double isd = stats ? stats->isd : std::get<PredictedIsd>(isd_source).isd;
  check_isd(isd);

  if (!cfg.format.is_hardware()) {
    double mean = 0.0;
    if (stats) {
      mean = stats->mean;
    } else if (cfg.kind == NormKind::kLayerNorm) {
      mean = double_stats(z, cfg.n_sub, cfg.mean_length(), cfg.kind).mean;
    }
    return apply_double(z, cfg, mean, isd);
  }

  const auto dp = cfg.datapath();
  datapath::Diagnostics diag;
  const auto lanes = datapath::ingress(z, dp, diag);
  Raw mean_raw = 0;
  Raw isd_raw = 0;
  if (stats) {
    mean_raw = stats->fixed ? stats->fixed->mean
                            : fp_to_fixed(stats->mean, dp.fixed, dp.rounding).value.raw;
    isd_raw = stats->fixed_isd ? *stats->fixed_isd : datapath::encode_isd(isd, dp, diag);
  } else {
    mean_raw = predicted_mode_mean(lanes, cfg, dp, diag);
    isd_raw = datapath::encode_isd(isd, dp, diag);
  }
  return apply_fixed(lanes, cfg, mean_raw, isd_raw, dp, diag);
}

LayerResult normalize_layer(std::span<const double> z, const NormConfig& cfg,
                            std::optional<double> predicted_isd) {
  check_lengths(z, cfg);
  if (predicted_isd) check_isd(*predicted_isd);
  LayerResult r;

  if (!cfg.format.is_hardware()) {
    const DoubleStats d = double_stats(z, cfg.n_sub, cfg.mean_length(), cfg.kind);
    r.stats.mean = d.mean;
    r.stats.variance = d.variance + cfg.epsilon;
    r.stats.variance_clamped = d.clamped;
    r.stats.sample_count = cfg.n_sub;
    if (predicted_isd) {
      r.isd = *predicted_isd;
    } else {
      if (!(r.stats.variance > 0.0)) {
        fail(ErrorCode::kZeroVariance, "normalize_layer: zero variance");
      }
      r.isd = 1.0 / std::sqrt(r.stats.variance);
    }
    r.stats.isd = r.isd;
    r.output = apply_double(z, cfg, d.mean, r.isd);
    return r;
  }

  const auto dp = cfg.datapath();
  dp.validate();
  const auto lanes = datapath::ingress(z, dp, r.diagnostics);
  Raw mean_raw = 0;
  Raw isd_raw = 0;
  if (predicted_isd) {
    mean_raw = predicted_mode_mean(lanes, cfg, dp, r.diagnostics);
    isd_raw = datapath::encode_isd(*predicted_isd, dp, r.diagnostics);
    r.stats.mean = datapath::decode_mean(mean_raw, dp);
    r.stats.sample_count = cfg.n_sub;
  } else {
    const auto fs = datapath::compute_stats(lanes, cfg.n_sub, cfg.mean_length(), cfg.kind,
                                            cfg.epsilon, dp, r.diagnostics);
    isd_raw = datapath::invert(fs.variance, dp, r.diagnostics);
    mean_raw = fs.mean;
    r.stats.mean = datapath::decode_mean(fs.mean, dp);
    r.stats.variance = datapath::decode_variance(fs.variance, dp);
    r.stats.variance_clamped = fs.clamped;
    r.stats.sample_count = cfg.n_sub;
    r.stats.fixed = fs;
  }
  r.stats.fixed_isd = isd_raw;
  r.isd = datapath::decode_isd(isd_raw, dp);
  r.stats.isd = r.isd;
  r.output = apply_fixed(lanes, cfg, mean_raw, isd_raw, dp, r.diagnostics);
  return r;
}

double relative_error(std::span<const double> approx, std::span<const double> exact) {
  if (approx.size() != exact.size()) {
    fail(ErrorCode::kDimensionMismatch, "relative_error: length mismatch");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    num = std::max(num, std::fabs(approx[i] - exact[i]));
    den = std::max(den, std::fabs(exact[i]));
  }
  return den > 0.0 ? num / den : num;
}

}  // namespace haan
