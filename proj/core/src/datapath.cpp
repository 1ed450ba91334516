// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#include "haan/datapath.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "haan/wide.hpp"

namespace haan {

std::string to_string(NormKind kind) {
  return kind == NormKind::kLayerNorm ? "layernorm" : "rmsnorm";
}

std::string to_string(IsdMode mode) {
  return mode == IsdMode::kCompute ? "compute" : "predicted";
}

NormKind parse_norm_kind(const std::string& name) {
  if (name == "layernorm" || name == "LayerNorm") return NormKind::kLayerNorm;
  if (name == "rmsnorm" || name == "RMSNorm") return NormKind::kRMSNorm;
  fail(ErrorCode::kConfig, "unknown normalization kind '" + name + "'");
}

}  // namespace haan

namespace haan::datapath {

Config Config::for_format(const NumericFormat& fmt) {
  fmt.validate();
  Config cfg;
  cfg.input = fmt;
  cfg.fixed = fmt.default_fixed_spec();
  cfg.inverter.float_width = FloatWidth::kFP32;
  cfg.inverter.newton_iters = fmt.kind == NumericFormat::Kind::kFP32 ? 3 : 1;
  return cfg;
}

void Config::validate() const {
  input.validate();
  if (!input.is_hardware()) {
    fail(ErrorCode::kConfig, "the datapath does not support the fp64 reference format");
  }
  fixed.validate();
  inverter.validate();
  if (guard_bits < 0 || guard_bits > 16) {
    fail(ErrorCode::kConfig, "guard_bits must lie in [0, 16]");
  }
}

// ---------------------------------------------------------------------------

Reciprocal Reciprocal::of(std::int64_t count, int frac_bits) {
  if (count <= 0) fail(ErrorCode::kConfig, "reciprocal of a non-positive count");
  Reciprocal r;
  r.count_ = count;
  const auto u = static_cast<std::uint64_t>(count);
  if (std::has_single_bit(u)) {
    r.shift_ = std::countr_zero(u);
    return r;
  }
  r.shift_ = -1;
  const int log2_ceil = static_cast<int>(std::bit_width(u));
  r.value_frac_ = 2 * frac_bits + log2_ceil;
  const Raw one = Raw{1} << r.value_frac_;
  r.value_ = (one + static_cast<Raw>(count / 2)) / static_cast<Raw>(count);
  return r;
}

Raw Reciprocal::apply(Raw v, Rounding rounding, bool* overflow) const {
  if (shift_ >= 0) return wide::shift_round(v, shift_, rounding, overflow);
  return wide::mul_shift(v, value_, value_frac_, rounding, overflow);
}

// ---------------------------------------------------------------------------

namespace {

void count_saturation(bool flag, Diagnostics& diag) {
  if (flag) ++diag.saturations;
}

double ingress_value(double z, const Config& cfg) {
  switch (cfg.input.kind) {
    case NumericFormat::Kind::kFP32:
      return round_to_width(z, FloatWidth::kFP32);
    case NumericFormat::Kind::kFP16:
      return round_to_width(z, FloatWidth::kFP16);
    default:
      return z;
  }
}

}  // namespace

std::vector<Raw> ingress(std::span<const double> z, const Config& cfg, Diagnostics& diag) {
  std::vector<Raw> lanes;
  lanes.reserve(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!std::isfinite(z[i])) {
      fail(ErrorCode::kDomain, "non-finite input at element " + std::to_string(i));
    }
  }
  if (cfg.input.kind == NumericFormat::Kind::kINT8) {
    const QuantParams qp = symmetric_int8_params(z);
    const auto q = quantize_int8(z, qp);
    for (const double v : dequantize_int8(q, qp)) {
      const auto c = fp_to_fixed(v, cfg.fixed, cfg.rounding);
      count_saturation(c.saturated, diag);
      lanes.push_back(c.value.raw);
    }
    return lanes;
  }
  for (const double v : z) {
    const auto c = fp_to_fixed(ingress_value(v, cfg), cfg.fixed, cfg.rounding);
    count_saturation(c.saturated, diag);
    lanes.push_back(c.value.raw);
  }
  return lanes;
}

std::vector<Raw> encode_params(std::span<const double> p, const Config& cfg,
                               Diagnostics& diag) {
  std::vector<Raw> out;
  out.reserve(p.size());
  for (const double v : p) {
    const auto c = fp_to_fixed(ingress_value(v, cfg), cfg.fixed, cfg.rounding);
    count_saturation(c.saturated, diag);
    out.push_back(c.value.raw);
  }
  return out;
}

Raw square_term(Raw z, const Reciprocal& inv_n, const Config& cfg, Diagnostics& diag) {
  bool overflow = false;
  const Raw sq = wide::mul_shift(z, z, 0, cfg.rounding, &overflow);
  const Raw term = inv_n.apply(sq, cfg.rounding, &overflow);
  count_saturation(overflow, diag);
  return term;
}

void StatsRegisters::accumulate(Raw z, Raw sq_term, Diagnostics& diag) {
  bool overflow = false;
  sum = wide::add(sum, z, &overflow);
  sum_sq = wide::add(sum_sq, sq_term, &overflow);
  count_saturation(overflow, diag);
}

void StatsRegisters::merge(const StatsRegisters& other, Diagnostics& diag) {
  accumulate(other.sum, other.sum_sq, diag);
}

FixedStats finalize_stats(const StatsRegisters& regs, const Reciprocal& inv_n,
                          const StatsRegisters& mean_regs, const Reciprocal& inv_mean,
                          NormKind kind, double epsilon, const Config& cfg,
                          Diagnostics& diag) {
  const int f = cfg.lane_frac();
  const int acc = cfg.acc_frac();
  bool overflow = false;
  FixedStats out;
  out.count = inv_n.count();

  Raw mean_sq = 0;
  if (kind == NormKind::kLayerNorm) {
    const Raw sum_wide = wide::rescale(regs.sum, f, acc, cfg.rounding, &overflow);
    const Raw mean_wide = inv_n.apply(sum_wide, cfg.rounding, &overflow);
    mean_sq = wide::mul(mean_wide, acc, mean_wide, acc, acc, cfg.rounding, &overflow);

    if (inv_mean.count() == inv_n.count()) {
      out.mean = wide::rescale(mean_wide, acc, f, cfg.rounding, &overflow);
    } else {
      const Raw msum = wide::rescale(mean_regs.sum, f, acc, cfg.rounding, &overflow);
      out.mean = wide::rescale(inv_mean.apply(msum, cfg.rounding, &overflow), acc, f,
                               cfg.rounding, &overflow);
    }
  }

  Raw var = wide::add(regs.sum_sq, -mean_sq, &overflow);
  if (var < 0) {
    var = 0;
    out.clamped = true;
    ++diag.variance_clamps;
  }
  if (epsilon > 0.0) {
    const FixedPointSpec acc_spec{127, acc, true};
    var = wide::add(var, fp_to_fixed(epsilon, acc_spec, cfg.rounding).value.raw, &overflow);
  }
  out.variance = var;
  count_saturation(overflow, diag);
  return out;
}

FixedStats compute_stats(std::span<const Raw> lanes, std::size_t n_stats, std::size_t n_mean,
                         NormKind kind, double epsilon, const Config& cfg, Diagnostics& diag) {
  if (n_stats == 0 || n_stats > lanes.size() || n_mean == 0 || n_mean > lanes.size()) {
    fail(ErrorCode::kConfig, "statistics length must lie in [1, N]");
  }
  const int f = cfg.lane_frac();
  const auto inv_n = Reciprocal::of(static_cast<std::int64_t>(n_stats), f);
  StatsRegisters regs;
  for (std::size_t i = 0; i < n_stats; ++i) {
    regs.accumulate(lanes[i], square_term(lanes[i], inv_n, cfg, diag), diag);
  }
  if (n_mean == n_stats || kind == NormKind::kRMSNorm) {
    return finalize_stats(regs, inv_n, regs, inv_n, kind, epsilon, cfg, diag);
  }
  const auto inv_mean = Reciprocal::of(static_cast<std::int64_t>(n_mean), f);
  StatsRegisters mean_regs;
  for (std::size_t i = 0; i < n_mean; ++i) {
    bool overflow = false;
    mean_regs.sum = wide::add(mean_regs.sum, lanes[i], &overflow);
    count_saturation(overflow, diag);
  }
  return finalize_stats(regs, inv_n, mean_regs, inv_mean, kind, epsilon, cfg, diag);
}

Raw invert(Raw variance, const Config& cfg, Diagnostics& diag) {
  if (variance <= 0) {
    fail(ErrorCode::kZeroVariance, "square root inverter: zero variance");
  }
  const int acc = cfg.acc_frac();
  const FixedPointSpec isd = cfg.isd_spec();
  const double x = round_scaled_integer(variance, -acc, cfg.inverter.float_width);
  const double y0 = invsqrt_initial(x, cfg.inverter);

  bool overflow = false;
  const auto seed = fp_to_fixed(y0, isd, cfg.rounding);
  // x/2 straight from the fixed-point variance register.
  const Raw half_x = wide::shift_round(variance, acc - isd.frac_bits + 1, cfg.rounding, &overflow);
  const auto r =
      newton_refine_fixed(seed.value.raw, half_x, isd, cfg.inverter.newton_iters, cfg.rounding);
  count_saturation(seed.saturated || overflow || r.saturated, diag);
  return r.isd;
}

Raw encode_isd(double isd, const Config& cfg, Diagnostics& diag) {
  if (!std::isfinite(isd) || !(isd > 0.0)) {
    fail(ErrorCode::kInvalidIsd, "ISD must be positive and finite");
  }
  const auto c = fp_to_fixed(isd, cfg.isd_spec(), cfg.rounding);
  count_saturation(c.saturated, diag);
  if (c.value.raw <= 0) {
    fail(ErrorCode::kInvalidIsd, "ISD underflows the inverter output format");
  }
  return c.value.raw;
}

double decode_isd(Raw isd, const Config& cfg) {
  return std::ldexp(static_cast<double>(isd), -cfg.isd_spec().frac_bits);
}

double decode_mean(Raw mean, const Config& cfg) {
  return std::ldexp(static_cast<double>(mean), -cfg.lane_frac());
}

double decode_variance(Raw variance, const Config& cfg) {
  return std::ldexp(static_cast<double>(variance), -cfg.acc_frac());
}

Raw normalize_element(Raw z, Raw mean, Raw isd, Raw alpha, Raw beta, const Config& cfg,
                      Diagnostics& diag) {
  const int f = cfg.lane_frac();
  const int fi = cfg.isd_spec().frac_bits;
  bool overflow = false;
  const Raw centered = wide::add(z, -mean, &overflow);
  const Raw scaled = wide::mul(centered, f, isd, fi, fi, cfg.rounding, &overflow);
  const Raw affine = wide::mul(scaled, fi, alpha, f, f, cfg.rounding, &overflow);
  bool sat = false;
  const Raw out = saturate(wide::add(affine, beta, &overflow), cfg.fixed, &sat);
  count_saturation(overflow || sat, diag);
  return out;
}

double egress(Raw out, const Config& cfg) {
  switch (cfg.input.kind) {
    case NumericFormat::Kind::kFP32:
      return round_scaled_integer(out, -cfg.lane_frac(), FloatWidth::kFP32);
    case NumericFormat::Kind::kFP16:
      return round_scaled_integer(out, -cfg.lane_frac(), FloatWidth::kFP16);
    default:
      return std::ldexp(static_cast<double>(out), -cfg.lane_frac());
  }
}

}  // namespace haan::datapath
