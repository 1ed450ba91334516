// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#include "haan/numerics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>

#include "haan/wide.hpp"

namespace haan {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage: return "UsageError";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kFormat: return "FormatError";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kZeroVariance: return "ZeroVariance";
    case ErrorCode::kInvalidIsd: return "InvalidIsd";
    case ErrorCode::kDomain: return "DomainError";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kNoValidRange: return "NoValidRange";
    case ErrorCode::kOutOfRange: return "OutOfRange";
  }
  return "Error";
}

void FixedPointSpec::validate() const {
  if (!(0 < frac_bits && frac_bits < total_bits && total_bits <= 64)) {
    fail(ErrorCode::kConfig,
         "fixed_spec requires 0 < frac_bits < total_bits <= 64 (got total_bits=" +
             std::to_string(total_bits) + ", frac_bits=" + std::to_string(frac_bits) + ")");
  }
}

Raw FixedPointSpec::max_raw() const {
  const int magnitude_bits = is_signed ? total_bits - 1 : total_bits;
  return (Raw{1} << magnitude_bits) - 1;
}

Raw FixedPointSpec::min_raw() const {
  return is_signed ? -(Raw{1} << (total_bits - 1)) : Raw{0};
}

double FixedPointSpec::resolution() const { return std::ldexp(1.0, -frac_bits); }

double FixedPointSpec::max_value() const {
  return std::ldexp(static_cast<double>(max_raw()), -frac_bits);
}

double FixedPointSpec::min_value() const {
  return std::ldexp(static_cast<double>(min_raw()), -frac_bits);
}

void NumericFormat::validate() const {
  if ((kind == Kind::kFixedPoint) != fixed_spec.has_value()) {
    fail(ErrorCode::kConfig, "fixed_spec must be present iff the format is fixed point");
  }
  if (fixed_spec) fixed_spec->validate();
}

FixedPointSpec NumericFormat::default_fixed_spec() const {
  switch (kind) {
    case Kind::kFP32:
    case Kind::kFP64:
      return kQ32_32;
    case Kind::kFP16:
    case Kind::kINT8:
      return kQ16_16;
    case Kind::kFixedPoint:
      return *fixed_spec;
  }
  return kQ16_16;
}

std::string to_string(NumericFormat::Kind kind) {
  switch (kind) {
    case NumericFormat::Kind::kFP64: return "fp64";
    case NumericFormat::Kind::kFP32: return "fp32";
    case NumericFormat::Kind::kFP16: return "fp16";
    case NumericFormat::Kind::kINT8: return "int8";
    case NumericFormat::Kind::kFixedPoint: return "fixed";
  }
  return "?";
}

NumericFormat::Kind parse_format_kind(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "fp64") return NumericFormat::Kind::kFP64;
  if (s == "fp32") return NumericFormat::Kind::kFP32;
  if (s == "fp16") return NumericFormat::Kind::kFP16;
  if (s == "int8") return NumericFormat::Kind::kINT8;
  if (s == "fixed") return NumericFormat::Kind::kFixedPoint;
  fail(ErrorCode::kConfig, "unknown numeric format '" + name + "'");
}

// ---------------------------------------------------------------------------

double FixedValue::to_double() const {
  return std::ldexp(static_cast<double>(raw), -spec.frac_bits);
}

Raw saturate(Raw raw, const FixedPointSpec& spec, bool* saturated) {
  if (raw > spec.max_raw()) {
    if (saturated) *saturated = true;
    return spec.max_raw();
  }
  if (raw < spec.min_raw()) {
    if (saturated) *saturated = true;
    return spec.min_raw();
  }
  return raw;
}

FixedConversion fp_to_fixed(double x, const FixedPointSpec& spec, Rounding rounding) {
  FixedConversion out;
  out.value.spec = spec;
  if (std::isnan(x)) {
    out.saturated = true;
    return out;
  }
  if (std::isinf(x)) {
    out.saturated = true;
    out.value.raw = x > 0 ? spec.max_raw() : spec.min_raw();
    return out;
  }
  const double scaled = std::ldexp(x, spec.frac_bits);
  const double rounded =
      rounding == Rounding::kNearestEven ? std::nearbyint(scaled) : std::trunc(scaled);
  // Anything past 2^100 is far outside every legal spec; clamp before the cast.
  if (rounded >= 0x1p100) {
    out.saturated = true;
    out.value.raw = spec.max_raw();
    return out;
  }
  if (rounded <= -0x1p100) {
    out.saturated = true;
    out.value.raw = spec.min_raw();
    return out;
  }
  out.value.raw = saturate(static_cast<Raw>(rounded), spec, &out.saturated);
  return out;
}

double fixed_to_fp(const FixedValue& v, FloatWidth target) {
  return round_scaled_integer(v.raw, -v.spec.frac_bits, target);
}

// ---------------------------------------------------------------------------

int exponent_bias(FloatWidth width) { return width == FloatWidth::kFP32 ? 127 : 15; }
int mantissa_length(FloatWidth width) { return width == FloatWidth::kFP32 ? 23 : 10; }

std::uint32_t float_to_bits(float x) {
  std::uint32_t b;
  std::memcpy(&b, &x, sizeof b);
  return b;
}

float bits_to_float(std::uint32_t bits) {
  float x;
  std::memcpy(&x, &bits, sizeof x);
  return x;
}

FloatBits float_decompose(float x) {
  if (!std::isfinite(x)) {
    fail(ErrorCode::kDomain, "float_decompose: NaN/Inf is not supported by the inverter path");
  }
  const std::uint32_t b = float_to_bits(x);
  return FloatBits{b >> 31, (b >> 23) & 0xFF, b & 0x7FFFFF, 127, 23};
}

FloatBits half_decompose(std::uint16_t bits) {
  if (((bits >> 10) & 0x1F) == 0x1F) {
    fail(ErrorCode::kDomain, "half_decompose: NaN/Inf is not supported by the inverter path");
  }
  return FloatBits{static_cast<std::uint32_t>(bits >> 15),
                   static_cast<std::uint32_t>((bits >> 10) & 0x1F),
                   static_cast<std::uint32_t>(bits & 0x3FF), 15, 10};
}

std::uint32_t float_reassemble(const FloatBits& b) {
  const int exp_bits = b.mantissa_len == 23 ? 8 : 5;
  return (b.sign << (b.mantissa_len + exp_bits)) | (b.exponent_field << b.mantissa_len) |
         b.mantissa_field;
}

// ---------------------------------------------------------------------------

void QuantParams::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    fail(ErrorCode::kConfig, "QuantParams: scale must be positive and finite");
  }
  if (zero_point < -128 || zero_point > 127) {
    fail(ErrorCode::kConfig, "QuantParams: zero_point outside INT8 range");
  }
}

QuantParams symmetric_int8_params(std::span<const double> x) {
  double max_abs = 0.0;
  for (double v : x) max_abs = std::max(max_abs, std::fabs(v));
  return QuantParams{max_abs > 0.0 ? max_abs / 127.0 : 1.0, 0};
}

std::vector<std::int8_t> quantize_int8(std::span<const double> x, const QuantParams& params) {
  params.validate();
  std::vector<std::int8_t> q;
  q.reserve(x.size());
  for (double v : x) {
    const double r = std::nearbyint(v / params.scale) + params.zero_point;
    q.push_back(static_cast<std::int8_t>(std::clamp(r, -128.0, 127.0)));
  }
  return q;
}

std::vector<double> dequantize_int8(std::span<const std::int8_t> q, const QuantParams& params) {
  std::vector<double> x;
  x.reserve(q.size());
  for (std::int8_t v : q) x.push_back((static_cast<int>(v) - params.zero_point) * params.scale);
  return x;
}

}  // namespace haan
