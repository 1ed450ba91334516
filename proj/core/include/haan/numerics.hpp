// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "haan/error.hpp"

namespace haan {

// Fixed-point payloads never exceed 64 bits, but intermediate products and
// accumulators need headroom, so every raw value is carried in 128 bits.
using Raw = __int128;

enum class Rounding { kNearestEven, kTruncate };

enum class FloatWidth { kFP32, kFP16 };

/// A Q-format: `total_bits` wide, `frac_bits` of them fractional.
struct FixedPointSpec {
  int total_bits = 32;
  int frac_bits = 16;
  bool is_signed = true;

  /// Throws Error(kConfig) unless 0 < frac_bits < total_bits <= 64.
  void validate() const;

  Raw max_raw() const;
  Raw min_raw() const;
  double resolution() const;  // 2^-frac_bits
  double max_value() const;
  double min_value() const;

  friend bool operator==(const FixedPointSpec&, const FixedPointSpec&) = default;
};

inline constexpr FixedPointSpec kQ16_16{32, 16, true};
inline constexpr FixedPointSpec kQ32_32{64, 32, true};

struct NumericFormat {
  enum class Kind {
    kFP64,  // software reference backing; not a datapath format
    kFP32,
    kFP16,
    kINT8,
    kFixedPoint,
  };

  Kind kind = Kind::kFP32;
  std::optional<FixedPointSpec> fixed_spec;  // present iff kind == kFixedPoint

  static NumericFormat fp64() { return {Kind::kFP64, std::nullopt}; }
  static NumericFormat fp32() { return {Kind::kFP32, std::nullopt}; }
  static NumericFormat fp16() { return {Kind::kFP16, std::nullopt}; }
  static NumericFormat int8() { return {Kind::kINT8, std::nullopt}; }
  static NumericFormat fixed(FixedPointSpec spec) { return {Kind::kFixedPoint, spec}; }

  void validate() const;
  bool is_hardware() const { return kind != Kind::kFP64; }

  /// Intermediate Q-format the datapath uses for this input format:
  /// Q32.32 for FP32, Q16.16 for FP16/INT8, the given FixedPointSpec for fixed point.
  FixedPointSpec default_fixed_spec() const;

  friend bool operator==(const NumericFormat&, const NumericFormat&) = default;
};

std::string to_string(NumericFormat::Kind kind);
/// Parses "fp64", "fp32", "fp16", "int8" or "fixed" (case-insensitive).
NumericFormat::Kind parse_format_kind(const std::string& name);

// ---------------------------------------------------------------------------
// Fixed point

struct FixedValue {
  Raw raw = 0;
  FixedPointSpec spec;

  double to_double() const;
};

struct FixedConversion {
  FixedValue value;
  bool saturated = false;
};

/// FP2FX. `x` must already be a value of the source float format; NaN maps to
/// zero with the saturation flag set, +-Inf saturate.
FixedConversion fp_to_fixed(double x, const FixedPointSpec& spec,
                            Rounding rounding = Rounding::kNearestEven);

/// FX2FP with a single correct rounding to the target width.
double fixed_to_fp(const FixedValue& v, FloatWidth target);

/// Clamps `raw` into the representable range of `spec`.
Raw saturate(Raw raw, const FixedPointSpec& spec, bool* saturated = nullptr);

// ---------------------------------------------------------------------------
// Float formats

/// Rounds `x` to the nearest value of `width` (ties to even, IEEE overflow).
double round_to_width(double x, FloatWidth width);

/// Correctly rounds raw * 2^exp2 to a float of `width`.
double round_scaled_integer(Raw raw, int exp2, FloatWidth width);

std::uint16_t half_bits_from_double(double x);
double half_to_double(std::uint16_t bits);

struct FloatBits {
  std::uint32_t sign = 0;
  std::uint32_t exponent_field = 0;  // E_x
  std::uint32_t mantissa_field = 0;  // M_x
  int exponent_bias = 127;           // Q
  int mantissa_len = 23;             // L

  FloatWidth width() const {
    return mantissa_len == 23 ? FloatWidth::kFP32 : FloatWidth::kFP16;
  }
};

int exponent_bias(FloatWidth width);
int mantissa_length(FloatWidth width);

/// Throws Error(kDomain) on NaN or Inf.
FloatBits float_decompose(float x);
FloatBits half_decompose(std::uint16_t bits);
/// Bit pattern (low 32 or 16 bits) rebuilt from the fields.
std::uint32_t float_reassemble(const FloatBits& b);

std::uint32_t float_to_bits(float x);
float bits_to_float(std::uint32_t bits);

// ---------------------------------------------------------------------------
// INT8 affine quantization

struct QuantParams {
  double scale = 1.0;
  int zero_point = 0;

  void validate() const;
};

/// Symmetric per-tensor parameters: scale = max|x| / 127 (1.0 for all-zero x).
QuantParams symmetric_int8_params(std::span<const double> x);

std::vector<std::int8_t> quantize_int8(std::span<const double> x, const QuantParams& params);
std::vector<double> dequantize_int8(std::span<const std::int8_t> q, const QuantParams& params);

}  // namespace haan
