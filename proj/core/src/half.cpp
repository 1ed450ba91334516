// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>

#include "haan/numerics.hpp"
#include "haan/wide.hpp"

namespace haan {
namespace {

struct WidthParams {
  int precision;  // significand bits including the hidden bit
  int emin;
  double max_finite;
};

WidthParams params_for(FloatWidth w) {
  if (w == FloatWidth::kFP32) {
    return {24, -126, static_cast<double>(std::numeric_limits<float>::max())};
  }
  return {11, -14, 65504.0};
}

}  // namespace

double round_scaled_integer(Raw raw, int exp2, FloatWidth width) {
  if (raw == 0) return 0.0;
  const auto wp = params_for(width);
  const bool neg = raw < 0;
  const wide::U128 m = neg ? wide::U128{0} - static_cast<wide::U128>(raw)
                           : static_cast<wide::U128>(raw);
  const int len = wide::bit_length(m);
  const int msb_exp = len - 1 + exp2;
  int ulp_exp = msb_exp - (wp.precision - 1);
  if (ulp_exp < wp.emin - (wp.precision - 1)) ulp_exp = wp.emin - (wp.precision - 1);

  double result;
  const int shift = ulp_exp - exp2;
  if (shift > 0) {
    const Raw q = wide::shift_round(static_cast<Raw>(m), shift, Rounding::kNearestEven);
    result = std::ldexp(static_cast<double>(q), ulp_exp);
  } else {
    // At most `precision` significant bits, so the conversion is exact.
    result = std::ldexp(static_cast<double>(m), exp2);
  }
  if (result > wp.max_finite) result = std::numeric_limits<double>::infinity();
  return neg ? -result : result;
}

double round_to_width(double x, FloatWidth width) {
  if (width == FloatWidth::kFP32) return static_cast<double>(static_cast<float>(x));
  if (!std::isfinite(x) || x == 0.0) return x;
  int e = 0;
  const double frac = std::frexp(x, &e);
  const auto m = static_cast<long long>(std::ldexp(frac, 53));
  return round_scaled_integer(static_cast<Raw>(m), e - 53, width);
}

std::uint16_t half_bits_from_double(double x) {
  if (std::isnan(x)) return 0x7E00;
  const double v = round_to_width(x, FloatWidth::kFP16);
  const std::uint16_t sign = std::signbit(v) ? 0x8000 : 0;
  const double a = std::fabs(v);
  if (std::isinf(a)) return sign | 0x7C00;
  if (a == 0.0) return sign;
  if (a < std::ldexp(1.0, -14)) {
    return sign | static_cast<std::uint16_t>(std::ldexp(a, 24));
  }
  int e = 0;
  const double f = std::frexp(a, &e);  // a = f * 2^e, f in [0.5, 1)
  const auto exponent = static_cast<std::uint16_t>(e - 1 + 15);
  const auto mantissa = static_cast<std::uint16_t>(std::ldexp(f * 2.0 - 1.0, 10));
  return sign | static_cast<std::uint16_t>(exponent << 10) | mantissa;
}

double half_to_double(std::uint16_t bits) {
  const bool neg = (bits & 0x8000) != 0;
  const int exponent = (bits >> 10) & 0x1F;
  const int mantissa = bits & 0x3FF;
  double v;
  if (exponent == 0x1F) {
    v = mantissa == 0 ? std::numeric_limits<double>::infinity()
                      : std::numeric_limits<double>::quiet_NaN();
  } else if (exponent == 0) {
    v = std::ldexp(static_cast<double>(mantissa), -24);
  } else {
    v = std::ldexp(1.0 + mantissa / 1024.0, exponent - 15);
  }
  return neg ? -v : v;
}

}  // namespace haan
