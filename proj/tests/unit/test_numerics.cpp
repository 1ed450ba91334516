// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "haan/error.hpp"
#include "haan/numerics.hpp"

namespace haan {
namespace {

// Oracle: the IEEE binary16 value of a bit pattern, decoded from the fields.
double decode_half_oracle(std::uint16_t h) {
  const int s = h >> 15;
  const int e = (h >> 10) & 0x1f;
  const int m = h & 0x3ff;
  double v = e == 0 ? std::ldexp(m, -24) : std::ldexp(1024 + m, e - 25);
  return s ? -v : v;
}

TEST(FixedPointSpec, Validation) {
  EXPECT_NO_THROW(kQ16_16.validate());
  EXPECT_NO_THROW((FixedPointSpec{64, 63, true}.validate()));
  EXPECT_THROW((FixedPointSpec{16, 16, true}.validate()), Error);
  EXPECT_THROW((FixedPointSpec{32, 0, true}.validate()), Error);
  EXPECT_THROW((FixedPointSpec{65, 32, true}.validate()), Error);
}

TEST(FixedPointSpec, RangeAndResolution) {
  EXPECT_EQ(kQ16_16.max_raw(), (Raw{1} << 31) - 1);
  EXPECT_EQ(kQ16_16.min_raw(), -(Raw{1} << 31));
  EXPECT_DOUBLE_EQ(kQ16_16.resolution(), 1.0 / 65536.0);
  EXPECT_DOUBLE_EQ(kQ16_16.max_value(), 32768.0 - 1.0 / 65536.0);
  EXPECT_DOUBLE_EQ(kQ16_16.min_value(), -32768.0);
  const FixedPointSpec u{8, 4, false};
  EXPECT_EQ(u.max_raw(), 255);
  EXPECT_EQ(u.min_raw(), 0);
}

TEST(NumericFormat, FixedSpecPresentIffFixed) {
  EXPECT_NO_THROW(NumericFormat::fp16().validate());
  EXPECT_NO_THROW(NumericFormat::fixed(kQ16_16).validate());
  EXPECT_THROW((NumericFormat{NumericFormat::Kind::kFixedPoint, std::nullopt}.validate()), Error);
  EXPECT_THROW((NumericFormat{NumericFormat::Kind::kFP32, kQ16_16}.validate()), Error);
  EXPECT_EQ(NumericFormat::fp32().default_fixed_spec(), kQ32_32);
  EXPECT_EQ(NumericFormat::fp16().default_fixed_spec(), kQ16_16);
  EXPECT_EQ(NumericFormat::int8().default_fixed_spec(), kQ16_16);
  EXPECT_EQ(parse_format_kind("FP16"), NumericFormat::Kind::kFP16);
  EXPECT_THROW(parse_format_kind("bf16"), Error);
}

TEST(FpToFixed, Examples) {
  EXPECT_EQ(fp_to_fixed(1.5, kQ16_16).value.raw, 98304);
  EXPECT_EQ(fp_to_fixed(0.0, kQ16_16).value.raw, 0);
  EXPECT_EQ(fp_to_fixed(0.0, kQ32_32).value.raw, 0);
  // 0.1 * 65536 = 6553.6000000000004 (exact product of the double 0.1).
  EXPECT_EQ(fp_to_fixed(0.1, kQ16_16).value.raw, 6554);
  EXPECT_EQ(fp_to_fixed(0.1, kQ16_16, Rounding::kTruncate).value.raw, 6553);
}

TEST(FpToFixed, TiesToEvenAndTruncateTowardZero) {
  const FixedPointSpec q{16, 1, true};  // resolution 0.5
  EXPECT_EQ(fp_to_fixed(0.25, q).value.raw, 0);
  EXPECT_EQ(fp_to_fixed(0.75, q).value.raw, 2);
  EXPECT_EQ(fp_to_fixed(-0.25, q).value.raw, 0);
  EXPECT_EQ(fp_to_fixed(-0.75, q).value.raw, -2);
  EXPECT_EQ(fp_to_fixed(-0.75, q, Rounding::kTruncate).value.raw, -1);
  EXPECT_EQ(fp_to_fixed(0.75, q, Rounding::kTruncate).value.raw, 1);
}

TEST(FpToFixed, SaturatesWithFlag) {
  auto hi = fp_to_fixed(1e9, kQ16_16);
  EXPECT_TRUE(hi.saturated);
  EXPECT_EQ(hi.value.raw, kQ16_16.max_raw());
  auto lo = fp_to_fixed(-1e9, kQ16_16);
  EXPECT_TRUE(lo.saturated);
  EXPECT_EQ(lo.value.raw, kQ16_16.min_raw());
  auto inf = fp_to_fixed(INFINITY, kQ16_16);
  EXPECT_TRUE(inf.saturated);
  EXPECT_EQ(inf.value.raw, kQ16_16.max_raw());
  EXPECT_FALSE(fp_to_fixed(32767.0, kQ16_16).saturated);
}

TEST(FixedToFp, Examples) {
  EXPECT_EQ(fixed_to_fp({98304, kQ16_16}, FloatWidth::kFP32), 1.5);
  EXPECT_EQ(fixed_to_fp({0, kQ16_16}, FloatWidth::kFP32), 0.0);
  EXPECT_EQ(fixed_to_fp({6554, kQ16_16}, FloatWidth::kFP32), 0.100006103515625);
}

TEST(FixedToFp, RoundsOnceToTarget) {
  // 2^24 + 1 is not a binary32 value; ties-to-even goes to 2^24.
  const FixedPointSpec q{64, 4, true};
  const Raw v = ((Raw{1} << 24) + 1) << 4;
  EXPECT_EQ(fixed_to_fp({v, q}, FloatWidth::kFP32), 16777216.0);
  EXPECT_EQ(fixed_to_fp({v + (Raw{1} << 4), q}, FloatWidth::kFP32), 16777218.0);
  // Binary16: 2049 rounds to 2048, 2051 to 2052.
  EXPECT_EQ(fixed_to_fp({Raw{2049} << 4, q}, FloatWidth::kFP16), 2048.0);
  EXPECT_EQ(fixed_to_fp({Raw{2051} << 4, q}, FloatWidth::kFP16), 2052.0);
  // Overflow of binary16 goes to infinity.
  EXPECT_TRUE(std::isinf(fixed_to_fp({Raw{70000} << 4, q}, FloatWidth::kFP16)));
}

TEST(FixedRoundTrip, WithinOneUlpProperty) {
  std::mt19937_64 rng(7);
  for (const auto& spec : {kQ16_16, kQ32_32, FixedPointSpec{24, 12, true}}) {
    std::uniform_real_distribution<double> u(spec.min_value(), spec.max_value());
    for (int i = 0; i < 20000; ++i) {
      const double x = static_cast<float>(u(rng));
      if (x > spec.max_value() || x < spec.min_value()) continue;
      const auto c = fp_to_fixed(x, spec);
      ASSERT_FALSE(c.saturated);
      EXPECT_LE(std::fabs(c.value.to_double() - x), spec.resolution());
    }
  }
}

TEST(RoundToWidth, MatchesHardwareConversions) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 100000; ++i) {
    const double x = u(rng);
    EXPECT_EQ(round_to_width(x, FloatWidth::kFP32), static_cast<double>(static_cast<float>(x)));
  }
}

TEST(Half, DecodeMatchesFieldOracleExhaustively) {
  for (std::uint32_t h = 0; h < 0x10000; ++h) {
    const auto bits = static_cast<std::uint16_t>(h);
    if (((bits >> 10) & 0x1f) == 0x1f) continue;  // Inf/NaN
    const double v = half_to_double(bits);
    ASSERT_EQ(v, decode_half_oracle(bits)) << h;
    if (bits != 0x8000) {
      ASSERT_EQ(half_bits_from_double(v), bits) << h;
    }
  }
}

TEST(Half, RoundingOfDoubles) {
  EXPECT_EQ(round_to_width(1.0 + std::ldexp(1.0, -11), FloatWidth::kFP16), 1.0);  // tie to even
  EXPECT_EQ(round_to_width(1.0 + 3 * std::ldexp(1.0, -11), FloatWidth::kFP16),
            1.0 + std::ldexp(1.0, -9));
  EXPECT_EQ(round_to_width(65504.0, FloatWidth::kFP16), 65504.0);
  EXPECT_TRUE(std::isinf(round_to_width(65520.0, FloatWidth::kFP16)));
  EXPECT_EQ(round_to_width(std::ldexp(1.0, -24), FloatWidth::kFP16), std::ldexp(1.0, -24));
  EXPECT_EQ(round_to_width(std::ldexp(1.0, -26), FloatWidth::kFP16), 0.0);
}

TEST(FloatBits, Examples) {
  auto one = float_decompose(1.0f);
  EXPECT_EQ(one.exponent_field, 127u);
  EXPECT_EQ(one.mantissa_field, 0u);
  EXPECT_EQ(one.exponent_bias, 127);
  EXPECT_EQ(one.mantissa_len, 23);
  auto two = float_decompose(2.0f);
  EXPECT_EQ(two.exponent_field, 128u);
  EXPECT_EQ(two.mantissa_field, 0u);
  // 0.15625 = 1.25 * 2^-3: E = 124, M = 0.25 * 2^23.
  auto f = float_decompose(0.15625f);
  EXPECT_EQ(f.exponent_field, 124u);
  EXPECT_EQ(f.mantissa_field, 2097152u);
  EXPECT_EQ(f.sign, 0u);
  EXPECT_EQ(float_decompose(-2.0f).sign, 1u);
}

TEST(FloatBits, RejectsNonFinite) {
  EXPECT_THROW(float_decompose(INFINITY), Error);
  EXPECT_THROW(float_decompose(NAN), Error);
  EXPECT_THROW(half_decompose(0x7C00), Error);
  EXPECT_THROW(half_decompose(0x7E00), Error);
}

TEST(FloatBits, HalfBijectionExhaustive) {
  for (std::uint32_t h = 0; h < 0x10000; ++h) {
    if (((h >> 10) & 0x1f) == 0x1f) continue;
    const auto b = half_decompose(static_cast<std::uint16_t>(h));
    ASSERT_EQ(b.exponent_bias, 15);
    ASSERT_EQ(b.mantissa_len, 10);
    ASSERT_EQ(float_reassemble(b), h);
  }
}

TEST(FloatBits, Fp32BijectionSampled) {
  std::mt19937 rng(3);
  for (int i = 0; i < 200000; ++i) {
    const std::uint32_t bits = rng();
    if (((bits >> 23) & 0xff) == 0xff) continue;
    ASSERT_EQ(float_reassemble(float_decompose(bits_to_float(bits))), bits);
  }
}

TEST(Int8, Examples) {
  const std::vector<double> zeros{0, 0, 0};
  const auto q0 = quantize_int8(zeros, {0.1, 0});
  EXPECT_EQ(q0, (std::vector<std::int8_t>{0, 0, 0}));
  const std::vector<double> one{1.0};
  EXPECT_EQ(quantize_int8(one, {0.5, 0}), std::vector<std::int8_t>{2});
  const std::vector<double> big{1000.0, -1000.0};
  EXPECT_EQ(quantize_int8(big, {1.0, 0}), (std::vector<std::int8_t>{127, -128}));
  EXPECT_THROW(QuantParams({0.0, 0}).validate(), Error);
  EXPECT_THROW(QuantParams({1.0, 200}).validate(), Error);
}

TEST(Int8, RoundTripWithinHalfScale) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> x(256);
  for (auto& v : x) v = g(rng);
  const auto p = symmetric_int8_params(x);
  double maxabs = 0;
  for (double v : x) maxabs = std::max(maxabs, std::fabs(v));
  EXPECT_DOUBLE_EQ(p.scale, maxabs / 127.0);
  EXPECT_EQ(p.zero_point, 0);
  const auto back = dequantize_int8(quantize_int8(x, p), p);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_LE(std::fabs(back[i] - x[i]), p.scale / 2 + 1e-15);
  }
}

}  // namespace
}  // namespace haan
