// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_int.hpp>
#include <bit>
#include <cmath>
#include <random>

#include "haan/datapath.hpp"
#include "haan/error.hpp"

namespace haan {
namespace {

using boost::multiprecision::cpp_rational;
using datapath::Config;
using datapath::Diagnostics;

Raw fx(double v, int frac) { return static_cast<Raw>(std::llround(std::ldexp(v, frac))); }

TEST(DatapathConfig, Defaults) {
  const auto c16 = Config::for_format(NumericFormat::fp16());
  EXPECT_EQ(c16.fixed, kQ16_16);
  EXPECT_EQ(c16.inverter.newton_iters, 1);
  EXPECT_EQ(c16.inverter.float_width, FloatWidth::kFP32);
  const auto c32 = Config::for_format(NumericFormat::fp32());
  EXPECT_EQ(c32.fixed, kQ32_32);
  EXPECT_EQ(c32.inverter.newton_iters, 3);
  EXPECT_EQ(c32.isd_spec().frac_bits, 40);
  EXPECT_THROW(Config::for_format(NumericFormat::fp64()).validate(), Error);
}

TEST(Reciprocal, ShiftForPowersOfTwo) {
  EXPECT_TRUE(datapath::Reciprocal::of(4096, 16).is_shift());
  EXPECT_FALSE(datapath::Reciprocal::of(257, 16).is_shift());
  EXPECT_THROW(datapath::Reciprocal::of(0, 16), Error);
  const auto r = datapath::Reciprocal::of(8, 16);
  EXPECT_EQ(r.apply(Raw{80} << 16, Rounding::kNearestEven), Raw{10} << 16);
}

TEST(Reciprocal, ConstantWithinHalfUlp) {
  std::mt19937_64 rng(2);
  for (std::int64_t n : {3, 5, 257, 1000, 1280, 4095}) {
    const auto r = datapath::Reciprocal::of(n, 16);
    // Sums of up to N lanes of a 32-bit format: |v| < N * 2^31.
    const int bits = 31 + static_cast<int>(std::bit_width(static_cast<std::uint64_t>(n)));
    for (int i = 0; i < 1000; ++i) {
      const Raw v = static_cast<Raw>(rng() >> (64 - bits)) * ((i & 1) ? -1 : 1);
      const Raw got = r.apply(v, Rounding::kNearestEven);
      const cpp_rational exact(static_cast<long long>(v), n);
      const cpp_rational diff = cpp_rational(static_cast<long long>(got)) - exact;
      EXPECT_LE(boost::multiprecision::abs(diff), cpp_rational(1)) << n;
    }
  }
}

TEST(Stats, ExactSmallExample) {
  const auto cfg = Config::for_format(NumericFormat::fp16());
  Diagnostics d;
  const std::vector<double> z{1, 2, 3, 4};
  const auto lanes = datapath::ingress(z, cfg, d);
  const auto s = datapath::compute_stats(lanes, 4, 4, NormKind::kLayerNorm, 0.0, cfg, d);
  EXPECT_EQ(datapath::decode_mean(s.mean, cfg), 2.5);
  EXPECT_EQ(datapath::decode_variance(s.variance, cfg), 1.25);
  EXPECT_FALSE(s.clamped);
  const auto r = datapath::compute_stats(lanes, 4, 4, NormKind::kRMSNorm, 0.0, cfg, d);
  EXPECT_EQ(r.mean, 0);
  EXPECT_EQ(datapath::decode_variance(r.variance, cfg), 7.5);
  EXPECT_EQ(d, Diagnostics{});
}

TEST(Stats, MatchesRationalOracle) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> lane(-(1 << 20), 1 << 20);
  const auto cfg = Config::for_format(NumericFormat::fixed(kQ16_16));
  for (std::size_t n : {3u, 7u, 100u, 257u}) {
    std::vector<Raw> lanes(n);
    cpp_rational sum = 0, sq = 0;
    for (auto& v : lanes) {
      v = lane(rng);
      sum += cpp_rational(static_cast<long long>(v), 1 << 16);
      sq += cpp_rational(static_cast<long long>(v) * static_cast<long long>(v),
                         static_cast<long long>(1) << 32);
    }
    const cpp_rational mean = sum / n;
    const cpp_rational var = sq / n - mean * mean;
    Diagnostics d;
    const auto s = datapath::compute_stats(lanes, n, n, NormKind::kLayerNorm, 0.0, cfg, d);
    const cpp_rational got_mean(static_cast<long long>(s.mean), 1 << 16);
    const cpp_rational got_var(static_cast<long long>(s.variance), static_cast<long long>(1) << 32);
    // Rounding: one half-ulp per term plus the 1/N constant; the mean is
    // squared after rounding to 2^-16, which adds |2 mean| * 2^-17 + 2^-34.
    EXPECT_LE(boost::multiprecision::abs(got_mean - mean), cpp_rational(1, 1 << 16));
    const cpp_rational bound =
        cpp_rational(static_cast<long long>(n) + 8, static_cast<long long>(1) << 32) +
        boost::multiprecision::abs(mean) / (1 << 16) + cpp_rational(1, static_cast<long long>(1) << 34);
    EXPECT_LE(boost::multiprecision::abs(got_var - var), bound);
  }
}

TEST(Stats, ConstantInputClampsAtZero) {
  const auto cfg = Config::for_format(NumericFormat::fp16());
  for (std::size_t n : {3u, 5u, 7u, 11u}) {
    Diagnostics d;
    const std::vector<double> z(n, 0.3);
    const auto lanes = datapath::ingress(z, cfg, d);
    const auto s = datapath::compute_stats(lanes, n, n, NormKind::kLayerNorm, 0.0, cfg, d);
    EXPECT_GE(s.variance, 0);
    EXPECT_LE(s.variance, static_cast<Raw>(n));
    EXPECT_EQ(s.clamped, d.variance_clamps == 1);
  }
}

TEST(Stats, SubsampledMeanOverDifferentLength) {
  const auto cfg = Config::for_format(NumericFormat::fp16());
  Diagnostics d;
  const std::vector<double> z{1, 3, 10, 10};
  const auto lanes = datapath::ingress(z, cfg, d);
  const auto sub = datapath::compute_stats(lanes, 2, 2, NormKind::kLayerNorm, 0.0, cfg, d);
  EXPECT_EQ(datapath::decode_mean(sub.mean, cfg), 2.0);
  EXPECT_EQ(datapath::decode_variance(sub.variance, cfg), 1.0);
  const auto full_mean = datapath::compute_stats(lanes, 2, 4, NormKind::kLayerNorm, 0.0, cfg, d);
  EXPECT_EQ(datapath::decode_mean(full_mean.mean, cfg), 6.0);
  EXPECT_EQ(full_mean.variance, sub.variance);
  EXPECT_THROW(datapath::compute_stats(lanes, 0, 4, NormKind::kLayerNorm, 0.0, cfg, d), Error);
}

TEST(Inverter, ZeroVarianceAndAccuracy) {
  const auto cfg = Config::for_format(NumericFormat::fp16());
  Diagnostics d;
  try {
    datapath::invert(0, cfg, d);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroVariance);
  }
  const Raw var = fx(0.0625, cfg.acc_frac());
  EXPECT_NEAR(datapath::decode_isd(datapath::invert(var, cfg, d), cfg), 4.0, 4.0 * 0.002);
  const auto c32 = Config::for_format(NumericFormat::fp32());
  const Raw v2 = Raw{2} << c32.acc_frac();
  EXPECT_NEAR(datapath::decode_isd(datapath::invert(v2, c32, d), c32), 1.0 / std::sqrt(2.0), 1e-9);
}

TEST(Inverter, PredictedIsdEncoding) {
  const auto cfg = Config::for_format(NumericFormat::fp16());
  Diagnostics d;
  EXPECT_EQ(datapath::encode_isd(2.0, cfg, d), Raw{2} << 24);
  EXPECT_THROW(datapath::encode_isd(0.0, cfg, d), Error);
  EXPECT_THROW(datapath::encode_isd(-1.0, cfg, d), Error);
  EXPECT_THROW(datapath::encode_isd(NAN, cfg, d), Error);
  EXPECT_THROW(datapath::encode_isd(1e-12, cfg, d), Error);  // rounds to zero
}

TEST(NormalizeElement, AffineExample) {
  const auto cfg = Config::for_format(NumericFormat::fp16());
  Diagnostics d;
  const int f = cfg.lane_frac();
  const Raw isd = Raw{1} << cfg.isd_spec().frac_bits;
  EXPECT_EQ(datapath::normalize_element(fx(1, f), 0, isd, fx(2, f), fx(1, f), cfg, d), fx(3, f));
  EXPECT_EQ(datapath::normalize_element(fx(-1, f), 0, isd, fx(2, f), fx(1, f), cfg, d), fx(-1, f));
  EXPECT_EQ(datapath::normalize_element(fx(5, f), fx(2, f), isd / 2, fx(1, f), 0, cfg, d),
            fx(1.5, f));
  // Saturation to the lane format.
  EXPECT_EQ(datapath::normalize_element(fx(30000, f), 0, isd * 4, fx(1, f), 0, cfg, d),
            cfg.fixed.max_raw());
  EXPECT_EQ(d.saturations, 1);
}

TEST(Ingress, RoundsThroughInputFormat) {
  Diagnostics d;
  const auto c16 = Config::for_format(NumericFormat::fp16());
  const std::vector<double> z{1.0 + std::ldexp(1.0, -12)};
  EXPECT_EQ(datapath::ingress(z, c16, d)[0], Raw{1} << 16);
  const auto cfx = Config::for_format(NumericFormat::fixed(kQ16_16));
  EXPECT_EQ(datapath::ingress(z, cfx, d)[0], (Raw{1} << 16) + 16);
  const std::vector<double> bad{1.0, NAN};
  EXPECT_THROW(datapath::ingress(bad, c16, d), Error);
}

TEST(Ingress, Int8Dequantizes) {
  Diagnostics d;
  const auto c8 = Config::for_format(NumericFormat::int8());
  const std::vector<double> z{1.27, -0.5, 0.333, 0.0};
  const auto lanes = datapath::ingress(z, c8, d);
  const double scale = 1.27 / 127.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double q = std::nearbyint(z[i] / scale);
    EXPECT_EQ(lanes[i], fp_to_fixed(q * scale, kQ16_16).value.raw) << i;
  }
  EXPECT_EQ(lanes[3], 0);
}

TEST(Egress, ConvertsToInputFormat) {
  const auto c16 = Config::for_format(NumericFormat::fp16());
  const Raw v = (Raw{1} << 16) + 16;  // 1 + 2^-12
  EXPECT_EQ(datapath::egress(v, c16), 1.0);
  const auto cfx = Config::for_format(NumericFormat::fixed(kQ16_16));
  EXPECT_EQ(datapath::egress(v, cfx), 1.0 + std::ldexp(1.0, -12));
}

}  // namespace
}  // namespace haan
