// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_int.hpp>
#include <random>

#include "haan/error.hpp"
#include "haan/wide.hpp"

namespace haan {
namespace {

using boost::multiprecision::cpp_int;

cpp_int big(Raw v) {
  const bool neg = v < 0;
  auto u = neg ? static_cast<wide::U128>(0) - static_cast<wide::U128>(v) : static_cast<wide::U128>(v);
  cpp_int r = static_cast<std::uint64_t>(u >> 64);
  r <<= 64;
  r += static_cast<std::uint64_t>(u);
  return neg ? cpp_int(-r) : r;
}

// Oracle: round(a * b / 2^s) with ties to even, or toward zero.
cpp_int oracle_mul_shift(Raw a, Raw b, int s, Rounding mode) {
  const cpp_int p = big(a) * big(b);
  const bool neg = p < 0;
  const cpp_int m = neg ? cpp_int(-p) : p;
  cpp_int q = m >> s;
  if (mode == Rounding::kNearestEven && s > 0) {
    const cpp_int rem = m - (q << s);
    const cpp_int half = cpp_int(1) << (s - 1);
    if (rem > half || (rem == half && (q & 1) != 0)) ++q;
  }
  return neg ? cpp_int(-q) : q;
}

Raw random_raw(std::mt19937_64& rng, int bits) {
  const auto hi = static_cast<wide::U128>(rng());
  const auto lo = static_cast<wide::U128>(rng());
  auto u = (hi << 64 | lo) >> (128 - bits);
  return (rng() & 1) ? -static_cast<Raw>(u) : static_cast<Raw>(u);
}

TEST(Wide, BitLength) {
  EXPECT_EQ(wide::bit_length(0), 0);
  EXPECT_EQ(wide::bit_length(1), 1);
  EXPECT_EQ(wide::bit_length(255), 8);
  EXPECT_EQ(wide::bit_length(wide::U128{1} << 100), 101);
}

TEST(Wide, ShiftRound) {
  EXPECT_EQ(wide::shift_round(5, 1, Rounding::kNearestEven), 2);   // 2.5 -> 2
  EXPECT_EQ(wide::shift_round(7, 1, Rounding::kNearestEven), 4);   // 3.5 -> 4
  EXPECT_EQ(wide::shift_round(-5, 1, Rounding::kNearestEven), -2);
  EXPECT_EQ(wide::shift_round(-7, 1, Rounding::kTruncate), -3);
  EXPECT_EQ(wide::shift_round(3, -4, Rounding::kNearestEven), 48);
  bool overflow = false;
  EXPECT_EQ(wide::shift_round(Raw{1} << 120, -10, Rounding::kNearestEven, &overflow), wide::kRawMax);
  EXPECT_TRUE(overflow);
}

TEST(Wide, MulShiftMatchesBigIntegerOracle) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 50000; ++i) {
    const int bits = 8 + static_cast<int>(rng() % 100);
    const Raw a = random_raw(rng, bits);
    const Raw b = random_raw(rng, bits);
    const int s = static_cast<int>(rng() % 140);
    for (auto mode : {Rounding::kNearestEven, Rounding::kTruncate}) {
      const cpp_int want = oracle_mul_shift(a, b, s, mode);
      bool overflow = false;
      const Raw got = wide::mul_shift(a, b, s, mode, &overflow);
      if (want > big(wide::kRawMax) || want < big(wide::kRawMin)) {
        ASSERT_TRUE(overflow);
        ASSERT_EQ(got, want > 0 ? wide::kRawMax : wide::kRawMin);
      } else {
        ASSERT_FALSE(overflow);
        ASSERT_EQ(big(got), want) << "bits=" << bits << " s=" << s;
      }
    }
  }
}

TEST(Wide, SaturatingAdd) {
  bool overflow = false;
  EXPECT_EQ(wide::add(wide::kRawMax, 1, &overflow), wide::kRawMax);
  EXPECT_TRUE(overflow);
  overflow = false;
  EXPECT_EQ(wide::add(wide::kRawMin, -1, &overflow), wide::kRawMin);
  EXPECT_TRUE(overflow);
  overflow = false;
  EXPECT_EQ(wide::add(2, 3, &overflow), 5);
  EXPECT_FALSE(overflow);
}

}  // namespace
}  // namespace haan
