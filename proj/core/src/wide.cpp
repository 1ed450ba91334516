// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#include "haan/wide.hpp"

#include <cstdint>

namespace haan::wide {
namespace {

struct U256 {
  U128 hi = 0;
  U128 lo = 0;
};

constexpr U128 kLow64 = (U128{1} << 64) - 1;

U256 mul_full(U128 a, U128 b) {
  const U128 a0 = a & kLow64, a1 = a >> 64;
  const U128 b0 = b & kLow64, b1 = b >> 64;
  const U128 p00 = a0 * b0;
  const U128 p01 = a0 * b1;
  const U128 p10 = a1 * b0;
  const U128 p11 = a1 * b1;

  const U128 mid = (p00 >> 64) + (p01 & kLow64) + (p10 & kLow64);
  U256 r;
  r.lo = (p00 & kLow64) | (mid << 64);
  r.hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
  return r;
}

bool bit_at(const U256& v, int i) {
  if (i < 128) return ((v.lo >> i) & 1) != 0;
  return ((v.hi >> (i - 128)) & 1) != 0;
}

// True if any of the low `n` bits are set.
bool any_below(const U256& v, int n) {
  if (n <= 0) return false;
  if (n <= 128) return n == 128 ? v.lo != 0 : (v.lo & ((U128{1} << n) - 1)) != 0;
  if (v.lo != 0) return true;
  const int m = n - 128;
  return m >= 128 ? v.hi != 0 : (v.hi & ((U128{1} << m) - 1)) != 0;
}

U256 shr(const U256& v, int s) {
  if (s == 0) return v;
  if (s >= 256) return {};
  if (s >= 128) return {0, v.hi >> (s - 128)};
  return {v.hi >> s, (v.lo >> s) | (v.hi << (128 - s))};
}

// Rounds m / 2^s and applies the sign, saturating to [kRawMin, kRawMax].
Raw round_signed(const U256& m, int s, Rounding mode, bool negative, bool* overflow) {
  if (s > 256) return 0;  // |m / 2^s| < 1/2
  U256 q = shr(m, s);
  if (s > 0 && mode == Rounding::kNearestEven) {
    const bool half = bit_at(m, s - 1);
    const bool sticky = any_below(m, s - 1);
    const bool odd = (q.lo & 1) != 0;
    if (half && (sticky || odd)) {
      q.lo += 1;
      if (q.lo == 0) q.hi += 1;
    }
  }
  const U128 limit = static_cast<U128>(kRawMax) + (negative ? 1 : 0);
  if (q.hi != 0 || q.lo > limit) {
    if (overflow) *overflow = true;
    return negative ? kRawMin : kRawMax;
  }
  return negative ? static_cast<Raw>(U128{0} - q.lo) : static_cast<Raw>(q.lo);
}

U128 magnitude(Raw v) {
  return v < 0 ? U128{0} - static_cast<U128>(v) : static_cast<U128>(v);
}

Raw apply_sign(U128 m, bool negative) {
  return negative ? static_cast<Raw>(U128{0} - m) : static_cast<Raw>(m);
}

}  // namespace

int bit_length(U128 v) {
  int n = 0;
  const auto hi = static_cast<std::uint64_t>(v >> 64);
  if (hi != 0) return 128 - __builtin_clzll(hi);
  const auto lo = static_cast<std::uint64_t>(v);
  if (lo != 0) n = 64 - __builtin_clzll(lo);
  return n;
}

Raw shift_round(Raw v, int shift, Rounding mode, bool* overflow) {
  if (v == 0) return 0;
  const bool neg = v < 0;
  const U128 m = magnitude(v);
  if (shift <= 0) {
    const int up = -shift;
    if (bit_length(m) + up > 127) {
      if (overflow) *overflow = true;
      return neg ? kRawMin : kRawMax;
    }
    return apply_sign(m << up, neg);
  }
  return round_signed(U256{0, m}, shift, mode, neg, overflow);
}

Raw mul_shift(Raw a, Raw b, int shift, Rounding mode, bool* overflow) {
  if (a == 0 || b == 0) return 0;
  const bool neg = (a < 0) != (b < 0);
  const U256 p = mul_full(magnitude(a), magnitude(b));
  if (shift < 0) {
    const int up = -shift;
    const int len = p.hi != 0 ? 128 + bit_length(p.hi) : bit_length(p.lo);
    if (len + up > 127) {
      if (overflow) *overflow = true;
      return neg ? kRawMin : kRawMax;
    }
    return apply_sign(p.lo << up, neg);
  }
  return round_signed(p, shift, mode, neg, overflow);
}

Raw add(Raw a, Raw b, bool* overflow) {
  Raw r;
  if (__builtin_add_overflow(a, b, &r)) {
    if (overflow) *overflow = true;
    return a < 0 ? kRawMin : kRawMax;
  }
  return r;
}

}  // namespace haan::wide
