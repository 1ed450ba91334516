// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "haan/numerics.hpp"

// Exact integer helpers behind every fixed-point multiply in the datapath.
// Products are formed at full 256-bit width and rounded once.

namespace haan::wide {

using U128 = unsigned __int128;

inline constexpr Raw kRawMax = static_cast<Raw>(~U128{0} >> 1);
inline constexpr Raw kRawMin = -kRawMax - 1;

int bit_length(U128 v);

/// round(v / 2^shift) for shift >= 0; v * 2^-shift exact when shift < 0
/// (saturating on overflow).
Raw shift_round(Raw v, int shift, Rounding mode, bool* overflow = nullptr);

/// Moves `v` from `from_frac` to `to_frac` fractional bits.
inline Raw rescale(Raw v, int from_frac, int to_frac, Rounding mode,
                   bool* overflow = nullptr) {
  return shift_round(v, from_frac - to_frac, mode, overflow);
}

/// (a * b) / 2^shift, rounded once, saturated to the 128-bit range.
Raw mul_shift(Raw a, Raw b, int shift, Rounding mode, bool* overflow = nullptr);

/// Fixed-point multiply: a (frac fa) * b (frac fb) -> frac f_out.
inline Raw mul(Raw a, int fa, Raw b, int fb, int f_out, Rounding mode,
               bool* overflow = nullptr) {
  return mul_shift(a, b, fa + fb - f_out, mode, overflow);
}

/// Saturating add.
Raw add(Raw a, Raw b, bool* overflow = nullptr);

}  // namespace haan::wide
