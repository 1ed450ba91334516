// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

namespace haan {

enum class NormKind { kLayerNorm, kRMSNorm };

// Compute: the ISD is measured from the input. Predicted: it comes from the
// cross-layer ISD predictor and the square root inverter is bypassed.
enum class IsdMode { kCompute, kPredicted };

std::string to_string(NormKind kind);
std::string to_string(IsdMode mode);
NormKind parse_norm_kind(const std::string& name);

}  // namespace haan
