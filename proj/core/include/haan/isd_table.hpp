// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace haan {

/// log(ISD) per (sample, normalization layer), natural log, sample-major.
struct IsdTable {
  std::size_t sample_count = 0;
  std::size_t layer_count = 0;
  std::vector<double> values;

  IsdTable() = default;
  IsdTable(std::size_t samples, std::size_t layers)
      : sample_count(samples), layer_count(layers), values(samples * layers, 0.0) {}

  double& at(std::size_t sample, std::size_t layer) { return values[sample * layer_count + layer]; }
  double at(std::size_t sample, std::size_t layer) const {
    return values[sample * layer_count + layer];
  }

  /// Throws Error(kConfig) unless layer_count >= 2, sample_count >= 1 and
  /// every entry is finite.
  void validate() const;

  /// Mean log-ISD over samples for each layer.
  std::vector<double> layer_means() const;

  /// Appends the rows of `other` (layer counts must agree).
  void append(const IsdTable& other);
};

/// CSV with header `sample,layer,log_isd`.
void write_isd_csv(const IsdTable& table, std::ostream& os);

}  // namespace haan
