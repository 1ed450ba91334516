// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "haan/isd_table.hpp"
#include "haan/norm_types.hpp"

namespace haan {

struct ActivationTrace;

enum class AnchorPolicy {
  kLiveMeasurement,     // ISD measured per token at skip_start
  kCalibrationAverage,  // mean calibration log-ISD at skip_start
};

std::string to_string(AnchorPolicy policy);
AnchorPolicy parse_anchor_policy(const std::string& name);

/// Log-linear ISD predictor over the layer window [skip_start, skip_end].
/// Layers skip_start < k <= skip_end are predicted; skip_start is measured
/// and anchors the line.
struct IsdPredictor {
  int skip_start = 0;
  int skip_end = 0;
  double decay = 0.0;  // slope of log-ISD per layer
  AnchorPolicy anchor_policy = AnchorPolicy::kLiveMeasurement;
  double anchor_log_isd = 0.0;  // calibration mean at skip_start

  bool predicts(int layer) const { return layer > skip_start && layer <= skip_end; }
  void validate(int layer_count, int min_gap) const;

  friend bool operator==(const IsdPredictor&, const IsdPredictor&) = default;
};

/// Pearson correlation; throws Error(kDegenerateInput) if either side is
/// constant or the lengths differ / are below 2.
double pearson(std::span<const double> xs, std::span<const double> ys);

struct SkipRange {
  int start = 0;
  int end = 0;
  double min_cor = 1.0;
};

struct ScanOptions {
  int min_gap = 10;
  // Also scan windows wider than min_gap.
  bool wide_windows = false;
};

/// Slides windows [i, i + M] over the per-layer mean log-ISD and returns the
/// one with the most negative correlation against the layer index. Ties go
/// to the smallest i. Throws Error(kNoValidRange) when no window qualifies.
SkipRange scan_skip_range(const IsdTable& table, const ScanOptions& options);
inline SkipRange scan_skip_range(const IsdTable& table, int min_gap) {
  return scan_skip_range(table, ScanOptions{min_gap, false});
}

struct DecayFit {
  double slope = 0.0;
  bool degenerate = false;
};

/// Least-squares slope of the window against offsets 0, 1, 2, ...
DecayFit cal_decay(std::span<const double> window);

/// exp(log(isd_at_start) + decay * (k - skip_start)); k == skip_start
/// returns isd_at_start unchanged. Throws Error(kOutOfRange) outside the
/// window.
double predict_isd(const IsdPredictor& predictor, double isd_at_start, int k);

/// The anchor ISD the policy selects: the live measurement at skip_start or
/// exp(anchor_log_isd).
double anchor_isd(const IsdPredictor& predictor, double measured_isd_at_start);

struct CalibrationResult {
  IsdPredictor predictor;
  double min_cor = 1.0;
  bool decay_degenerate = false;
  IsdTable table;
};

CalibrationResult run_calibration(const IsdTable& table, const ScanOptions& options);

/// Extracts the ISD table of every trace (layer counts must agree), stacks
/// the rows in input order and calibrates.
CalibrationResult run_calibration(std::span<const ActivationTrace> traces, NormKind kind,
                                  const ScanOptions& options);

}  // namespace haan
