// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#include "haan/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "haan/error.hpp"
#include "haan/trace.hpp"

namespace haan {

void IsdTable::validate() const {
  if (layer_count < 2) fail(ErrorCode::kConfig, "ISD table needs at least 2 layers");
  if (sample_count < 1) fail(ErrorCode::kConfig, "ISD table needs at least 1 sample");
  if (values.size() != sample_count * layer_count) {
    fail(ErrorCode::kDimensionMismatch, "ISD table size does not match its dimensions");
  }
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorCode::kConfig, "ISD table contains a non-finite entry");
  }
}

std::vector<double> IsdTable::layer_means() const {
  std::vector<double> means(layer_count, 0.0);
  for (std::size_t s = 0; s < sample_count; ++s) {
    for (std::size_t l = 0; l < layer_count; ++l) means[l] += at(s, l);
  }
  for (double& m : means) m /= static_cast<double>(sample_count);
  return means;
}

void IsdTable::append(const IsdTable& other) {
  if (sample_count == 0) {
    *this = other;
    return;
  }
  if (other.layer_count != layer_count) {
    fail(ErrorCode::kDimensionMismatch, "ISD tables disagree on layer count");
  }
  values.insert(values.end(), other.values.begin(), other.values.end());
  sample_count += other.sample_count;
}

void write_isd_csv(const IsdTable& table, std::ostream& os) {
  os << "sample,layer,log_isd\n";
  char buf[64];
  for (std::size_t s = 0; s < table.sample_count; ++s) {
    for (std::size_t l = 0; l < table.layer_count; ++l) {
      std::snprintf(buf, sizeof buf, "%.17g", table.at(s, l));
      os << s << ',' << l << ',' << buf << '\n';
    }
  }
}

// ---------------------------------------------------------------------------

std::string to_string(AnchorPolicy policy) {
  return policy == AnchorPolicy::kLiveMeasurement ? "live" : "calibration_average";
}

AnchorPolicy parse_anchor_policy(const std::string& name) {
  if (name == "live") return AnchorPolicy::kLiveMeasurement;
  if (name == "calibration_average") return AnchorPolicy::kCalibrationAverage;
  fail(ErrorCode::kConfig, "unknown anchor policy '" + name + "'");
}

void IsdPredictor::validate(int layer_count, int min_gap) const {
  if (!(0 <= skip_start && skip_start < skip_end && skip_end < layer_count)) {
    fail(ErrorCode::kConfig, "predictor range must satisfy 0 <= skip_start < skip_end < layers");
  }
  if (skip_end - skip_start < min_gap) {
    fail(ErrorCode::kConfig, "predictor range is narrower than the minimum gap");
  }
  if (!std::isfinite(decay)) fail(ErrorCode::kConfig, "predictor decay must be finite");
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    fail(ErrorCode::kDegenerateInput, "pearson: need two sequences of equal length >= 2");
  }
  const auto n = static_cast<long double>(xs.size());
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  long double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const long double dx = xs[i] - mx;
    const long double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0 || syy == 0) {
    fail(ErrorCode::kDegenerateInput, "pearson: sequence has zero variance");
  }
  const long double r = sxy / std::sqrt(sxx * syy);
  return static_cast<double>(std::clamp(r, -1.0L, 1.0L));
}

SkipRange scan_skip_range(const IsdTable& table, const ScanOptions& options) {
  table.validate();
  const int layers = static_cast<int>(table.layer_count);
  const int m = options.min_gap;
  if (m < 2) fail(ErrorCode::kConfig, "minimum gap M must be >= 2");
  if (layers <= m) {
    fail(ErrorCode::kNoValidRange, "minimum gap M=" + std::to_string(m) +
                                       " leaves no window in " + std::to_string(layers) +
                                       " layers");
  }
  const auto means = table.layer_means();

  SkipRange best;
  best.min_cor = 1.0;
  bool found = false;
  SkipRange fallback;
  bool any_valid = false;

  for (int i = 0; i + m < layers; ++i) {
    const int last_gap = options.wide_windows ? layers - 1 - i : m;
    for (int gap = m; gap <= last_gap; ++gap) {
      const int j = i + gap;
      std::vector<double> idx(static_cast<std::size_t>(gap + 1));
      for (int k = 0; k <= gap; ++k) idx[static_cast<std::size_t>(k)] = i + k;
      const std::span<const double> window(means.data() + i, static_cast<std::size_t>(gap + 1));
      double r;
      try {
        r = pearson(window, idx);
      } catch (const Error&) {
        continue;  // constant window
      }
      if (!any_valid) {
        fallback = {i, j, r};
        any_valid = true;
      }
      if (r < best.min_cor) {
        best = {i, j, r};
        found = true;
      }
    }
  }
  if (found) return best;
  if (any_valid) return fallback;
  fail(ErrorCode::kNoValidRange, "every candidate window is degenerate");
}

DecayFit cal_decay(std::span<const double> window) {
  if (window.size() < 2) {
    fail(ErrorCode::kDegenerateInput, "cal_decay: window must hold at least 2 layers");
  }
  const auto n = static_cast<long double>(window.size());
  const long double mx = (n - 1) / 2;
  long double my = 0;
  for (double v : window) my += v;
  my /= n;
  long double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < window.size(); ++k) {
    const long double dx = static_cast<long double>(k) - mx;
    const long double dy = window[k] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (syy == 0) return {0.0, true};
  return {static_cast<double>(sxy / sxx), false};
}

double predict_isd(const IsdPredictor& predictor, double isd_at_start, int k) {
  if (k < predictor.skip_start || k > predictor.skip_end) {
    fail(ErrorCode::kOutOfRange, "layer " + std::to_string(k) + " lies outside the skip window [" +
                                     std::to_string(predictor.skip_start) + ", " +
                                     std::to_string(predictor.skip_end) + "]");
  }
  if (!(isd_at_start > 0.0) || !std::isfinite(isd_at_start)) {
    fail(ErrorCode::kInvalidIsd, "predict_isd: anchor ISD must be positive and finite");
  }
  if (k == predictor.skip_start) return isd_at_start;
  return std::exp(std::log(isd_at_start) + predictor.decay * (k - predictor.skip_start));
}

double anchor_isd(const IsdPredictor& predictor, double measured_isd_at_start) {
  return predictor.anchor_policy == AnchorPolicy::kLiveMeasurement
             ? measured_isd_at_start
             : std::exp(predictor.anchor_log_isd);
}

CalibrationResult run_calibration(const IsdTable& table, const ScanOptions& options) {
  const SkipRange range = scan_skip_range(table, options);
  const auto means = table.layer_means();
  const std::span<const double> window(means.data() + range.start,
                                        static_cast<std::size_t>(range.end - range.start + 1));
  const DecayFit fit = cal_decay(window);

  CalibrationResult out;
  out.predictor.skip_start = range.start;
  out.predictor.skip_end = range.end;
  out.predictor.decay = fit.slope;
  out.predictor.anchor_log_isd = means[static_cast<std::size_t>(range.start)];
  out.min_cor = range.min_cor;
  out.decay_degenerate = fit.degenerate;
  out.table = table;
  return out;
}

CalibrationResult run_calibration(std::span<const ActivationTrace> traces, NormKind kind,
                                  const ScanOptions& options) {
  if (traces.empty()) fail(ErrorCode::kUsage, "calibration needs at least one trace");
  IsdTable table;
  for (const auto& t : traces) table.append(extract_isd_table(t, kind));
  return run_calibration(table, options);
}

}  // namespace haan
