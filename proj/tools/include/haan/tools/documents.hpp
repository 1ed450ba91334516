// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>

#include "haan/accel_sim.hpp"
#include "haan/calibrate.hpp"
#include "haan/norm_core.hpp"

#include "json.hpp"

// Config, predictor and report documents. All are JSON; every real is written
// with 17 significant digits so documents round-trip exactly.

namespace haan::tools {

using Json = nlohmann::ordered_json;

/// Serializes with %.17g reals and two-space indentation, newline-terminated.
std::string dump_json(const Json& doc);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

inline constexpr std::uint64_t kDefaultSeed = 20240613;
/// HAAN_SEED when set (decimal or 0x-hex), else kDefaultSeed.
std::uint64_t default_seed();

/// The config document:
///   norm:        kind, format, n_sub, epsilon, full_length_mean
///   fixed_point: total_bits, frac_bits, rounding, guard_bits
///   invsqrt:     float_width, sigma, newton_iters
///   accel:       p_d, p_n, pipeline_depth, clock_hz, latency{...}
///   model:       name, skip_range [start, end]  (presets only)
/// Omitted fields take the module defaults.
struct RunConfig {
  NormKind kind = NormKind::kLayerNorm;
  NumericFormat format = NumericFormat::fp16();
  std::optional<std::size_t> n_sub;
  double epsilon = 0.0;
  bool full_length_mean = false;
  datapath::Config datapath = datapath::Config::for_format(NumericFormat::fp16());
  sim::AccelConfig accel;  // accel.datapath mirrors `datapath`
  std::string model_name;
  std::optional<std::pair<int, int>> skip_range;

  /// Throws Error(kConfig) naming the offending field path.
  static RunConfig from_json(const Json& doc);
  static RunConfig load(const std::filesystem::path& path);
  Json to_json() const;

  /// Replaces the input format, recomputing format-dependent defaults unless
  /// the document pinned them.
  void set_format(const NumericFormat& fmt);

  NormConfig norm_config(std::size_t n, IsdMode mode = IsdMode::kCompute) const;

  // Fields the source document set explicitly.
  bool pinned_fixed = false;
  bool pinned_newton = false;
  bool pinned_width = false;
};

std::string to_string(Rounding rounding);
Rounding parse_rounding(const std::string& name);
std::string to_string(FloatWidth width);
FloatWidth parse_float_width(const std::string& name);

struct PredictorDocument {
  static constexpr int kSchemaVersion = 1;
  std::string model_id;
  IsdPredictor predictor;
  double min_cor = 1.0;
  int min_gap = 10;
  std::string trace_digest;  // 16 hex digits, FNV-1a of the calibration traces

  Json to_json() const;
  static PredictorDocument from_json(const Json& doc);
  static PredictorDocument load(const std::filesystem::path& path);
};

std::string hex64(std::uint64_t v);

}  // namespace haan::tools
