// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "haan/isd_table.hpp"
#include "haan/norm_types.hpp"

namespace haan {

/// Normalization-layer inputs of a model: sample -> layer -> vector (FP32),
/// stored sample-major, then layer-major, then element.
struct ActivationTrace {
  std::string model_id;
  std::size_t layer_count = 0;
  std::size_t embedding_dim = 0;
  std::size_t sample_count = 0;
  std::vector<std::string> layer_labels;  // execution order
  std::vector<float> data;

  /// Zero-filled trace with labels blkNN.attn_norm / blkNN.ffn_norm.
  static ActivationTrace zeros(std::string model_id, std::size_t layers, std::size_t dim,
                               std::size_t samples);

  std::span<const float> vector(std::size_t sample, std::size_t layer) const;
  std::span<float> vector(std::size_t sample, std::size_t layer);
  std::vector<double> vector_f64(std::size_t sample, std::size_t layer) const;

  /// Throws Error(kDimensionMismatch) or Error(kFormat) on inconsistent fields.
  void validate() const;

  friend bool operator==(const ActivationTrace&, const ActivationTrace&) = default;
};

/// Default execution-order label: two normalization layers per block.
std::string default_layer_label(std::size_t layer);

// HAANTRC1 container:
//   "HAANTRC1" | u32 version=1 | u32 layer_count | u32 embedding_dim |
//   u32 sample_count | label block | f32 payload
// The label block is model_id followed by layer_count labels, each a u32
// byte length plus UTF-8 bytes. All integers and floats are little-endian.
inline constexpr char kTraceMagic[8] = {'H', 'A', 'A', 'N', 'T', 'R', 'C', '1'};
inline constexpr std::uint32_t kTraceVersion = 1;

std::vector<std::uint8_t> serialize_trace(const ActivationTrace& trace);
/// Throws Error(kFormat) naming the byte offset of the defect.
ActivationTrace parse_trace(std::span<const std::uint8_t> bytes);

void write_trace(const ActivationTrace& trace, std::ostream& os);
ActivationTrace read_trace(std::istream& is);
void write_trace_file(const ActivationTrace& trace, const std::filesystem::path& path);
ActivationTrace read_trace_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Synthetic traces

/// log-ISD exactly linear with `slope` on [start, end]; strongly curved with
/// ripple before it and fluctuating after it.
struct LogLinearTail {
  std::size_t start = 0;
  std::size_t end = 0;
  double slope = -0.1;
};

/// log-ISD interpolated linearly between (layer, log_isd) knots; held
/// constant outside the first and last knot.
struct PiecewiseFromTable {
  std::vector<std::pair<double, double>> knots;
};

struct CustomProfile {
  std::function<double(std::size_t layer)> log_isd;
};

using IsdProfile = std::variant<LogLinearTail, PiecewiseFromTable, CustomProfile>;

struct SyntheticTraceSpec {
  std::string model_id = "synthetic";
  std::size_t layer_count = 64;
  std::size_t embedding_dim = 4096;
  std::size_t sample_count = 8;
  IsdProfile isd_profile = LogLinearTail{40, 60, -0.1};
  double noise_sigma = 0.0;  // jitter on log-ISD per (sample, layer)
  // Center each vector and rescale it to exactly its planted sigma.
  bool exact_moments = false;

  void validate() const;
};

/// The planted log(1/sigma_l) before jitter.
double planted_log_isd(const IsdProfile& profile, std::size_t layer);

/// Deterministic for a given seed (mt19937_64 + Box-Muller).
ActivationTrace generate_synthetic(const SyntheticTraceSpec& spec, std::uint64_t seed);

/// log(1/sigma) (LayerNorm) or log(1/r_z) (RMSNorm) per vector, in FP64.
/// Zero-variance vectors raise Error(kZeroVariance) naming (sample, layer).
IsdTable extract_isd_table(const ActivationTrace& trace, NormKind kind);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace haan
