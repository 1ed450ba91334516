// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "haan/calibrate.hpp"
#include "haan/error.hpp"
#include "haan/trace.hpp"

namespace haan::tools {

namespace fs = std::filesystem;

/// 0 success, 1 usage/config, 2 data/format, 3 numeric domain.
int exit_code_for(ErrorCode code);

struct GenTraceOptions {
  std::optional<fs::path> spec;  // JSON synthetic-trace spec; flags fill the rest
  fs::path out;
  SyntheticTraceSpec synth;
  std::optional<std::uint64_t> seed;
};

struct CalibrateOptions {
  std::vector<fs::path> traces;
  int min_gap = 10;
  fs::path out;
  double threshold = -0.95;
  NormKind kind = NormKind::kLayerNorm;
  AnchorPolicy anchor = AnchorPolicy::kLiveMeasurement;
  bool wide_windows = false;
  std::optional<fs::path> isd_csv;
};

struct NormOptions {
  fs::path trace;
  std::optional<fs::path> config;
  std::optional<std::string> format;
  std::optional<std::size_t> n_sub;
  std::optional<std::string> kind;
  std::optional<fs::path> predictor;
  fs::path report;
};

struct SimOptions {
  fs::path trace;
  std::optional<fs::path> config;
  std::optional<fs::path> predictor;
  fs::path report;
  std::optional<fs::path> events;
};

struct SweepOptions {
  fs::path trace;
  fs::path grid;
  fs::path out;
  std::optional<fs::path> config;
  std::optional<fs::path> predictor;
  int jobs = 0;  // 0: hardware concurrency
};

struct VerifyOptions {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
};

// Each command writes its documents, prints a short summary to `out` and
// diagnostics to `err`, and returns an exit code. Library errors propagate
// as haan::Error.
int cmd_gen_trace(const GenTraceOptions& opt, std::ostream& out, std::ostream& err);
int cmd_calibrate(const CalibrateOptions& opt, std::ostream& out, std::ostream& err);
int cmd_norm(const NormOptions& opt, std::ostream& out, std::ostream& err);
int cmd_sim(const SimOptions& opt, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepOptions& opt, std::ostream& out, std::ostream& err);
int cmd_verify(const VerifyOptions& opt, std::ostream& out, std::ostream& err);

/// Parses `args` (without the program name), dispatches, and maps every
/// error to its exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace haan::tools
