// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <ostream>

#include "CLI11.hpp"
#include "haan/tools/commands.hpp"

namespace haan::tools {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage:
    case ErrorCode::kConfig:
      return 1;
    case ErrorCode::kFormat:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kDegenerateInput:
    case ErrorCode::kNoValidRange:
    case ErrorCode::kOutOfRange:
      return 2;
    case ErrorCode::kZeroVariance:
    case ErrorCode::kInvalidIsd:
    case ErrorCode::kDomain:
      return 3;
  }
  return 2;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"HAAN normalization toolkit: calibration, approximate normalization, "
               "accelerator simulation"};
  app.name("haan");
  app.require_subcommand(1);

  GenTraceOptions gen;
  std::size_t tail_start = 40, tail_end = 60;
  double tail_slope = -0.1;
  auto* c_gen = app.add_subcommand("gen-trace", "Write a synthetic HAANTRC1 trace");
  c_gen->add_option("--spec", gen.spec, "JSON trace spec (overrides the flags below)")
      ->check(CLI::ExistingFile);
  c_gen->add_option("--out", gen.out, "Output .haantrc path")->required();
  c_gen->add_option("--model-id", gen.synth.model_id);
  c_gen->add_option("--layers", gen.synth.layer_count)->capture_default_str();
  c_gen->add_option("--dim", gen.synth.embedding_dim)->capture_default_str();
  c_gen->add_option("--samples", gen.synth.sample_count)->capture_default_str();
  c_gen->add_option("--start", tail_start, "First layer of the log-linear window")
      ->capture_default_str();
  c_gen->add_option("--end", tail_end, "Last layer of the log-linear window")->capture_default_str();
  c_gen->add_option("--slope", tail_slope, "log-ISD slope inside the window")->capture_default_str();
  c_gen->add_option("--noise", gen.synth.noise_sigma, "log-ISD jitter sigma");
  c_gen->add_flag("--exact-moments", gen.synth.exact_moments,
                  "Rescale every vector to exactly its planted sigma");
  c_gen->add_option("--seed", gen.seed, "RNG seed (default: $HAAN_SEED or built-in)");

  CalibrateOptions cal;
  std::string cal_kind = "layernorm", cal_anchor = "live";
  auto* c_cal = app.add_subcommand("calibrate", "Find the ISD skip range and decay");
  c_cal->add_option("traces", cal.traces, "Calibration traces")->required()->check(CLI::ExistingFile);
  c_cal->add_option("--min-gap,-M", cal.min_gap, "Skip range width M")->capture_default_str();
  c_cal->add_option("--out", cal.out, "Predictor document path")->required();
  c_cal->add_option("--threshold", cal.threshold, "Reject if min_cor exceeds this")
      ->capture_default_str();
  c_cal->add_option("--kind", cal_kind, "layernorm|rmsnorm")->capture_default_str();
  c_cal->add_option("--anchor", cal_anchor, "live|calibration_average")->capture_default_str();
  c_cal->add_flag("--wide-windows", cal.wide_windows, "Also scan windows wider than M");
  c_cal->add_option("--isd-csv", cal.isd_csv, "Write the log-ISD table as CSV");

  NormOptions norm;
  auto* c_norm = app.add_subcommand("norm", "Approximate normalization with an error report");
  c_norm->add_option("trace", norm.trace)->required()->check(CLI::ExistingFile);
  c_norm->add_option("--config", norm.config)->check(CLI::ExistingFile);
  c_norm->add_option("--format", norm.format, "fp64|fp32|fp16|int8|fixed");
  c_norm->add_option("--nsub", norm.n_sub, "Subsampling length");
  c_norm->add_option("--kind", norm.kind, "layernorm|rmsnorm");
  c_norm->add_option("--predictor", norm.predictor)->check(CLI::ExistingFile);
  c_norm->add_option("--report", norm.report, "CSV error report")->required();

  SimOptions simo;
  auto* c_sim = app.add_subcommand("sim", "Cycle-level accelerator simulation");
  c_sim->add_option("trace", simo.trace)->required()->check(CLI::ExistingFile);
  c_sim->add_option("--config", simo.config)->check(CLI::ExistingFile);
  c_sim->add_option("--predictor", simo.predictor)->check(CLI::ExistingFile);
  c_sim->add_option("--report", simo.report, "JSON report")->required();
  c_sim->add_option("--events", simo.events, "CSV event log");

  SweepOptions sweep;
  auto* c_sweep = app.add_subcommand("sweep", "Simulate a grid of accelerator configurations");
  c_sweep->add_option("trace", sweep.trace)->required()->check(CLI::ExistingFile);
  c_sweep->add_option("--grid", sweep.grid)->required()->check(CLI::ExistingFile);
  c_sweep->add_option("--out", sweep.out, "Output directory")->required();
  c_sweep->add_option("--config", sweep.config)->check(CLI::ExistingFile);
  c_sweep->add_option("--predictor", sweep.predictor)->check(CLI::ExistingFile);
  c_sweep->add_option("--jobs,-j", sweep.jobs, "Parallel points (0: all cores)");

  VerifyOptions ver;
  auto* c_ver = app.add_subcommand("verify", "Run the built-in invariant checks");
  c_ver->add_option("--config", ver.config)->check(CLI::ExistingFile);
  c_ver->add_option("--seed", ver.seed);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (c_gen->parsed()) {
      gen.synth.isd_profile = LogLinearTail{tail_start, tail_end, tail_slope};
      return cmd_gen_trace(gen, out, err);
    }
    if (c_cal->parsed()) {
      cal.kind = parse_norm_kind(cal_kind);
      cal.anchor = parse_anchor_policy(cal_anchor);
      return cmd_calibrate(cal, out, err);
    }
    if (c_norm->parsed()) return cmd_norm(norm, out, err);
    if (c_sim->parsed()) return cmd_sim(simo, out, err);
    if (c_sweep->parsed()) return cmd_sweep(sweep, out, err);
    if (c_ver->parsed()) return cmd_verify(ver, out, err);
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace haan::tools
