// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "haan/calibrate.hpp"
#include "haan/datapath.hpp"
#include "haan/norm_core.hpp"
#include "haan/trace.hpp"

// Cycle-level model of the normalization accelerator: an input statistics
// calculator with p_d lanes feeding two adder trees, a square root inverter
// (or the ISD predictor when a layer is skipped) and p_n-lane normalization
// units, pipelined across samples. All arithmetic goes through
// haan::datapath, so outputs match the library path bit for bit.

namespace haan::sim {

using Cycles = std::int64_t;

/// Fixed post-tree / unit latencies. Overridable from the config document.
struct StageLatency {
  int stats_post = 3;  // square of mean, subtract, register
  int inverter = 6;    // FX2FP, bit hack, three multiplies and a subtract, output
  int predictor = 1;   // log-domain multiply-accumulate
  int norm_post = 2;   // subtract-multiply, affine
  int bypass = 1;      // pass-through of a skipped unit
};

struct AccelConfig {
  int p_d = 128;
  int p_n = 128;
  datapath::Config datapath = datapath::Config::for_format(NumericFormat::fp16());
  std::optional<std::size_t> n_sub;  // statistics over the first n_sub elements
  bool full_length_mean = false;
  int pipeline_depth = 1;  // replicated normalization units
  std::int64_t clock_hz = 100'000'000;
  StageLatency latency;

  void validate() const;
  std::size_t stats_length(std::size_t n) const;
};

struct LayerSpec {
  NormKind kind = NormKind::kLayerNorm;
  IsdMode mode = IsdMode::kCompute;
  std::vector<double> alpha;  // empty: all ones
  std::vector<double> beta;   // empty: all zeros
};

/// The library-side NormConfig equivalent to one simulated layer.
NormConfig make_norm_config(const LayerSpec& layer, const AccelConfig& cfg, std::size_t n);

// ---------------------------------------------------------------------------
// Closed-form timing

struct StageCycles {
  Cycles stats = 1;
  Cycles inverter = 1;
  Cycles norm = 1;

  Cycles sum() const { return stats + inverter + norm; }
  friend bool operator==(const StageCycles&, const StageCycles&) = default;
};

/// ceil(log2 lanes); 0 for a single lane.
int tree_depth(int lanes);

/// ceil(n_eff / p_d) + ceil(log2 p_d) + C_stats.
Cycles stats_stage_cycles(std::size_t n_eff, const AccelConfig& cfg);
Cycles norm_stage_cycles(std::size_t n, const AccelConfig& cfg);
StageCycles layer_stage_cycles(std::size_t n, NormKind kind, IsdMode mode,
                               const AccelConfig& cfg);

/// Steady-state initiation interval max(stats, inverter, ceil(norm / depth)).
Cycles initiation_interval(const StageCycles& c, int depth);

/// Total cycles of `batch` identical samples through the three-stage pipeline
/// with `depth` normalization units. For depth 1 this is
/// sum + (batch - 1) * max(stage).
Cycles closed_form_total(const StageCycles& c, std::size_t batch, int depth);

// ---------------------------------------------------------------------------
// Event-driven scheduler

struct SampleTiming {
  std::size_t sample = 0;
  Cycles stats_start = 0, stats_end = 0;
  Cycles inv_start = 0, inv_end = 0;
  Cycles norm_start = 0, norm_end = 0;
  int norm_unit = 0;
};

struct Event {
  Cycles cycle = 0;
  std::string unit;
  std::size_t sample = 0;
  int layer = 0;
  std::string event;  // "start" | "end"
};

struct Schedule {
  std::vector<SampleTiming> samples;
  Cycles end_cycle = 0;
  std::vector<Event> events;
};

/// Discrete-event simulation: FIFO queues per stage, one stats unit, one
/// inverter, `depth` normalization units; a stage starts as soon as its unit
/// is free and the previous stage of the same sample has ended.
Schedule schedule_pipeline(std::span<const StageCycles> per_sample, int depth, int layer,
                           Cycles start_cycle, const std::string& inverter_unit = "inverter");

/// True if every sample's stages are ordered and no unit is double-booked.
bool audit_schedule(const Schedule& schedule, int depth);

// ---------------------------------------------------------------------------
// Stage models

struct StatsStageResult {
  InputStats stats;
  datapath::FixedStats fixed;
  Cycles cycles = 0;
  Cycles passes = 0;
};

/// Streams ceil(n_eff / p_d) passes of p_d lanes (zero-padded) through the
/// two adder trees.
StatsStageResult sim_stats_stage(std::span<const Raw> lanes, NormKind kind,
                                 const AccelConfig& cfg, datapath::Diagnostics& diag);
StatsStageResult sim_stats_stage(std::span<const double> z, NormKind kind,
                                 const AccelConfig& cfg);

struct InverterStageResult {
  Raw isd = 0;
  double isd_value = 0.0;
  Cycles cycles = 0;
  bool bypassed = false;
};

/// Throws Error(kZeroVariance) for a zero variance.
InverterStageResult sim_invsqrt_stage(Raw variance, const AccelConfig& cfg,
                                      datapath::Diagnostics& diag);
/// Predicted-mode replacement of the inverter: one predictor cycle.
InverterStageResult sim_predictor_stage(double predicted_isd, const AccelConfig& cfg,
                                        datapath::Diagnostics& diag);

struct NormStageResult {
  std::vector<double> output;
  Cycles cycles = 0;
};

NormStageResult sim_norm_stage(std::span<const Raw> lanes, Raw mean, Raw isd,
                               std::span<const Raw> alpha, std::span<const Raw> beta,
                               NormKind kind, const AccelConfig& cfg,
                               datapath::Diagnostics& diag);

// ---------------------------------------------------------------------------
// Layers and whole traces

struct LayerReport {
  int layer = 0;
  std::string label;
  NormKind kind = NormKind::kLayerNorm;
  IsdMode mode = IsdMode::kCompute;
  StageCycles stage;
  Cycles initiation_interval = 0;
  Cycles start_cycle = 0;
  Cycles total_cycles = 0;  // from the event-driven schedule
  Cycles closed_form_cycles = 0;
  std::vector<SampleTiming> timing;
  std::vector<std::vector<double>> outputs;
  std::vector<double> isd;  // decoded ISD applied per sample
  datapath::Diagnostics diagnostics;
};

/// Runs one layer over a batch of vectors. `predicted_isd` must hold one value
/// per sample when layer.mode is Predicted.
LayerReport sim_layer(std::span<const std::vector<double>> batch, const LayerSpec& layer,
                      const AccelConfig& cfg, std::span<const double> predicted_isd = {},
                      int layer_index = 0, Cycles start_cycle = 0,
                      std::vector<Event>* events = nullptr);

struct ModelPlan {
  NormKind kind = NormKind::kLayerNorm;
  std::optional<IsdPredictor> predictor;
};

struct SimReport {
  std::string model_id;
  Cycles total_cycles = 0;
  std::size_t vectors = 0;
  double throughput = 0.0;  // vectors per cycle
  double latency_seconds = 0.0;
  std::vector<LayerReport> layers;
  datapath::Diagnostics diagnostics;
  std::uint64_t output_digest = 0;
  std::vector<Event> events;
};

/// Layers run back to back in execution order; predicted layers take their
/// anchor from layer skip_start of the same sample.
SimReport sim_trace(const ActivationTrace& trace, const ModelPlan& plan, const AccelConfig& cfg,
                    bool record_events = false, bool keep_outputs = false);

// ---------------------------------------------------------------------------
// Memory layout

struct MemoryEntry {
  Cycles cycle = 0;
  std::size_t address = 0;
  std::size_t first_element = 0;
  std::size_t valid_lanes = 0;  // lanes [0, valid_lanes) carry data
};

struct MemorySchedule {
  std::size_t entry_width = 0;
  std::size_t entry_count = 0;
  std::vector<MemoryEntry> stats_reads;
  std::vector<MemoryEntry> norm_reads;
};

/// One entry of `entry_width` elements per cycle over the flattened
/// rows x cols sample; statistics touch only ceil(n_sub / entry_width)
/// leading entries.
MemorySchedule sim_memory_stream(std::size_t rows, std::size_t cols, std::size_t entry_width,
                                 std::optional<std::size_t> n_sub = std::nullopt);

/// CSV `cycle,unit,sample,layer,event`.
void write_events_csv(std::span<const Event> events, std::ostream& os);
/// Latest end cycle in an event log.
Cycles replay_events_csv(std::istream& is);

}  // namespace haan::sim
