// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#include "haan/accel_sim.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>
#include <tuple>

#include "haan/error.hpp"

namespace haan::sim {

namespace {

Cycles ceil_div(std::size_t a, std::size_t b) {
  return static_cast<Cycles>((a + b - 1) / b);
}

}  // namespace

void AccelConfig::validate() const {
  if (p_d < 8 || p_n < 8) fail(ErrorCode::kConfig, "lane widths p_d and p_n must be >= 8");
  if (pipeline_depth < 1) fail(ErrorCode::kConfig, "pipeline_depth must be >= 1");
  if (clock_hz <= 0) fail(ErrorCode::kConfig, "clock_hz must be positive");
  if (n_sub && *n_sub == 0) fail(ErrorCode::kConfig, "n_sub must be positive");
  const StageLatency& l = latency;
  if (l.stats_post < 0 || l.inverter < 1 || l.predictor < 1 || l.norm_post < 0 || l.bypass < 1) {
    fail(ErrorCode::kConfig, "stage latencies out of range");
  }
  if (!datapath.input.is_hardware()) {
    fail(ErrorCode::kConfig, "the accelerator has no " + to_string(datapath.input.kind) + " datapath");
  }
  datapath.validate();
}

std::size_t AccelConfig::stats_length(std::size_t n) const {
  return n_sub ? std::min(*n_sub, n) : n;
}

NormConfig make_norm_config(const LayerSpec& layer, const AccelConfig& cfg, std::size_t n) {
  NormConfig nc;
  nc.kind = layer.kind;
  nc.n = n;
  nc.alpha = layer.alpha.empty() ? std::vector<double>(n, 1.0) : layer.alpha;
  nc.beta = layer.beta.empty() ? std::vector<double>(n, 0.0) : layer.beta;
  nc.format = cfg.datapath.input;
  nc.n_sub = cfg.stats_length(n);
  nc.isd_mode = layer.mode;
  nc.full_length_mean = cfg.full_length_mean;
  nc.datapath_config = cfg.datapath;
  return nc;
}

// ---------------------------------------------------------------------------
// Closed-form timing

int tree_depth(int lanes) {
  if (lanes < 1) fail(ErrorCode::kConfig, "tree_depth: lanes must be positive");
  return static_cast<int>(std::bit_width(static_cast<unsigned>(lanes - 1)));
}

Cycles stats_stage_cycles(std::size_t n_eff, const AccelConfig& cfg) {
  if (n_eff == 0) fail(ErrorCode::kConfig, "statistics over zero elements");
  return ceil_div(n_eff, static_cast<std::size_t>(cfg.p_d)) + tree_depth(cfg.p_d) +
         cfg.latency.stats_post;
}

Cycles norm_stage_cycles(std::size_t n, const AccelConfig& cfg) {
  if (n == 0) fail(ErrorCode::kConfig, "normalization over zero elements");
  return ceil_div(n, static_cast<std::size_t>(cfg.p_n)) + cfg.latency.norm_post;
}

StageCycles layer_stage_cycles(std::size_t n, NormKind kind, IsdMode mode,
                               const AccelConfig& cfg) {
  StageCycles c;
  std::size_t n_eff = cfg.stats_length(n);
  if (kind == NormKind::kLayerNorm && cfg.full_length_mean) n_eff = n;
  if (kind == NormKind::kRMSNorm && mode == IsdMode::kPredicted) {
    c.stats = cfg.latency.bypass;
  } else {
    c.stats = stats_stage_cycles(n_eff, cfg);
  }
  c.inverter = mode == IsdMode::kPredicted ? cfg.latency.predictor : cfg.latency.inverter;
  c.norm = norm_stage_cycles(n, cfg);
  return c;
}

Cycles initiation_interval(const StageCycles& c, int depth) {
  if (depth < 1) fail(ErrorCode::kConfig, "pipeline depth must be >= 1");
  const Cycles norm_ii = (c.norm + depth - 1) / depth;
  return std::max({c.stats, c.inverter, norm_ii});
}

Cycles closed_form_total(const StageCycles& c, std::size_t batch, int depth) {
  if (depth < 1) fail(ErrorCode::kConfig, "pipeline depth must be >= 1");
  if (batch == 0) return 0;
  const Cycles s = static_cast<Cycles>(batch) - 1;
  const Cycles u = std::max(c.stats, c.inverter);
  const Cycles m = s / depth;
  return c.sum() + std::max(s * u, (s - m * depth) * u + m * c.norm);
}

// ---------------------------------------------------------------------------
// Event-driven scheduler

namespace {

enum class Stage { kStats = 0, kInverter = 1, kNorm = 2 };

struct Completion {
  Cycles time;
  std::uint64_t seq;
  Stage stage;
  std::size_t sample;
  int unit;

  bool operator>(const Completion& o) const {
    return std::tie(time, seq) > std::tie(o.time, o.seq);
  }
};

}  // namespace

Schedule schedule_pipeline(std::span<const StageCycles> per_sample, int depth, int layer,
                           Cycles start_cycle, const std::string& inverter_unit) {
  if (depth < 1) fail(ErrorCode::kConfig, "pipeline depth must be >= 1");
  for (const auto& c : per_sample) {
    if (c.stats < 1 || c.inverter < 1 || c.norm < 1) {
      fail(ErrorCode::kConfig, "every stage takes at least one cycle");
    }
  }

  Schedule out;
  out.samples.resize(per_sample.size());
  out.end_cycle = start_cycle;
  std::deque<std::size_t> stats_q, inv_q, norm_q;
  for (std::size_t i = 0; i < per_sample.size(); ++i) {
    out.samples[i].sample = i;
    stats_q.push_back(i);
  }
  bool stats_busy = false;
  bool inv_busy = false;
  std::vector<bool> norm_busy(static_cast<std::size_t>(depth), false);
  std::priority_queue<Completion, std::vector<Completion>, std::greater<>> pending;
  std::uint64_t seq = 0;

  auto emit = [&](Cycles t, const std::string& unit, std::size_t sample, const char* what) {
    out.events.push_back({t, unit, sample, layer, what});
  };

  auto dispatch = [&](Cycles now) {
    if (!stats_busy && !stats_q.empty()) {
      const std::size_t s = stats_q.front();
      stats_q.pop_front();
      stats_busy = true;
      out.samples[s].stats_start = now;
      pending.push({now + per_sample[s].stats, seq++, Stage::kStats, s, 0});
      emit(now, "stats", s, "start");
    }
    if (!inv_busy && !inv_q.empty()) {
      const std::size_t s = inv_q.front();
      inv_q.pop_front();
      inv_busy = true;
      out.samples[s].inv_start = now;
      pending.push({now + per_sample[s].inverter, seq++, Stage::kInverter, s, 0});
      emit(now, inverter_unit, s, "start");
    }
    for (int u = 0; u < depth && !norm_q.empty(); ++u) {
      if (norm_busy[static_cast<std::size_t>(u)]) continue;
      const std::size_t s = norm_q.front();
      norm_q.pop_front();
      norm_busy[static_cast<std::size_t>(u)] = true;
      out.samples[s].norm_start = now;
      out.samples[s].norm_unit = u;
      pending.push({now + per_sample[s].norm, seq++, Stage::kNorm, s, u});
      emit(now, "norm" + std::to_string(u), s, "start");
    }
  };

  dispatch(start_cycle);
  while (!pending.empty()) {
    const Cycles now = pending.top().time;
    while (!pending.empty() && pending.top().time == now) {
      const Completion c = pending.top();
      pending.pop();
      auto& t = out.samples[c.sample];
      switch (c.stage) {
        case Stage::kStats:
          stats_busy = false;
          t.stats_end = now;
          inv_q.push_back(c.sample);
          emit(now, "stats", c.sample, "end");
          break;
        case Stage::kInverter:
          inv_busy = false;
          t.inv_end = now;
          norm_q.push_back(c.sample);
          emit(now, inverter_unit, c.sample, "end");
          break;
        case Stage::kNorm:
          norm_busy[static_cast<std::size_t>(c.unit)] = false;
          t.norm_end = now;
          out.end_cycle = std::max(out.end_cycle, now);
          emit(now, "norm" + std::to_string(c.unit), c.sample, "end");
          break;
      }
    }
    dispatch(now);
  }
  return out;
}

bool audit_schedule(const Schedule& schedule, int depth) {
  using Interval = std::pair<Cycles, Cycles>;
  std::vector<Interval> stats, inv;
  std::vector<std::vector<Interval>> norm(static_cast<std::size_t>(std::max(depth, 1)));
  for (const auto& t : schedule.samples) {
    if (!(t.stats_start < t.stats_end && t.stats_end <= t.inv_start && t.inv_start < t.inv_end &&
          t.inv_end <= t.norm_start && t.norm_start < t.norm_end)) {
      return false;
    }
    if (t.norm_unit < 0 || t.norm_unit >= depth) return false;
    stats.emplace_back(t.stats_start, t.stats_end);
    inv.emplace_back(t.inv_start, t.inv_end);
    norm[static_cast<std::size_t>(t.norm_unit)].emplace_back(t.norm_start, t.norm_end);
  }
  auto disjoint = [](std::vector<Interval> v) {
    std::sort(v.begin(), v.end());
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (v[i].first < v[i - 1].second) return false;
    }
    return true;
  };
  if (!disjoint(stats) || !disjoint(inv)) return false;
  return std::all_of(norm.begin(), norm.end(), disjoint);
}

// ---------------------------------------------------------------------------
// Stage models

namespace {

// One cycle of the adder trees: pairwise reduction of p_d lanes.
datapath::StatsRegisters tree_reduce(std::vector<datapath::StatsRegisters> level,
                                     datapath::Diagnostics& diag) {
  while (level.size() > 1) {
    std::vector<datapath::StatsRegisters> next((level.size() + 1) / 2);
    for (std::size_t i = 0; i < level.size(); i += 2) {
      next[i / 2] = level[i];
      if (i + 1 < level.size()) next[i / 2].merge(level[i + 1], diag);
    }
    level = std::move(next);
  }
  return level.front();
}

// Streams lanes[0, count) through the trees; zero lanes pad the last pass.
datapath::StatsRegisters stream_passes(std::span<const Raw> lanes, std::size_t count,
                                       const datapath::Reciprocal* inv_n,
                                       const AccelConfig& cfg, datapath::Diagnostics& diag,
                                       Cycles* passes) {
  const auto p = static_cast<std::size_t>(cfg.p_d);
  datapath::StatsRegisters acc;
  std::vector<datapath::StatsRegisters> level(p);
  Cycles n_passes = 0;
  for (std::size_t base = 0; base < count; base += p, ++n_passes) {
    for (std::size_t j = 0; j < p; ++j) {
      const std::size_t i = base + j;
      level[j] = {};
      if (i < count) {
        level[j].sum = lanes[i];
        level[j].sum_sq = inv_n ? datapath::square_term(lanes[i], *inv_n, cfg.datapath, diag) : 0;
      }
    }
    acc.merge(tree_reduce(level, diag), diag);
  }
  if (passes) *passes = n_passes;
  return acc;
}

}  // namespace

StatsStageResult sim_stats_stage(std::span<const Raw> lanes, NormKind kind,
                                 const AccelConfig& cfg, datapath::Diagnostics& diag) {
  const std::size_t n = lanes.size();
  const std::size_t n_stats = cfg.stats_length(n);
  const std::size_t n_mean =
      kind == NormKind::kLayerNorm && cfg.full_length_mean ? n : n_stats;
  const int f = cfg.datapath.lane_frac();
  const auto inv_n = datapath::Reciprocal::of(static_cast<std::int64_t>(n_stats), f);

  StatsStageResult r;
  const auto regs = stream_passes(lanes, n_stats, &inv_n, cfg, diag, &r.passes);
  if (n_mean == n_stats || kind == NormKind::kRMSNorm) {
    r.fixed = datapath::finalize_stats(regs, inv_n, regs, inv_n, kind, 0.0, cfg.datapath, diag);
  } else {
    Cycles mean_passes = 0;
    const auto mean_regs = stream_passes(lanes, n_mean, nullptr, cfg, diag, &mean_passes);
    r.passes = std::max(r.passes, mean_passes);
    const auto inv_mean = datapath::Reciprocal::of(static_cast<std::int64_t>(n_mean), f);
    r.fixed =
        datapath::finalize_stats(regs, inv_n, mean_regs, inv_mean, kind, 0.0, cfg.datapath, diag);
  }
  r.cycles = r.passes + tree_depth(cfg.p_d) + cfg.latency.stats_post;
  r.stats.mean = datapath::decode_mean(r.fixed.mean, cfg.datapath);
  r.stats.variance = datapath::decode_variance(r.fixed.variance, cfg.datapath);
  r.stats.variance_clamped = r.fixed.clamped;
  r.stats.sample_count = n_stats;
  r.stats.fixed = r.fixed;
  return r;
}

StatsStageResult sim_stats_stage(std::span<const double> z, NormKind kind,
                                 const AccelConfig& cfg) {
  cfg.validate();
  datapath::Diagnostics diag;
  const auto lanes = datapath::ingress(z, cfg.datapath, diag);
  return sim_stats_stage(lanes, kind, cfg, diag);
}

InverterStageResult sim_invsqrt_stage(Raw variance, const AccelConfig& cfg,
                                      datapath::Diagnostics& diag) {
  InverterStageResult r;
  r.isd = datapath::invert(variance, cfg.datapath, diag);
  r.isd_value = datapath::decode_isd(r.isd, cfg.datapath);
  r.cycles = cfg.latency.inverter;
  return r;
}

InverterStageResult sim_predictor_stage(double predicted_isd, const AccelConfig& cfg,
                                        datapath::Diagnostics& diag) {
  InverterStageResult r;
  r.isd = datapath::encode_isd(predicted_isd, cfg.datapath, diag);
  r.isd_value = datapath::decode_isd(r.isd, cfg.datapath);
  r.cycles = cfg.latency.predictor;
  r.bypassed = true;
  return r;
}

NormStageResult sim_norm_stage(std::span<const Raw> lanes, Raw mean, Raw isd,
                               std::span<const Raw> alpha, std::span<const Raw> beta,
                               NormKind kind, const AccelConfig& cfg,
                               datapath::Diagnostics& diag) {
  if (alpha.size() != lanes.size() || beta.size() != lanes.size()) {
    fail(ErrorCode::kDimensionMismatch, "normalization unit: alpha/beta length mismatch");
  }
  const Raw mu = kind == NormKind::kLayerNorm ? mean : 0;
  const auto p = static_cast<std::size_t>(cfg.p_n);
  NormStageResult r;
  r.output.resize(lanes.size());
  Cycles passes = 0;
  for (std::size_t base = 0; base < lanes.size(); base += p, ++passes) {
    const std::size_t stop = std::min(base + p, lanes.size());
    for (std::size_t i = base; i < stop; ++i) {
      r.output[i] = datapath::egress(
          datapath::normalize_element(lanes[i], mu, isd, alpha[i], beta[i], cfg.datapath, diag),
          cfg.datapath);
    }
  }
  r.cycles = passes + cfg.latency.norm_post;
  return r;
}

// ---------------------------------------------------------------------------
// Layers

LayerReport sim_layer(std::span<const std::vector<double>> batch, const LayerSpec& layer,
                      const AccelConfig& cfg, std::span<const double> predicted_isd,
                      int layer_index, Cycles start_cycle, std::vector<Event>* events) {
  cfg.validate();
  if (batch.empty()) fail(ErrorCode::kConfig, "sim_layer: empty batch");
  const std::size_t n = batch.front().size();
  const NormConfig nc = make_norm_config(layer, cfg, n);
  nc.validate();
  const bool predicted = layer.mode == IsdMode::kPredicted;
  if (predicted && predicted_isd.size() != batch.size()) {
    fail(ErrorCode::kDimensionMismatch, "sim_layer: one predicted ISD per sample required");
  }

  LayerReport rep;
  rep.layer = layer_index;
  rep.kind = layer.kind;
  rep.mode = layer.mode;
  rep.start_cycle = start_cycle;
  rep.stage = layer_stage_cycles(n, layer.kind, layer.mode, cfg);

  std::vector<StageCycles> per_sample;
  per_sample.reserve(batch.size());
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const auto& z = batch[s];
    if (z.size() != n) fail(ErrorCode::kDimensionMismatch, "sim_layer: ragged batch");
    datapath::Diagnostics& diag = rep.diagnostics;
    const auto lanes = datapath::ingress(z, cfg.datapath, diag);

    StageCycles c;
    Raw mean = 0;
    InverterStageResult inv;
    if (predicted) {
      if (layer.kind == NormKind::kLayerNorm) {
        const auto st = sim_stats_stage(lanes, layer.kind, cfg, diag);
        mean = st.fixed.mean;
        c.stats = st.cycles;
      } else {
        c.stats = cfg.latency.bypass;
      }
      inv = sim_predictor_stage(predicted_isd[s], cfg, diag);
    } else {
      const auto st = sim_stats_stage(lanes, layer.kind, cfg, diag);
      mean = st.fixed.mean;
      c.stats = st.cycles;
      inv = sim_invsqrt_stage(st.fixed.variance, cfg, diag);
    }
    c.inverter = inv.cycles;
    const auto alpha = datapath::encode_params(nc.alpha, cfg.datapath, diag);
    const auto beta = datapath::encode_params(nc.beta, cfg.datapath, diag);
    auto norm = sim_norm_stage(lanes, mean, inv.isd, alpha, beta, layer.kind, cfg, diag);
    c.norm = norm.cycles;
    per_sample.push_back(c);
    rep.isd.push_back(inv.isd_value);
    rep.outputs.push_back(std::move(norm.output));
  }

  auto schedule = schedule_pipeline(per_sample, cfg.pipeline_depth, layer_index, start_cycle,
                                    predicted ? "predictor" : "inverter");
  rep.timing = std::move(schedule.samples);
  rep.total_cycles = schedule.end_cycle - start_cycle;
  rep.closed_form_cycles = closed_form_total(rep.stage, batch.size(), cfg.pipeline_depth);
  rep.initiation_interval = initiation_interval(rep.stage, cfg.pipeline_depth);
  if (events) {
    events->insert(events->end(), std::make_move_iterator(schedule.events.begin()),
                   std::make_move_iterator(schedule.events.end()));
  }
  return rep;
}

SimReport sim_trace(const ActivationTrace& trace, const ModelPlan& plan, const AccelConfig& cfg,
                    bool record_events, bool keep_outputs) {
  trace.validate();
  cfg.validate();
  const auto layers = static_cast<int>(trace.layer_count);
  if (plan.predictor) plan.predictor->validate(layers, 1);

  SimReport rep;
  rep.model_id = trace.model_id;
  std::uint64_t digest = 0xcbf29ce484222325ULL;
  std::vector<double> anchor(trace.sample_count, 0.0);
  Cycles cycle = 0;

  for (int l = 0; l < layers; ++l) {
    const bool predicted = plan.predictor && plan.predictor->predicts(l);
    LayerSpec spec{plan.kind, predicted ? IsdMode::kPredicted : IsdMode::kCompute, {}, {}};
    std::vector<std::vector<double>> batch;
    batch.reserve(trace.sample_count);
    for (std::size_t s = 0; s < trace.sample_count; ++s) {
      batch.push_back(trace.vector_f64(s, static_cast<std::size_t>(l)));
    }
    std::vector<double> predicted_isd;
    if (predicted) {
      for (std::size_t s = 0; s < trace.sample_count; ++s) {
        predicted_isd.push_back(
            predict_isd(*plan.predictor, anchor_isd(*plan.predictor, anchor[s]), l));
      }
    }

    LayerReport lr = sim_layer(batch, spec, cfg, predicted_isd, l, cycle,
                               record_events ? &rep.events : nullptr);
    if (plan.predictor && l == plan.predictor->skip_start) anchor = lr.isd;
    lr.label = l < static_cast<int>(trace.layer_labels.size())
                   ? trace.layer_labels[static_cast<std::size_t>(l)]
                   : default_layer_label(static_cast<std::size_t>(l));
    for (const auto& out : lr.outputs) {
      digest = fnv1a64({reinterpret_cast<const std::uint8_t*>(out.data()),
                        out.size() * sizeof(double)},
                       digest);
    }
    cycle += lr.total_cycles;
    rep.diagnostics += lr.diagnostics;
    if (!keep_outputs) lr.outputs.clear();
    rep.layers.push_back(std::move(lr));
  }

  rep.total_cycles = cycle;
  rep.vectors = trace.sample_count * trace.layer_count;
  rep.throughput = cycle > 0 ? static_cast<double>(rep.vectors) / static_cast<double>(cycle) : 0.0;
  rep.latency_seconds = static_cast<double>(cycle) / static_cast<double>(cfg.clock_hz);
  rep.output_digest = digest;
  return rep;
}

// ---------------------------------------------------------------------------
// Memory layout

MemorySchedule sim_memory_stream(std::size_t rows, std::size_t cols, std::size_t entry_width,
                                 std::optional<std::size_t> n_sub) {
  if (rows == 0 || cols == 0 || entry_width == 0) {
    fail(ErrorCode::kConfig, "memory stream: rows, cols and entry width must be positive");
  }
  const std::size_t total = rows * cols;
  const std::size_t stats_len = n_sub ? std::min(*n_sub, total) : total;
  if (stats_len == 0) fail(ErrorCode::kConfig, "memory stream: n_sub must be positive");

  MemorySchedule m;
  m.entry_width = entry_width;
  m.entry_count = (total + entry_width - 1) / entry_width;
  auto stream = [&](std::size_t len, std::vector<MemoryEntry>& out) {
    Cycles cycle = 0;
    for (std::size_t first = 0; first < len; first += entry_width, ++cycle) {
      out.push_back({cycle, first / entry_width, first, std::min(entry_width, len - first)});
    }
  };
  stream(stats_len, m.stats_reads);
  stream(total, m.norm_reads);
  return m;
}

void write_events_csv(std::span<const Event> events, std::ostream& os) {
  os << "cycle,unit,sample,layer,event\n";
  for (const auto& e : events) {
    os << e.cycle << ',' << e.unit << ',' << e.sample << ',' << e.layer << ',' << e.event << '\n';
  }
}

Cycles replay_events_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "cycle,unit,sample,layer,event") {
    fail(ErrorCode::kFormat, "event log: missing header");
  }
  Cycles last = 0;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cycle, unit, sample, layer, what;
    if (!std::getline(ls, cycle, ',') || !std::getline(ls, unit, ',') ||
        !std::getline(ls, sample, ',') || !std::getline(ls, layer, ',') ||
        !std::getline(ls, what)) {
      fail(ErrorCode::kFormat, "event log: malformed row " + std::to_string(row));
    }
    Cycles c = 0;
    try {
      c = std::stoll(cycle);
    } catch (const std::exception&) {
      fail(ErrorCode::kFormat, "event log: bad cycle in row " + std::to_string(row));
    }
    if (what == "end") last = std::max(last, c);
  }
  return last;
}

}  // namespace haan::sim
