// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include "haan/accel_sim.hpp"
#include "haan/tools/commands.hpp"
#include "haan/tools/documents.hpp"

namespace haan::tools {

namespace {

Json sim_report_json(const sim::SimReport& rep, const RunConfig& cfg,
                     const std::string& trace_digest, const sim::ModelPlan& plan) {
  Json doc;
  doc["schema_version"] = 1;
  doc["model_id"] = rep.model_id;
  doc["trace_digest"] = trace_digest;
  doc["config"] = cfg.to_json();
  if (plan.predictor) {
    doc["predictor"] = {{"skip_start", plan.predictor->skip_start},
                        {"skip_end", plan.predictor->skip_end},
                        {"decay", plan.predictor->decay}};
  } else {
    doc["predictor"] = nullptr;
  }
  doc["total_cycles"] = rep.total_cycles;
  doc["vectors"] = rep.vectors;
  doc["throughput"] = rep.throughput;
  doc["latency_seconds"] = rep.latency_seconds;
  doc["output_digest"] = hex64(rep.output_digest);
  doc["diagnostics"] = {{"saturations", rep.diagnostics.saturations},
                        {"variance_clamps", rep.diagnostics.variance_clamps}};
  Json layers = Json::array();
  for (const auto& l : rep.layers) {
    Json j;
    j["layer"] = l.layer;
    j["label"] = l.label;
    j["mode"] = to_string(l.mode);
    j["stats_cycles"] = l.stage.stats;
    j["invsqrt_cycles"] = l.stage.inverter;
    j["norm_cycles"] = l.stage.norm;
    j["initiation_interval"] = l.initiation_interval;
    j["start_cycle"] = l.start_cycle;
    j["total_cycles"] = l.total_cycles;
    j["closed_form_cycles"] = l.closed_form_cycles;
    j["saturations"] = l.diagnostics.saturations;
    j["variance_clamps"] = l.diagnostics.variance_clamps;
    Json samples = Json::array();
    for (const auto& t : l.timing) {
      samples.push_back(Json::array({t.sample, t.stats_start, t.stats_end, t.inv_start, t.inv_end,
                                     t.norm_start, t.norm_end, t.norm_unit}));
    }
    j["timing_columns"] = Json::array({"sample", "stats_start", "stats_end", "invsqrt_start",
                                       "invsqrt_end", "norm_start", "norm_end", "norm_unit"});
    j["timing"] = std::move(samples);
    layers.push_back(std::move(j));
  }
  doc["layers"] = std::move(layers);
  return doc;
}

sim::ModelPlan make_plan(const RunConfig& cfg, const std::optional<fs::path>& predictor,
                         const ActivationTrace& trace) {
  sim::ModelPlan plan;
  plan.kind = cfg.kind;
  if (predictor) {
    plan.predictor = PredictorDocument::load(*predictor).predictor;
    plan.predictor->validate(static_cast<int>(trace.layer_count), 1);
  }
  return plan;
}

// The first compute-mode layer's stage cycles, else layer 0's.
const sim::LayerReport& representative_layer(const sim::SimReport& rep) {
  for (const auto& l : rep.layers) {
    if (l.mode == IsdMode::kCompute) return l;
  }
  return rep.layers.front();
}

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct GridPoint {
  int p_d = 0;
  int p_n = 0;
  std::string format;
  std::optional<std::size_t> n_sub;

  auto key() const { return std::make_tuple(p_d, p_n, format, n_sub ? *n_sub : 0); }
};

std::vector<GridPoint> parse_grid(const Json& doc, const RunConfig& base, std::ostream& err) {
  if (!doc.is_object()) fail(ErrorCode::kUsage, "grid document must be a JSON object");
  GridPoint def{base.accel.p_d, base.accel.p_n, to_string(base.format.kind), base.n_sub};
  std::vector<GridPoint> raw;

  auto read_point = [&](const Json& p, GridPoint g) {
    if (p.contains("p_d")) g.p_d = p.at("p_d").get<int>();
    if (p.contains("p_n")) g.p_n = p.at("p_n").get<int>();
    if (p.contains("format")) g.format = p.at("format").get<std::string>();
    if (p.contains("n_sub")) {
      g.n_sub = p.at("n_sub").is_null() ? std::nullopt
                                        : std::optional<std::size_t>(p.at("n_sub").get<std::size_t>());
    }
    return g;
  };

  try {
    if (doc.contains("points")) {
      for (const auto& p : doc.at("points")) raw.push_back(read_point(p, def));
    } else {
      auto axis = [&](const char* key) {
        if (!doc.contains(key)) return Json::array({nullptr});
        const Json& a = doc.at(key);
        if (!a.is_array()) fail(ErrorCode::kUsage, std::string("grid axis '") + key + "' must be a list");
        return a;
      };
      const Json pd = axis("p_d"), pn = axis("p_n"), fm = axis("format"), ns = axis("n_sub");
      const bool any_axis = doc.contains("p_d") || doc.contains("p_n") ||
                            doc.contains("format") || doc.contains("n_sub");
      if (any_axis) {
        for (const auto& a : pd)
          for (const auto& b : pn)
            for (const auto& c : fm)
              for (const auto& d : ns) {
                GridPoint g = def;
                if (!a.is_null()) g.p_d = a.get<int>();
                if (!b.is_null()) g.p_n = b.get<int>();
                if (!c.is_null()) g.format = c.get<std::string>();
                if (doc.contains("n_sub")) {
                  g.n_sub = d.is_null() ? std::nullopt : std::optional<std::size_t>(d.get<std::size_t>());
                }
                raw.push_back(g);
              }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kUsage, std::string("grid document: ") + e.what());
  }
  if (raw.empty()) fail(ErrorCode::kUsage, "sweep grid is empty");

  std::vector<GridPoint> unique;
  std::map<decltype(raw.front().key()), std::size_t> seen;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto [it, fresh] = seen.emplace(raw[i].key(), unique.size());
    if (!fresh) {
      err << "warning: grid point " << i << " duplicates point " << it->second << "; skipped\n";
      continue;
    }
    unique.push_back(raw[i]);
  }
  return unique;
}

struct PointResult {
  bool ok = false;
  std::string message;
  sim::StageCycles stage;
  sim::Cycles ii = 0;
  sim::Cycles total = 0;
  double throughput = 0.0;
};

}  // namespace

int cmd_sim(const SimOptions& opt, std::ostream& out, std::ostream&) {
  const RunConfig cfg = opt.config ? RunConfig::load(*opt.config) : RunConfig{};
  const ActivationTrace trace = read_trace_file(opt.trace);
  cfg.norm_config(trace.embedding_dim, IsdMode::kCompute);  // rejects n_sub > N
  const sim::ModelPlan plan = make_plan(cfg, opt.predictor, trace);
  const bool events = opt.events.has_value();
  const auto rep = sim::sim_trace(trace, plan, cfg.accel, events);
  const std::string digest = hex64(fnv1a64(serialize_trace(trace)));
  write_text_file(opt.report, dump_json(sim_report_json(rep, cfg, digest, plan)));
  if (opt.events) {
    std::ofstream os(*opt.events, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorCode::kFormat, "cannot write " + opt.events->string());
    sim::write_events_csv(rep.events, os);
  }
  out << "total_cycles=" << rep.total_cycles << " vectors=" << rep.vectors
      << " throughput=" << real(rep.throughput) << " latency_s=" << real(rep.latency_seconds)
      << " output_digest=" << hex64(rep.output_digest) << "\n";
  return 0;
}

int cmd_sweep(const SweepOptions& opt, std::ostream& out, std::ostream& err) {
  const RunConfig base = opt.config ? RunConfig::load(*opt.config) : RunConfig{};
  const auto points = parse_grid(read_json_file(opt.grid), base, err);
  const ActivationTrace trace = read_trace_file(opt.trace);
  const sim::ModelPlan plan = make_plan(base, opt.predictor, trace);
  const std::string digest = hex64(fnv1a64(serialize_trace(trace)));
  fs::create_directories(opt.out);

  std::vector<PointResult> results(points.size());
  std::vector<std::string> reports(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      const GridPoint& g = points[i];
      PointResult& r = results[i];
      try {
        RunConfig cfg = base;
        const auto kind = parse_format_kind(g.format);
        cfg.set_format(kind == NumericFormat::Kind::kFixedPoint
                           ? NumericFormat::fixed(cfg.datapath.fixed)
                           : NumericFormat{kind, std::nullopt});
        cfg.accel.p_d = g.p_d;
        cfg.accel.p_n = g.p_n;
        cfg.n_sub = g.n_sub;
        cfg.accel.n_sub = g.n_sub;
        cfg.norm_config(trace.embedding_dim, IsdMode::kCompute);
        const auto rep = sim::sim_trace(trace, plan, cfg.accel);
        const auto& layer = representative_layer(rep);
        r.stage = layer.stage;
        r.ii = layer.initiation_interval;
        r.total = rep.total_cycles;
        r.throughput = rep.throughput;
        r.ok = true;
        reports[i] = dump_json(sim_report_json(rep, cfg, digest, plan));
      } catch (const Error& e) {
        r.message = e.what();
      } catch (const std::exception& e) {
        r.message = e.what();
      }
    }
  };
  unsigned jobs = opt.jobs > 0 ? static_cast<unsigned>(opt.jobs)
                               : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(points.size()));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
  }

  char name[32];
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!results[i].ok) {
      err << "warning: grid point " << i << " failed: " << results[i].message << "\n";
      continue;
    }
    std::snprintf(name, sizeof name, "point_%03zu.json", i);
    write_text_file(opt.out / name, reports[i]);
  }

  std::vector<std::size_t> order(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (results[a].ok != results[b].ok) return results[a].ok;
    return results[a].ok && results[a].total < results[b].total;
  });
  std::optional<std::size_t> balanced;
  auto imbalance = [&](std::size_t i) {
    const auto d = results[i].stage.stats - results[i].stage.norm;
    return d < 0 ? -d : d;
  };
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!results[i].ok) continue;
    if (!balanced || std::make_tuple(results[i].ii, imbalance(i)) <
                         std::make_tuple(results[*balanced].ii, imbalance(*balanced))) {
      balanced = i;
    }
  }

  std::ostringstream csv;
  csv << "rank,point,p_d,p_n,format,n_sub,stats_cycles,invsqrt_cycles,norm_cycles,"
         "initiation_interval,total_cycles,throughput,balanced,status,message\n";
  std::size_t rank = 0;
  for (std::size_t i : order) {
    const GridPoint& g = points[i];
    const PointResult& r = results[i];
    csv << ++rank << ',' << i << ',' << g.p_d << ',' << g.p_n << ',' << g.format << ','
        << (g.n_sub ? std::to_string(*g.n_sub) : std::string()) << ',';
    if (r.ok) {
      csv << r.stage.stats << ',' << r.stage.inverter << ',' << r.stage.norm << ',' << r.ii << ','
          << r.total << ',' << real(r.throughput) << ',' << (balanced == i ? 1 : 0) << ",ok,\n";
    } else {
      std::string msg = r.message;
      std::replace(msg.begin(), msg.end(), '"', '\'');
      csv << ",,,,,,0,error,\"" << msg << "\"\n";
    }
  }
  write_text_file(opt.out / "summary.csv", csv.str());

  out << "points=" << points.size();
  if (balanced) {
    const GridPoint& g = points[*balanced];
    out << " balanced=point_" << *balanced << " (p_d=" << g.p_d << " p_n=" << g.p_n
        << " format=" << g.format << " ii=" << results[*balanced].ii << ")";
  }
  out << "\n";
  return balanced ? 0 : exit_code_for(ErrorCode::kConfig);
}

}  // namespace haan::tools
