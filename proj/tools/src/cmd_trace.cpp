// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <fstream>
#include <ostream>

#include "haan/tools/commands.hpp"
#include "haan/tools/documents.hpp"

namespace haan::tools {

namespace {

SyntheticTraceSpec spec_from_json(const Json& doc, std::optional<std::uint64_t>& seed) {
  if (!doc.is_object()) fail(ErrorCode::kConfig, "trace spec must be a JSON object");
  SyntheticTraceSpec s;
  try {
    s.model_id = doc.value("model_id", s.model_id);
    s.layer_count = doc.value("layer_count", s.layer_count);
    s.embedding_dim = doc.value("embedding_dim", s.embedding_dim);
    s.sample_count = doc.value("sample_count", s.sample_count);
    s.noise_sigma = doc.value("noise_sigma", s.noise_sigma);
    s.exact_moments = doc.value("exact_moments", s.exact_moments);
    if (doc.contains("seed")) seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("profile")) {
      const Json& p = doc.at("profile");
      const auto type = p.at("type").get<std::string>();
      if (type == "log_linear_tail") {
        s.isd_profile = LogLinearTail{p.at("start").get<std::size_t>(),
                                      p.at("end").get<std::size_t>(), p.at("slope").get<double>()};
      } else if (type == "piecewise") {
        PiecewiseFromTable t;
        for (const auto& k : p.at("knots")) t.knots.emplace_back(k.at(0).get<double>(), k.at(1).get<double>());
        s.isd_profile = std::move(t);
      } else {
        fail(ErrorCode::kConfig, "profile.type must be log_linear_tail or piecewise");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, std::string("trace spec: ") + e.what());
  }
  return s;
}

std::uint64_t traces_digest(std::span<const ActivationTrace> traces) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : traces) h = fnv1a64(serialize_trace(t), h);
  return h;
}

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

int cmd_gen_trace(const GenTraceOptions& opt, std::ostream& out, std::ostream&) {
  SyntheticTraceSpec spec = opt.synth;
  std::optional<std::uint64_t> spec_seed;
  if (opt.spec) spec = spec_from_json(read_json_file(*opt.spec), spec_seed);
  spec.validate();
  const std::uint64_t seed = opt.seed ? *opt.seed : spec_seed ? *spec_seed : default_seed();
  const ActivationTrace trace = generate_synthetic(spec, seed);
  write_trace_file(trace, opt.out);
  out << "wrote " << opt.out.string() << ": " << trace.layer_count << " layers x "
      << trace.sample_count << " samples x N=" << trace.embedding_dim << " (seed " << seed
      << ", digest " << hex64(fnv1a64(serialize_trace(trace))) << ")\n";
  return 0;
}

int cmd_calibrate(const CalibrateOptions& opt, std::ostream& out, std::ostream& err) {
  if (opt.traces.empty()) fail(ErrorCode::kUsage, "calibrate: no trace given");
  std::vector<ActivationTrace> traces;
  for (const auto& p : opt.traces) {
    traces.push_back(read_trace_file(p));
    if (traces.back().layer_count < 2) {
      fail(ErrorCode::kUsage, p.string() + ": calibration needs at least two normalization layers");
    }
  }
  const auto result =
      run_calibration(traces, opt.kind, ScanOptions{opt.min_gap, opt.wide_windows});
  if (opt.isd_csv) {
    std::ofstream os(*opt.isd_csv, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorCode::kFormat, "cannot write " + opt.isd_csv->string());
    write_isd_csv(result.table, os);
  }

  PredictorDocument doc;
  doc.model_id = traces.front().model_id;
  doc.predictor = result.predictor;
  doc.predictor.anchor_policy = opt.anchor;
  doc.min_cor = result.min_cor;
  doc.min_gap = opt.min_gap;
  doc.trace_digest = hex64(traces_digest(traces));

  out << "skip_start=" << doc.predictor.skip_start << " skip_end=" << doc.predictor.skip_end
      << " decay=" << real(doc.predictor.decay) << " min_cor=" << real(doc.min_cor) << "\n";
  if (result.decay_degenerate) err << "warning: decay fit is degenerate\n";
  if (doc.min_cor > opt.threshold) {
    err << "error: min_cor " << real(doc.min_cor) << " exceeds the acceptance threshold "
        << real(opt.threshold) << "; no predictor written\n";
    return exit_code_for(ErrorCode::kNoValidRange);
  }
  write_text_file(opt.out, dump_json(doc.to_json()));
  return 0;
}

}  // namespace haan::tools
