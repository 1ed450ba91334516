// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "haan/norm_core.hpp"
#include "haan/tools/commands.hpp"
#include "haan/tools/documents.hpp"

namespace haan::tools {

namespace {

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// RFC 4180 quoting for free-text fields.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

int cmd_norm(const NormOptions& opt, std::ostream& out, std::ostream&) {
  RunConfig cfg = opt.config ? RunConfig::load(*opt.config) : RunConfig{};
  if (opt.kind) cfg.kind = parse_norm_kind(*opt.kind);
  if (opt.format) {
    const auto kind = parse_format_kind(*opt.format);
    cfg.set_format(kind == NumericFormat::Kind::kFixedPoint ? NumericFormat::fixed(cfg.datapath.fixed)
                                                            : NumericFormat{kind, std::nullopt});
  }
  if (opt.n_sub) {
    if (*opt.n_sub == 0) fail(ErrorCode::kUsage, "--nsub must be positive");
    cfg.n_sub = opt.n_sub;
  }

  const ActivationTrace trace = read_trace_file(opt.trace);
  std::optional<IsdPredictor> predictor;
  if (opt.predictor) {
    predictor = PredictorDocument::load(*opt.predictor).predictor;
    predictor->validate(static_cast<int>(trace.layer_count), 1);
  }

  const std::size_t n = trace.embedding_dim;
  const NormConfig compute_cfg = cfg.norm_config(n, IsdMode::kCompute);
  const NormConfig predicted_cfg = cfg.norm_config(n, IsdMode::kPredicted);
  const NormConfig ref_cfg = NormConfig::identity(cfg.kind, n);

  std::ostringstream csv;
  csv << "layer,label,mode,samples,max_rel_error,mean_rel_error,max_isd_rel_error,"
         "mean_isd_rel_error,saturations,variance_clamps\n";
  std::vector<double> anchor(trace.sample_count, 0.0);
  double worst = 0.0;
  double isd_sum = 0.0;
  double predicted_isd_worst = 0.0;
  std::size_t vectors = 0;

  for (std::size_t l = 0; l < trace.layer_count; ++l) {
    const int li = static_cast<int>(l);
    const bool predicted = predictor && predictor->predicts(li);
    double max_err = 0.0, sum_err = 0.0, max_isd = 0.0, sum_isd = 0.0;
    datapath::Diagnostics diag;
    for (std::size_t s = 0; s < trace.sample_count; ++s) {
      const auto z = trace.vector_f64(s, l);
      const auto ref = reference_normalize(z, ref_cfg);
      const double ref_isd = reference_isd(z, cfg.kind);
      LayerResult r;
      if (predicted) {
        const double isd =
            predict_isd(*predictor, anchor_isd(*predictor, anchor[s]), li);
        r = normalize_layer(z, predicted_cfg, isd);
      } else {
        r = normalize_layer(z, compute_cfg);
      }
      if (predictor && li == predictor->skip_start) anchor[s] = r.isd;
      const double e = relative_error(r.output, ref);
      const double ie = std::fabs(r.isd - ref_isd) / ref_isd;
      max_err = std::max(max_err, e);
      sum_err += e;
      max_isd = std::max(max_isd, ie);
      sum_isd += ie;
      diag += r.diagnostics;
    }
    const auto count = static_cast<double>(trace.sample_count);
    worst = std::max(worst, max_err);
    isd_sum += sum_isd;
    vectors += trace.sample_count;
    if (predicted) predicted_isd_worst = std::max(predicted_isd_worst, max_isd);
    const std::string label = l < trace.layer_labels.size() ? trace.layer_labels[l] : "";
    csv << l << ',' << csv_field(label) << ',' << (predicted ? "predicted" : "compute") << ','
        << trace.sample_count << ',' << real(max_err) << ',' << real(sum_err / count) << ','
        << real(max_isd) << ',' << real(sum_isd / count) << ',' << diag.saturations << ','
        << diag.variance_clamps << '\n';
  }
  write_text_file(opt.report, csv.str());

  out << "format=" << to_string(cfg.format.kind) << " kind=" << to_string(cfg.kind)
      << " n_sub=" << compute_cfg.n_sub << " max_rel_error=" << real(worst)
      << " mean_isd_rel_error=" << real(vectors ? isd_sum / static_cast<double>(vectors) : 0.0);
  if (predictor) out << " predicted_max_isd_rel_error=" << real(predicted_isd_worst);
  out << "\n";
  return 0;
}

}  // namespace haan::tools
