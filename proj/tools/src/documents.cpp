// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#include "haan/tools/documents.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "haan/error.hpp"

namespace haan::tools {

namespace {

std::string format_real(double v) {
  if (!std::isfinite(v)) fail(ErrorCode::kDomain, "cannot serialize a non-finite real");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  // Keep reals recognizable as reals.
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

void emit(const Json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += inner + Json(it.key()).dump() + ": ";
        emit(it.value(), out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      const bool scalars = std::none_of(j.begin(), j.end(), [](const Json& e) {
        return e.is_object() || e.is_array();
      });
      if (scalars) {
        out += "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ", ";
          emit(j[i], out, indent + 1);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += inner;
        emit(j[i], out, indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case Json::value_t::number_float:
      out += format_real(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

// Typed accessors that report the JSON path of a bad field.
const Json* member(const Json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

[[noreturn]] void bad_field(const std::string& path, const std::string& what) {
  fail(ErrorCode::kConfig, "config field '" + path + "': " + what);
}

const Json& section(const Json& doc, const char* key) {
  static const Json kEmpty = Json::object();
  const Json* s = member(doc, key);
  if (!s) return kEmpty;
  if (!s->is_object()) bad_field(key, "expected an object");
  return *s;
}

std::optional<std::int64_t> get_int(const Json& obj, const std::string& sec, const char* key) {
  const Json* v = member(obj, key);
  if (!v) return std::nullopt;
  if (!v->is_number_integer()) bad_field(sec + "." + key, "expected an integer");
  return v->get<std::int64_t>();
}

std::optional<double> get_real(const Json& obj, const std::string& sec, const char* key) {
  const Json* v = member(obj, key);
  if (!v) return std::nullopt;
  if (!v->is_number()) bad_field(sec + "." + key, "expected a number");
  return v->get<double>();
}

std::optional<std::string> get_string(const Json& obj, const std::string& sec, const char* key) {
  const Json* v = member(obj, key);
  if (!v) return std::nullopt;
  if (!v->is_string()) bad_field(sec + "." + key, "expected a string");
  return v->get<std::string>();
}

std::optional<bool> get_bool(const Json& obj, const std::string& sec, const char* key) {
  const Json* v = member(obj, key);
  if (!v) return std::nullopt;
  if (!v->is_boolean()) bad_field(sec + "." + key, "expected true or false");
  return v->get<bool>();
}

template <class F>
auto parse_field(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    bad_field(path, e.what());
  }
}

void check_keys(const Json& obj, const std::string& sec, std::initializer_list<const char*> keys) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) bad_field(sec.empty() ? it.key() : sec + "." + it.key(), "unknown field");
  }
}

int to_int(std::int64_t v, const std::string& path) {
  if (v < INT32_MIN || v > INT32_MAX) bad_field(path, "out of range");
  return static_cast<int>(v);
}

}  // namespace

std::string dump_json(const Json& doc) {
  std::string out;
  emit(doc, out, 0);
  out += "\n";
  return out;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::kFormat, "cannot open " + path.string());
  try {
    return Json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorCode::kFormat, "cannot write " + path.string());
  os << text;
  if (!os) fail(ErrorCode::kFormat, "write failed: " + path.string());
}

std::uint64_t default_seed() {
  const char* env = std::getenv("HAAN_SEED");
  if (!env || !*env) return kDefaultSeed;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(env, &end, 0);
  if (errno != 0 || *end != '\0' || env[0] == '-') {
    fail(ErrorCode::kUsage, std::string("HAAN_SEED is not an unsigned integer: ") + env);
  }
  return v;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string to_string(Rounding rounding) {
  return rounding == Rounding::kNearestEven ? "nearest_even" : "truncate";
}

Rounding parse_rounding(const std::string& name) {
  if (name == "nearest_even") return Rounding::kNearestEven;
  if (name == "truncate") return Rounding::kTruncate;
  fail(ErrorCode::kConfig, "unknown rounding '" + name + "' (nearest_even|truncate)");
}

std::string to_string(FloatWidth width) {
  return width == FloatWidth::kFP32 ? "fp32" : "fp16";
}

FloatWidth parse_float_width(const std::string& name) {
  if (name == "fp32") return FloatWidth::kFP32;
  if (name == "fp16") return FloatWidth::kFP16;
  fail(ErrorCode::kConfig, "unknown float width '" + name + "' (fp32|fp16)");
}

// ---------------------------------------------------------------------------
// RunConfig

RunConfig RunConfig::from_json(const Json& doc) {
  if (!doc.is_object()) fail(ErrorCode::kConfig, "config document must be a JSON object");
  check_keys(doc, "", {"norm", "fixed_point", "invsqrt", "accel", "model"});
  RunConfig c;

  const Json& norm = section(doc, "norm");
  check_keys(norm, "norm", {"kind", "format", "n_sub", "epsilon", "full_length_mean"});
  if (auto v = get_string(norm, "norm", "kind")) {
    c.kind = parse_field("norm.kind", [&] { return parse_norm_kind(*v); });
  }
  auto kind = NumericFormat::Kind::kFP16;
  if (auto v = get_string(norm, "norm", "format")) {
    kind = parse_field("norm.format", [&] { return parse_format_kind(*v); });
  }
  if (auto v = get_int(norm, "norm", "n_sub")) {
    if (*v <= 0) bad_field("norm.n_sub", "must be positive");
    c.n_sub = static_cast<std::size_t>(*v);
  }
  if (auto v = get_real(norm, "norm", "epsilon")) {
    if (!(*v >= 0.0)) bad_field("norm.epsilon", "must be >= 0");
    c.epsilon = *v;
  }
  if (auto v = get_bool(norm, "norm", "full_length_mean")) c.full_length_mean = *v;

  const Json& fx = section(doc, "fixed_point");
  check_keys(fx, "fixed_point", {"total_bits", "frac_bits", "rounding", "guard_bits"});
  const FixedPointSpec base_spec =
      NumericFormat{kind, kind == NumericFormat::Kind::kFixedPoint
                              ? std::optional<FixedPointSpec>(kQ16_16)
                              : std::nullopt}
          .default_fixed_spec();
  FixedPointSpec spec = base_spec;
  if (auto v = get_int(fx, "fixed_point", "total_bits")) {
    spec.total_bits = to_int(*v, "fixed_point.total_bits");
    c.pinned_fixed = true;
  }
  if (auto v = get_int(fx, "fixed_point", "frac_bits")) {
    spec.frac_bits = to_int(*v, "fixed_point.frac_bits");
    c.pinned_fixed = true;
  }
  parse_field("fixed_point", [&] {
    spec.validate();
    return 0;
  });
  const NumericFormat fmt = kind == NumericFormat::Kind::kFixedPoint
                                ? NumericFormat::fixed(spec)
                                : NumericFormat{kind, std::nullopt};
  c.format = fmt;
  c.datapath = datapath::Config::for_format(fmt);
  c.datapath.fixed = spec;
  if (auto v = get_string(fx, "fixed_point", "rounding")) {
    c.datapath.rounding = parse_field("fixed_point.rounding", [&] { return parse_rounding(*v); });
  }
  if (auto v = get_int(fx, "fixed_point", "guard_bits")) {
    c.datapath.guard_bits = to_int(*v, "fixed_point.guard_bits");
  }

  const Json& inv = section(doc, "invsqrt");
  check_keys(inv, "invsqrt", {"float_width", "sigma", "newton_iters"});
  if (auto v = get_string(inv, "invsqrt", "float_width")) {
    c.datapath.inverter.float_width =
        parse_field("invsqrt.float_width", [&] { return parse_float_width(*v); });
    c.pinned_width = true;
  }
  if (auto v = get_real(inv, "invsqrt", "sigma")) c.datapath.inverter.sigma = *v;
  if (auto v = get_int(inv, "invsqrt", "newton_iters")) {
    c.datapath.inverter.newton_iters = to_int(*v, "invsqrt.newton_iters");
    c.pinned_newton = true;
  }
  parse_field("invsqrt", [&] {
    c.datapath.inverter.validate();
    return 0;
  });
  if (c.datapath.guard_bits < 0 || c.datapath.guard_bits > 16) {
    bad_field("fixed_point.guard_bits", "must lie in [0, 16]");
  }

  const Json& acc = section(doc, "accel");
  check_keys(acc, "accel", {"p_d", "p_n", "pipeline_depth", "clock_hz", "latency"});
  if (auto v = get_int(acc, "accel", "p_d")) c.accel.p_d = to_int(*v, "accel.p_d");
  if (auto v = get_int(acc, "accel", "p_n")) c.accel.p_n = to_int(*v, "accel.p_n");
  if (auto v = get_int(acc, "accel", "pipeline_depth")) {
    c.accel.pipeline_depth = to_int(*v, "accel.pipeline_depth");
  }
  if (auto v = get_int(acc, "accel", "clock_hz")) c.accel.clock_hz = *v;
  if (c.accel.p_d < 8) bad_field("accel.p_d", "must be >= 8");
  if (c.accel.p_n < 8) bad_field("accel.p_n", "must be >= 8");
  if (c.accel.pipeline_depth < 1) bad_field("accel.pipeline_depth", "must be >= 1");
  if (c.accel.clock_hz <= 0) bad_field("accel.clock_hz", "must be positive");
  if (const Json* lat = member(acc, "latency")) {
    if (!lat->is_object()) bad_field("accel.latency", "expected an object");
    check_keys(*lat, "accel.latency", {"stats_post", "inverter", "predictor", "norm_post", "bypass"});
    auto& l = c.accel.latency;
    const std::string p = "accel.latency";
    if (auto v = get_int(*lat, p, "stats_post")) l.stats_post = to_int(*v, p + ".stats_post");
    if (auto v = get_int(*lat, p, "inverter")) l.inverter = to_int(*v, p + ".inverter");
    if (auto v = get_int(*lat, p, "predictor")) l.predictor = to_int(*v, p + ".predictor");
    if (auto v = get_int(*lat, p, "norm_post")) l.norm_post = to_int(*v, p + ".norm_post");
    if (auto v = get_int(*lat, p, "bypass")) l.bypass = to_int(*v, p + ".bypass");
    if (l.stats_post < 0 || l.norm_post < 0) bad_field(p, "latencies must be >= 0");
    if (l.inverter < 1 || l.predictor < 1 || l.bypass < 1) {
      bad_field(p, "unit latencies must be >= 1");
    }
  }

  const Json& model = section(doc, "model");
  check_keys(model, "model", {"name", "skip_range"});
  if (auto v = get_string(model, "model", "name")) c.model_name = *v;
  if (const Json* r = member(model, "skip_range")) {
    if (!r->is_array() || r->size() != 2 || !(*r)[0].is_number_integer() ||
        !(*r)[1].is_number_integer()) {
      bad_field("model.skip_range", "expected [start, end]");
    }
    c.skip_range = {(*r)[0].get<int>(), (*r)[1].get<int>()};
    if (!(0 <= c.skip_range->first && c.skip_range->first < c.skip_range->second)) {
      bad_field("model.skip_range", "expected 0 <= start < end");
    }
  }

  c.accel.datapath = c.datapath;
  c.accel.n_sub = c.n_sub;
  c.accel.full_length_mean = c.full_length_mean;
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  const Json doc = read_json_file(path);
  try {
    return from_json(doc);
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

Json RunConfig::to_json() const {
  Json doc;
  doc["norm"] = {{"kind", to_string(kind)}, {"format", to_string(format.kind)}};
  doc["norm"]["n_sub"] = n_sub ? Json(*n_sub) : Json(nullptr);
  doc["norm"]["epsilon"] = epsilon;
  doc["norm"]["full_length_mean"] = full_length_mean;
  doc["fixed_point"] = {{"total_bits", datapath.fixed.total_bits},
                        {"frac_bits", datapath.fixed.frac_bits},
                        {"rounding", to_string(datapath.rounding)},
                        {"guard_bits", datapath.guard_bits}};
  doc["invsqrt"] = {{"float_width", to_string(datapath.inverter.float_width)},
                    {"sigma", datapath.inverter.sigma},
                    {"newton_iters", datapath.inverter.newton_iters}};
  const auto& l = accel.latency;
  doc["accel"] = {{"p_d", accel.p_d},
                  {"p_n", accel.p_n},
                  {"pipeline_depth", accel.pipeline_depth},
                  {"clock_hz", accel.clock_hz},
                  {"latency",
                   {{"stats_post", l.stats_post},
                    {"inverter", l.inverter},
                    {"predictor", l.predictor},
                    {"norm_post", l.norm_post},
                    {"bypass", l.bypass}}}};
  if (!model_name.empty() || skip_range) {
    doc["model"] = Json::object();
    if (!model_name.empty()) doc["model"]["name"] = model_name;
    if (skip_range) doc["model"]["skip_range"] = {skip_range->first, skip_range->second};
  }
  return doc;
}

void RunConfig::set_format(const NumericFormat& fmt) {
  auto base = datapath::Config::for_format(fmt);
  if (pinned_fixed && fmt.kind != NumericFormat::Kind::kFixedPoint) base.fixed = datapath.fixed;
  if (pinned_newton) base.inverter.newton_iters = datapath.inverter.newton_iters;
  if (pinned_width) base.inverter.float_width = datapath.inverter.float_width;
  base.inverter.sigma = datapath.inverter.sigma;
  base.guard_bits = datapath.guard_bits;
  base.rounding = datapath.rounding;
  format = fmt;
  datapath = base;
  accel.datapath = base;
}

NormConfig RunConfig::norm_config(std::size_t n, IsdMode mode) const {
  NormConfig nc = NormConfig::identity(kind, n, format);
  nc.n_sub = n_sub ? *n_sub : n;
  if (nc.n_sub > n) {
    fail(ErrorCode::kConfig, "n_sub=" + std::to_string(nc.n_sub) +
                                 " exceeds the vector length " + std::to_string(n));
  }
  nc.isd_mode = mode;
  nc.epsilon = epsilon;
  nc.full_length_mean = full_length_mean;
  if (format.is_hardware()) nc.datapath_config = datapath;
  return nc;
}

// ---------------------------------------------------------------------------
// PredictorDocument

Json PredictorDocument::to_json() const {
  Json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["model_id"] = model_id;
  doc["skip_start"] = predictor.skip_start;
  doc["skip_end"] = predictor.skip_end;
  doc["decay"] = predictor.decay;
  doc["min_cor"] = min_cor;
  doc["M"] = min_gap;
  doc["anchor_policy"] = to_string(predictor.anchor_policy);
  doc["anchor_log_isd"] = predictor.anchor_log_isd;
  doc["trace_digest"] = trace_digest;
  return doc;
}

PredictorDocument PredictorDocument::from_json(const Json& doc) {
  if (!doc.is_object()) fail(ErrorCode::kFormat, "predictor document must be a JSON object");
  auto need = [&](const char* key) -> const Json& {
    const Json* v = member(doc, key);
    if (!v) fail(ErrorCode::kFormat, std::string("predictor document: missing '") + key + "'");
    return *v;
  };
  auto integer = [&](const char* key) {
    const Json& v = need(key);
    if (!v.is_number_integer()) {
      fail(ErrorCode::kFormat, std::string("predictor document: '") + key + "' must be an integer");
    }
    return v.get<int>();
  };
  auto real = [&](const char* key) {
    const Json& v = need(key);
    if (!v.is_number()) {
      fail(ErrorCode::kFormat, std::string("predictor document: '") + key + "' must be a number");
    }
    return v.get<double>();
  };
  auto text = [&](const char* key) {
    const Json& v = need(key);
    if (!v.is_string()) {
      fail(ErrorCode::kFormat, std::string("predictor document: '") + key + "' must be a string");
    }
    return v.get<std::string>();
  };

  if (integer("schema_version") != kSchemaVersion) {
    fail(ErrorCode::kFormat, "predictor document: unsupported schema_version");
  }
  PredictorDocument d;
  d.model_id = text("model_id");
  d.predictor.skip_start = integer("skip_start");
  d.predictor.skip_end = integer("skip_end");
  d.predictor.decay = real("decay");
  d.min_cor = real("min_cor");
  d.min_gap = integer("M");
  d.trace_digest = text("trace_digest");
  if (member(doc, "anchor_policy")) {
    try {
      d.predictor.anchor_policy = parse_anchor_policy(text("anchor_policy"));
    } catch (const Error& e) {
      fail(ErrorCode::kFormat, std::string("predictor document: ") + e.what());
    }
  }
  if (member(doc, "anchor_log_isd")) d.predictor.anchor_log_isd = real("anchor_log_isd");
  if (!(0 <= d.predictor.skip_start && d.predictor.skip_start < d.predictor.skip_end)) {
    fail(ErrorCode::kFormat, "predictor document: need 0 <= skip_start < skip_end");
  }
  return d;
}

PredictorDocument PredictorDocument::load(const std::filesystem::path& path) {
  const Json doc = read_json_file(path);
  try {
    return from_json(doc);
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace haan::tools
