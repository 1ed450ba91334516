// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#include "haan/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "haan/error.hpp"
#include "haan/norm_core.hpp"

namespace haan {

std::string default_layer_label(std::size_t layer) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "blk%02zu.%s", layer / 2,
                layer % 2 == 0 ? "attn_norm" : "ffn_norm");
  return buf;
}

ActivationTrace ActivationTrace::zeros(std::string model_id, std::size_t layers,
                                       std::size_t dim, std::size_t samples) {
  ActivationTrace t;
  t.model_id = std::move(model_id);
  t.layer_count = layers;
  t.embedding_dim = dim;
  t.sample_count = samples;
  for (std::size_t l = 0; l < layers; ++l) t.layer_labels.push_back(default_layer_label(l));
  t.data.assign(layers * dim * samples, 0.0f);
  return t;
}

std::span<const float> ActivationTrace::vector(std::size_t sample, std::size_t layer) const {
  return {data.data() + (sample * layer_count + layer) * embedding_dim, embedding_dim};
}

std::span<float> ActivationTrace::vector(std::size_t sample, std::size_t layer) {
  return {data.data() + (sample * layer_count + layer) * embedding_dim, embedding_dim};
}

std::vector<double> ActivationTrace::vector_f64(std::size_t sample, std::size_t layer) const {
  const auto v = vector(sample, layer);
  return {v.begin(), v.end()};
}

void ActivationTrace::validate() const {
  if (layer_count == 0 || embedding_dim == 0 || sample_count == 0) {
    fail(ErrorCode::kDimensionMismatch, "trace dimensions must be positive");
  }
  if (layer_labels.size() != layer_count) {
    fail(ErrorCode::kDimensionMismatch, "trace has " + std::to_string(layer_labels.size()) +
                                            " labels for " + std::to_string(layer_count) +
                                            " layers");
  }
  if (std::set<std::string>(layer_labels.begin(), layer_labels.end()).size() != layer_count) {
    fail(ErrorCode::kFormat, "trace layer labels must be unique");
  }
  if (data.size() != sample_count * layer_count * embedding_dim) {
    fail(ErrorCode::kDimensionMismatch, "trace payload holds " + std::to_string(data.size()) +
                                            " values, expected samples*layers*dim");
  }
}

// ---------------------------------------------------------------------------
// HAANTRC1

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xFFFFFFFFu) fail(ErrorCode::kDimensionMismatch, std::string(what) + " exceeds u32");
  return static_cast<std::uint32_t>(v);
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      fail(ErrorCode::kFormat, std::string("truncated ") + what + " at byte offset " +
                                   std::to_string(pos_) + " (need " + std::to_string(n) +
                                   " bytes, have " + std::to_string(remaining()) + ")");
    }
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::string str(const char* what) {
    const std::uint32_t len = u32(what);
    need(len, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
    pos_ += len;
    return s;
  }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_trace(const ActivationTrace& trace) {
  trace.validate();
  std::vector<std::uint8_t> out;
  out.reserve(32 + trace.data.size() * 4);
  for (const char c : kTraceMagic) out.push_back(static_cast<std::uint8_t>(c));
  put_u32(out, kTraceVersion);
  put_u32(out, checked_u32(trace.layer_count, "layer_count"));
  put_u32(out, checked_u32(trace.embedding_dim, "embedding_dim"));
  put_u32(out, checked_u32(trace.sample_count, "sample_count"));
  put_string(out, trace.model_id);
  for (const auto& label : trace.layer_labels) put_string(out, label);
  for (const float v : trace.data) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put_u32(out, bits);
  }
  return out;
}

ActivationTrace parse_trace(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.take(8, "magic");
  if (!std::equal(magic.begin(), magic.end(), std::begin(kTraceMagic))) {
    fail(ErrorCode::kFormat, "bad magic at byte offset 0 (expected HAANTRC1)");
  }
  const std::size_t version_at = r.offset();
  const std::uint32_t version = r.u32("header");
  if (version != kTraceVersion) {
    fail(ErrorCode::kFormat, "unsupported version " + std::to_string(version) +
                                 " at byte offset " + std::to_string(version_at));
  }
  ActivationTrace t;
  t.layer_count = r.u32("header");
  t.embedding_dim = r.u32("header");
  t.sample_count = r.u32("header");
  if (t.layer_count == 0 || t.embedding_dim == 0 || t.sample_count == 0) {
    fail(ErrorCode::kFormat, "header dimensions must be positive (byte offset 12)");
  }
  t.model_id = r.str("label block");
  for (std::size_t l = 0; l < t.layer_count; ++l) t.layer_labels.push_back(r.str("label block"));

  const auto count = static_cast<unsigned __int128>(t.layer_count) * t.embedding_dim *
                     t.sample_count;
  if (count * 4 > r.remaining()) {
    fail(ErrorCode::kFormat, "truncated payload at byte offset " + std::to_string(r.offset()) +
                                 " (have " + std::to_string(r.remaining()) + " bytes, need " +
                                 std::to_string(static_cast<std::uint64_t>(count * 4)) + ")");
  }
  const auto payload = r.take(static_cast<std::size_t>(count) * 4, "payload");
  if (r.remaining() != 0) {
    fail(ErrorCode::kFormat, "trailing bytes after payload at byte offset " +
                                 std::to_string(r.offset()));
  }
  t.data.resize(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(payload[4 * i + b]) << (8 * b);
    std::memcpy(&t.data[i], &bits, sizeof bits);
  }
  t.validate();
  return t;
}

void write_trace(const ActivationTrace& trace, std::ostream& os) {
  const auto bytes = serialize_trace(trace);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) fail(ErrorCode::kFormat, "failed to write trace");
}

ActivationTrace read_trace(std::istream& is) {
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  return parse_trace(bytes);
}

void write_trace_file(const ActivationTrace& trace, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::kFormat, "cannot open '" + path.string() + "' for writing");
  write_trace(trace, os);
}

ActivationTrace read_trace_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::kFormat, "cannot open trace '" + path.string() + "'");
  return read_trace(is);
}

// ---------------------------------------------------------------------------
// Synthetic generation

void SyntheticTraceSpec::validate() const {
  if (layer_count < 1 || embedding_dim < 2 || sample_count < 1) {
    fail(ErrorCode::kConfig, "synthetic trace needs layers >= 1, dim >= 2, samples >= 1");
  }
  if (!(noise_sigma >= 0.0)) fail(ErrorCode::kConfig, "noise_sigma must be >= 0");
  if (const auto* tail = std::get_if<LogLinearTail>(&isd_profile)) {
    if (!(tail->start < tail->end && tail->end < layer_count)) {
      fail(ErrorCode::kConfig, "log-linear tail needs start < end < layer_count");
    }
  }
  if (const auto* table = std::get_if<PiecewiseFromTable>(&isd_profile)) {
    if (table->knots.empty()) fail(ErrorCode::kConfig, "piecewise profile needs knots");
  }
  if (const auto* custom = std::get_if<CustomProfile>(&isd_profile)) {
    if (!custom->log_isd) fail(ErrorCode::kConfig, "custom profile needs a function");
  }
}

double planted_log_isd(const IsdProfile& profile, std::size_t layer) {
  const auto l = static_cast<double>(layer);
  if (const auto* tail = std::get_if<LogLinearTail>(&profile)) {
    const auto start = static_cast<double>(tail->start);
    const auto end = static_cast<double>(tail->end);
    if (l < start) {
      // Steep early drop with ripple.
      const double d = start - l;
      return 1.2 * (1.0 - std::exp(-d / 4.0)) + 0.25 * std::sin(1.7 * d);
    }
    if (l <= end) return tail->slope * (l - start);
    const double d = l - end;
    return tail->slope * (end - start) + 0.3 * std::sin(2.1 * d) + 0.02 * d;
  }
  if (const auto* table = std::get_if<PiecewiseFromTable>(&profile)) {
    const auto& k = table->knots;
    if (l <= k.front().first) return k.front().second;
    if (l >= k.back().first) return k.back().second;
    for (std::size_t i = 1; i < k.size(); ++i) {
      if (l <= k[i].first) {
        const double t = (l - k[i - 1].first) / (k[i].first - k[i - 1].first);
        return k[i - 1].second + t * (k[i].second - k[i - 1].second);
      }
    }
    return k.back().second;
  }
  return std::get<CustomProfile>(profile).log_isd(layer);
}

namespace {

class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : rng_(seed) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1p-53; }

  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace

ActivationTrace generate_synthetic(const SyntheticTraceSpec& spec, std::uint64_t seed) {
  spec.validate();
  auto t = ActivationTrace::zeros(spec.model_id, spec.layer_count, spec.embedding_dim,
                                  spec.sample_count);
  Gaussian gauss(seed);
  std::vector<double> g(spec.embedding_dim);
  for (std::size_t s = 0; s < spec.sample_count; ++s) {
    for (std::size_t l = 0; l < spec.layer_count; ++l) {
      double log_isd = planted_log_isd(spec.isd_profile, l);
      if (spec.noise_sigma > 0.0) log_isd += spec.noise_sigma * gauss();
      const double sigma = std::exp(-log_isd);
      for (double& v : g) v = gauss();
      if (spec.exact_moments) {
        double mean = 0.0;
        for (double v : g) mean += v;
        mean /= static_cast<double>(g.size());
        double ss = 0.0;
        for (double& v : g) {
          v -= mean;
          ss += v * v;
        }
        const double scale = 1.0 / std::sqrt(ss / static_cast<double>(g.size()));
        for (double& v : g) v *= scale;
      }
      auto out = t.vector(s, l);
      for (std::size_t i = 0; i < g.size(); ++i) out[i] = static_cast<float>(g[i] * sigma);
    }
  }
  return t;
}

IsdTable extract_isd_table(const ActivationTrace& trace, NormKind kind) {
  trace.validate();
  IsdTable table(trace.sample_count, trace.layer_count);
  for (std::size_t s = 0; s < trace.sample_count; ++s) {
    for (std::size_t l = 0; l < trace.layer_count; ++l) {
      const auto z = trace.vector_f64(s, l);
      try {
        table.at(s, l) = std::log(reference_isd(z, kind));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kZeroVariance) throw;
        fail(ErrorCode::kZeroVariance, "zero variance at sample " + std::to_string(s) +
                                           ", layer " + std::to_string(l));
      }
    }
  }
  return table;
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (const std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace haan
