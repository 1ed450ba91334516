// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "haan/accel_sim.hpp"
#include "haan/error.hpp"
#include "haan/tools/commands.hpp"
#include "haan/tools/documents.hpp"
#include "haan/trace.hpp"

namespace haan::tools {
namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream o, e;
  Run r;
  r.code = run_cli(args, o, e);
  r.out = o.str();
  r.err = e.str();
  return r;
}

// "a=1 b=2" -> {a: 1, b: 2}
std::map<std::string, std::string> fields(const std::string& line) {
  std::map<std::string, std::string> m;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq != std::string::npos) m[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return m;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

void put(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("haan_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  // 64 layers, planted window [40, 50], exact moments.
  fs::path make_trace(std::size_t dim = 1024, std::size_t samples = 4) {
    const auto p = path("t.haantrc");
    const auto r = cli({"gen-trace", "--out", p.string(), "--layers", "64", "--dim",
                        std::to_string(dim), "--samples", std::to_string(samples), "--start",
                        "40", "--end", "50", "--slope", "-0.1", "--exact-moments", "--seed",
                        "7"});
    EXPECT_EQ(r.code, 0) << r.err;
    return p;
  }

  fs::path make_predictor(const fs::path& trace) {
    const auto p = path("pred.json");
    const auto r = cli({"calibrate", trace.string(), "--out", p.string()});
    EXPECT_EQ(r.code, 0) << r.err;
    return p;
  }

  fs::path dir_;
};

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code_for(ErrorCode::kUsage), 1);
  EXPECT_EQ(exit_code_for(ErrorCode::kConfig), 1);
  EXPECT_EQ(exit_code_for(ErrorCode::kFormat), 2);
  EXPECT_EQ(exit_code_for(ErrorCode::kDimensionMismatch), 2);
  EXPECT_EQ(exit_code_for(ErrorCode::kNoValidRange), 2);
  EXPECT_EQ(exit_code_for(ErrorCode::kZeroVariance), 3);
  EXPECT_EQ(exit_code_for(ErrorCode::kInvalidIsd), 3);
  EXPECT_EQ(exit_code_for(ErrorCode::kDomain), 3);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, 1);
  EXPECT_EQ(cli({"bogus"}).code, 1);
  EXPECT_EQ(cli({"norm"}).code, 1);
  EXPECT_EQ(cli({"--help"}).code, 0);
  // A missing input path is caught by the argument parser.
  EXPECT_EQ(cli({"sim", path("missing.haantrc").string(), "--report", path("r.json").string()}).code,
            1);
  put(path("junk.haantrc"), "not a trace");
  EXPECT_EQ(cli({"sim", path("junk.haantrc").string(), "--report", path("r.json").string()}).code,
            2);
}

TEST_F(Cli, GenTraceIsDeterministic) {
  const auto a = make_trace(256, 2);
  const std::string first = slurp(a);
  make_trace(256, 2);
  EXPECT_EQ(slurp(a), first);
  const auto t = read_trace_file(a);
  EXPECT_EQ(t.layer_count, 64u);
  EXPECT_EQ(t.embedding_dim, 256u);
  EXPECT_EQ(t.sample_count, 2u);
}

TEST_F(Cli, GenTraceFromSpecFile) {
  put(path("spec.json"), R"({"model_id": "tiny", "layer_count": 12, "embedding_dim": 64,
        "sample_count": 2, "seed": 3,
        "profile": {"type": "piecewise", "knots": [[0, 0.0], [11, -1.1]]}})");
  const auto out = path("s.haantrc");
  const auto r = cli({"gen-trace", "--spec", path("spec.json").string(), "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = read_trace_file(out);
  EXPECT_EQ(t.model_id, "tiny");
  EXPECT_EQ(t.layer_count, 12u);
  put(path("bad.json"), R"({"layer_count": 12, "colour": 1})");
  EXPECT_EQ(cli({"gen-trace", "--spec", path("bad.json").string(), "--out", out.string()}).code, 1);
}

TEST_F(Cli, CalibrateRecoversPlantedWindow) {
  const auto trace = make_trace(512, 3);
  const auto p = path("pred.json");
  const auto r = cli({"calibrate", trace.string(), "--out", p.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto f = fields(r.out);
  EXPECT_EQ(f.at("skip_start"), "40");
  EXPECT_EQ(f.at("skip_end"), "50");
  const auto doc = PredictorDocument::load(p);
  EXPECT_EQ(doc.predictor.skip_start, 40);
  EXPECT_EQ(doc.predictor.skip_end, 50);
  EXPECT_NEAR(doc.predictor.decay, -0.1, 1e-9);
  EXPECT_LE(doc.min_cor, -0.95);
  // Round trip of the document is exact.
  EXPECT_EQ(PredictorDocument::from_json(doc.to_json()).predictor, doc.predictor);
}

TEST_F(Cli, CalibrateRejectsSingleLayerTrace) {
  SyntheticTraceSpec spec;
  spec.layer_count = 1;
  spec.embedding_dim = 32;
  spec.sample_count = 2;
  spec.isd_profile = PiecewiseFromTable{{{0.0, 0.0}}};
  write_trace_file(generate_synthetic(spec, 1), path("one.haantrc"));
  const auto r = cli({"calibrate", path("one.haantrc").string(), "--out", path("p.json").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(fs::exists(path("p.json")));
}

TEST_F(Cli, CalibrateMinGapTooLarge) {
  const auto trace = make_trace(128, 2);
  const auto r =
      cli({"calibrate", trace.string(), "-M", "80", "--out", path("p.json").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(fs::exists(path("p.json")));
}

TEST_F(Cli, CalibrateThresholdGate) {
  SyntheticTraceSpec spec;
  spec.layer_count = 30;
  spec.embedding_dim = 64;
  spec.sample_count = 3;
  spec.isd_profile = PiecewiseFromTable{{{0.0, 0.0}, {7.0, 1.0}, {14.0, 0.0}, {21.0, 1.0}, {29.0, 0.0}}};
  spec.noise_sigma = 0.5;
  write_trace_file(generate_synthetic(spec, 9), path("n.haantrc"));
  const auto r = cli({"calibrate", path("n.haantrc").string(), "-M", "20", "--threshold",
                      "-0.9999", "--out", path("p.json").string()});
  EXPECT_EQ(r.code, 2) << r.out << r.err;
  EXPECT_FALSE(fs::exists(path("p.json")));
}

TEST_F(Cli, NormAccuracyTargets) {
  const auto trace = make_trace(1024, 4);
  const auto pred = make_predictor(trace);
  const auto rep = path("n.csv");

  auto r = cli({"norm", trace.string(), "--format", "fp32", "--report", rep.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LE(std::stod(fields(r.out).at("max_rel_error")), 1e-6);
  EXPECT_EQ(slurp(rep).substr(0, 6), "layer,");

  r = cli({"norm", trace.string(), "--nsub", "256", "--report", rep.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LE(std::stod(fields(r.out).at("mean_isd_rel_error")), 0.05);

  r = cli({"norm", trace.string(), "--format", "fp32", "--predictor", pred.string(), "--report",
           rep.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LE(std::stod(fields(r.out).at("predicted_max_isd_rel_error")), 1e-6);

  r = cli({"norm", trace.string(), "--nsub", "5000", "--report", rep.string()});
  EXPECT_EQ(r.code, 1);
}

TEST_F(Cli, SimFollowsConfig) {
  const auto trace = make_trace(4096, 2);
  put(path("a.json"), R"({"accel": {"p_d": 128, "p_n": 128}})");
  put(path("b.json"), R"({"accel": {"p_d": 64, "p_n": 64}})");
  const auto ra = cli({"sim", trace.string(), "--config", path("a.json").string(), "--report",
                       path("ra.json").string(), "--events", path("ev.csv").string()});
  ASSERT_EQ(ra.code, 0) << ra.err;
  const auto rb = cli({"sim", trace.string(), "--config", path("b.json").string(), "--report",
                       path("rb.json").string()});
  ASSERT_EQ(rb.code, 0) << rb.err;
  const auto ja = nlohmann::json::parse(slurp(path("ra.json")));
  const auto jb = nlohmann::json::parse(slurp(path("rb.json")));
  EXPECT_LT(ja.at("total_cycles").get<long long>(), jb.at("total_cycles").get<long long>());
  const auto& l0 = ja.at("layers").at(0);
  EXPECT_EQ(l0.at("stats_cycles").get<int>(), 42);
  EXPECT_EQ(l0.at("invsqrt_cycles").get<int>(), 6);
  EXPECT_EQ(l0.at("norm_cycles").get<int>(), 34);
  EXPECT_EQ(l0.at("total_cycles").get<long long>(), l0.at("closed_form_cycles").get<long long>());
  std::ifstream ev(path("ev.csv"));
  EXPECT_EQ(sim::replay_events_csv(ev), ja.at("total_cycles").get<long long>());

  put(path("c.json"), R"({"accel": {"p_d": 4}})");
  EXPECT_EQ(cli({"sim", trace.string(), "--config", path("c.json").string(), "--report",
                 path("rc.json").string()})
                .code,
            1);
  put(path("d.json"), R"({"accel": {"lanes": 4}})");
  const auto rd = cli({"sim", trace.string(), "--config", path("d.json").string(), "--report",
                       path("rd.json").string()});
  EXPECT_EQ(rd.code, 1);
  EXPECT_NE(rd.err.find("accel"), std::string::npos);
}

TEST_F(Cli, SimWithPredictorIsFaster) {
  const auto trace = make_trace(1024, 2);
  const auto pred = make_predictor(trace);
  put(path("rms.json"), R"({"norm": {"kind": "rmsnorm"}})");
  const auto base = cli({"sim", trace.string(), "--config", path("rms.json").string(), "--report",
                         path("a.json").string()});
  const auto fast = cli({"sim", trace.string(), "--config", path("rms.json").string(),
                         "--predictor", pred.string(), "--report", path("b.json").string()});
  ASSERT_EQ(base.code, 0) << base.err;
  ASSERT_EQ(fast.code, 0) << fast.err;
  EXPECT_LT(std::stoll(fields(fast.out).at("total_cycles")),
            std::stoll(fields(base.out).at("total_cycles")));
}

TEST_F(Cli, SweepRanksAndDedupes) {
  const auto trace = make_trace(4096, 2);
  put(path("grid.json"), R"({"points": [
        {"p_d": 64, "p_n": 192}, {"p_d": 144, "p_n": 112},
        {"p_d": 64, "p_n": 192}, {"p_d": 192, "p_n": 64}]})");
  const auto out = path("sweep");
  const auto r = cli({"sweep", trace.string(), "--grid", path("grid.json").string(), "--out",
                      out.string(), "-j", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("duplicates"), std::string::npos);
  EXPECT_NE(r.out.find("p_d=144"), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "point_000.json"));
  EXPECT_TRUE(fs::exists(out / "point_002.json"));
  EXPECT_FALSE(fs::exists(out / "point_003.json"));
  std::istringstream csv(slurp(out / "summary.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line.substr(0, 10), "rank,point");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 3);

  put(path("empty.json"), R"({"points": []})");
  EXPECT_EQ(cli({"sweep", trace.string(), "--grid", path("empty.json").string(), "--out",
                 out.string()})
                .code,
            1);
}

TEST_F(Cli, SweepAxesProduct) {
  const auto trace = make_trace(256, 1);
  put(path("grid.json"), R"({"p_d": [64, 128], "p_n": [64, 128], "format": ["fp16", "int8"]})");
  const auto out = path("sweep");
  const auto r = cli({"sweep", trace.string(), "--grid", path("grid.json").string(), "--out",
                      out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(fields(r.out).at("points"), "8");
}

TEST_F(Cli, VerifyDefaultsPass) {
  const auto r = cli({"verify"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST_F(Cli, VerifyWithoutNewtonUsesWideBound) {
  put(path("c.json"), R"({"invsqrt": {"newton_iters": 0}})");
  const auto r = cli({"verify", "--config", path("c.json").string()});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("bound 3.5%"), std::string::npos) << r.out;
}

TEST_F(Cli, VerifyRejectsBadFixedSpec) {
  put(path("c.json"), R"({"norm": {"format": "fixed"}, "fixed_point": {"total_bits": 8, "frac_bits": 12}})");
  const auto r = cli({"verify", "--config", path("c.json").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("fixed_point"), std::string::npos) << r.err;
}

TEST_F(Cli, NonFiniteTraceIsDomainError) {
  SyntheticTraceSpec spec;
  spec.layer_count = 4;
  spec.embedding_dim = 16;
  spec.sample_count = 1;
  spec.isd_profile = PiecewiseFromTable{{{0.0, 0.0}}};
  auto t = generate_synthetic(spec, 1);
  t.data[3] = std::numeric_limits<double>::infinity();
  write_trace_file(t, path("inf.haantrc"));
  const auto r = cli({"norm", path("inf.haantrc").string(), "--report", path("r.csv").string()});
  EXPECT_EQ(r.code, 3) << r.err;
}

TEST(Presets, LoadAndRoundTrip) {
  const fs::path dir = fs::path(HAAN_SOURCE_DIR) / "presets";
  struct Want {
    const char* file;
    NormKind kind;
    NumericFormat::Kind format;
    std::size_t n_sub;
    std::pair<int, int> range;
  };
  for (const Want& w : {Want{"llama-7b.json", NormKind::kRMSNorm, NumericFormat::Kind::kINT8, 256, {50, 60}},
                        Want{"opt-2.7b.json", NormKind::kLayerNorm, NumericFormat::Kind::kFP16, 1280, {55, 62}},
                        Want{"gpt2-1.5b.json", NormKind::kLayerNorm, NumericFormat::Kind::kFP16, 800, {85, 92}}}) {
    const auto c = RunConfig::load(dir / w.file);
    EXPECT_EQ(c.kind, w.kind) << w.file;
    EXPECT_EQ(c.format.kind, w.format) << w.file;
    EXPECT_EQ(c.n_sub, w.n_sub) << w.file;
    EXPECT_EQ(c.skip_range, w.range) << w.file;
    EXPECT_EQ(dump_json(RunConfig::from_json(c.to_json()).to_json()), dump_json(c.to_json()));
  }
}

TEST_F(Cli, SimRejectsSubsampleLongerThanVector) {
  const auto trace = make_trace(256, 1);
  const auto r = cli({"sim", trace.string(), "--config",
                      (fs::path(HAAN_SOURCE_DIR) / "presets" / "opt-2.7b.json").string(),
                      "--report", path("r.json").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("n_sub"), std::string::npos);
}

TEST(Fixture, MatchesItsSpec) {
  // The shipped trace is what gen-trace produces from the shipped spec.
  const fs::path dir = fs::path(HAAN_SOURCE_DIR) / "fixtures";
  const fs::path out = fs::temp_directory_path() / "haan_fixture_regen.haantrc";
  std::ostringstream o, e;
  ASSERT_EQ(run_cli({"gen-trace", "--spec", (dir / "synthetic_spec.json").string(), "--out",
                     out.string()},
                    o, e),
            0)
      << e.str();
  EXPECT_EQ(slurp(out), slurp(dir / "synthetic.haantrc"));
  fs::remove(out);
}

}  // namespace
}  // namespace haan::tools
