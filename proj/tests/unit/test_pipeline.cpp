// Copyright 2026 The MAPSS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "embeddings/embeddings.hpp"
#include "pipeline/pipeline.hpp"

using namespace mapss;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mapss_pipeline_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Demo config with a short signal and small banks so each run takes ~1 s.
RunConfig short_demo(const fs::path& dir) {
  const fs::path cfg = write_demo(dir, 3, 2.0);
  RunConfig c = load_run_config(cfg);
  c.workers = 1;
  return c;
}

EmbeddingMatrix cluster_set(std::uint64_t seed, double spread, std::size_t np, std::size_t dim, double offset) {
  CounterRng r(seed);
  std::vector<std::uint32_t> ids = {0, 1};
  std::vector<std::vector<double>> outs, refs;
  std::vector<std::vector<std::vector<double>>> dist(2);
  for (std::size_t s = 0; s < 2; ++s) {
    std::vector<double> center(dim);
    for (double& c : center) c = r.normal() + (s == 0 ? 0.0 : offset);
    auto jitter = [&](double scale) {
      std::vector<double> v = center;
      for (double& x : v) x += scale * r.normal();
      return v;
    };
    refs.push_back(jitter(0.0));
    outs.push_back(jitter(spread * 0.5));
    for (std::size_t p = 0; p < np; ++p) dist[s].push_back(jitter(spread));
  }
  return assemble_frame_set(0, ids, outs, refs, dist);
}

}  // namespace

TEST(RunConfig, ScenarioPresets) {
  for (Scenario s : {Scenario::kEnglish, Scenario::kSpanish, Scenario::kMusicDrums, Scenario::kMusicNoDrums}) {
    const RunConfig c = scenario_preset(s);
    EXPECT_EQ(c.ps.aggregation.method, AggregationMethod::kPesq);
    EXPECT_EQ(c.pm.aggregation.method, AggregationMethod::kAverage);
    EXPECT_EQ(c.ps.t, 1);
    EXPECT_EQ(c.pm.t, 1);
    const double alpha = s == Scenario::kMusicDrums ? 0.0 : 1.0;
    EXPECT_EQ(c.ps.alpha, alpha);
    EXPECT_EQ(c.pm.alpha, alpha);
  }
  EXPECT_DOUBLE_EQ(1000.0 / scenario_preset(Scenario::kEnglish).plan.hop_ms, 50.0);
  EXPECT_DOUBLE_EQ(1000.0 / scenario_preset(Scenario::kMusicDrums).plan.hop_ms, 10.0);
  EXPECT_DOUBLE_EQ(scenario_preset(Scenario::kMusicNoDrums).plan.frame_ms, 160.0);
}

TEST(RunConfig, JsonOverridesAndErrors) {
  const nlohmann::json base = {{"scenario", "music_drums"},
                               {"pm", {{"alpha", 0.5}}},
                               {"delta", 0.1},
                               {"bounds", {{"C_cov", 2.0}}}};
  const RunConfig c = run_config_from_json(base, "/data");
  EXPECT_EQ(c.ps.alpha, 0.0);
  EXPECT_EQ(c.pm.alpha, 0.5);
  EXPECT_DOUBLE_EQ(c.bounds.delta, 0.1);
  EXPECT_DOUBLE_EQ(c.bounds.c_cov, 2.0);
  EXPECT_DOUBLE_EQ(c.confidence(), 0.9);
  EXPECT_EQ(c.output_dir, fs::path("/data/mapss_out"));

  auto bad = [](nlohmann::json j) {
    try {
      run_config_from_json(j, "");
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kOk;
  };
  EXPECT_EQ(bad({{"scenaro", "english"}}), ErrorCode::kConfigError);
  EXPECT_EQ(bad({{"scenario", "klingon"}}), ErrorCode::kConfigError);
  EXPECT_EQ(bad({{"alpha", 3}}), ErrorCode::kConfigError);
  EXPECT_EQ(bad({{"ps", {{"aggregation", {{"method", "median"}}}}}}), ErrorCode::kConfigError);
  EXPECT_EQ(bad({{"encoder", "file"}}), ErrorCode::kConfigError);
  EXPECT_EQ(bad({{"trials", {{{"references", {{"0", "a.wav"}}}, {"systems", {{"s", {{"0", "b.wav"}}}}}}}}}),
            ErrorCode::kConfigError);
  EXPECT_EQ(bad({{"trials",
                  {{{"references", {{"0", "a.wav"}, {"1", "b.wav"}}}, {"systems", {{"s", {{"0", "c.wav"}}}}}}}}}),
            ErrorCode::kConfigError);
}

TEST(FrameScoring, SeparatedClusters) {
  const EmbeddingMatrix m = cluster_set(1, 0.3, 20, 12, 6.0);
  const RunConfig c = scenario_preset(Scenario::kEnglish);
  const auto ps = score_ps_set(m, c.ps, c.bounds);
  const auto pm = score_pm_set(m, c.pm, c.bounds);
  ASSERT_EQ(ps.size(), 2u);
  ASSERT_EQ(pm.size(), 2u);
  for (std::size_t s = 0; s < 2; ++s) {
    EXPECT_EQ(ps[s].source, static_cast<int>(s));
    EXPECT_EQ(ps[s].nearest, static_cast<int>(1 - s));
    EXPECT_GT(ps[s].value, 0.9);
    EXPECT_GE(pm[s].value, 0.0);
    EXPECT_LE(pm[s].value, 1.0);
    EXPECT_GE(ps[s].radius, 0.0);
    EXPECT_GE(pm[s].half_width, 0.0);
    EXPECT_LE(ps[s].d, ps[s].dim);
  }
}

TEST(FrameScoring, OutputInForeignClusterScoresLow) {
  EmbeddingMatrix m = cluster_set(2, 0.3, 20, 12, 6.0);
  // swap the outputs: each source's output now sits on the other cluster
  const auto a = static_cast<Eigen::Index>(m.row_of(0, ItemKind::kOutput));
  const auto b = static_cast<Eigen::Index>(m.row_of(1, ItemKind::kOutput));
  const Eigen::RowVectorXd tmp = m.vectors.row(a);
  m.vectors.row(a) = m.vectors.row(b);
  m.vectors.row(b) = tmp;
  const RunConfig c = scenario_preset(Scenario::kEnglish);
  for (const auto& f : score_ps_set(m, c.ps, c.bounds)) EXPECT_LT(f.value, 0.1);
}

TEST(Pipeline, DemoRunDeterministicAndBounded) {
  const fs::path dir = scratch("det");
  RunConfig c = short_demo(dir);
  const RunSummary a = run_evaluation(c);
  ASSERT_GT(a.records, 0u);
  EXPECT_EQ(a.json["frames"]["scores_in_unit_interval"], true);
  for (const char* f : {"frames.jsonl", "utterances.csv", "report.json", "report.txt", "nmi.svg", "scores.svg"})
    EXPECT_TRUE(fs::exists(c.output_dir / f)) << f;
  ASSERT_TRUE(a.report);
  EXPECT_EQ(a.report->ps.groups.size(), 2u);
  EXPECT_EQ(a.table.rows.size(), 6u);
  const std::string first = slurp(c.output_dir / "frames.jsonl");

  std::istringstream lines(first);
  std::string line;
  while (std::getline(lines, line)) {
    const auto r = frame_record_from_json(nlohmann::json::parse(line));
    EXPECT_GE(r.ps.value, 0.0);
    EXPECT_LE(r.ps.value, 1.0);
    EXPECT_GE(r.pm.value, 0.0);
    EXPECT_LE(r.pm.value, 1.0);
    EXPECT_GE(r.ps.radius, 0.0);
    EXPECT_GE(r.pm.half_width, 0.0);
    EXPECT_EQ(r.pm.valid, r.pm.radius <= 1.0);
  }
  run_evaluation(c);
  EXPECT_EQ(slurp(c.output_dir / "frames.jsonl"), first);
  EXPECT_EQ(slurp(c.output_dir / "report.json"), slurp(c.output_dir / "report.json"));

  c.workers = 3;
  run_evaluation(c);
  EXPECT_EQ(slurp(c.output_dir / "frames.jsonl"), first);
  fs::remove_all(dir);
}

TEST(Pipeline, ResumeSkipsCompletedFrames) {
  const fs::path dir = scratch("resume");
  const RunConfig c = short_demo(dir);
  run_evaluation(c);
  const fs::path jsonl = c.output_dir / "frames.jsonl";
  const std::string full = slurp(jsonl);
  // cut mid-record, as a crash would
  fs::resize_file(jsonl, full.size() * 2 / 3);
  RunOptions o;
  o.resume = true;
  const RunSummary s = run_evaluation(c, o);
  EXPECT_GT(s.frames_resumed, 0u);
  EXPECT_GT(s.frames_scored, 0u);
  EXPECT_EQ(slurp(jsonl), full);
  const RunSummary again = run_evaluation(c, o);
  EXPECT_EQ(again.frames_scored, 0u);
  EXPECT_EQ(slurp(jsonl), full);
  fs::remove_all(dir);
}

TEST(Pipeline, SweepRowsAndZeroDelay) {
  const fs::path dir = scratch("sweep");
  const RunConfig c = short_demo(dir);
  const RunSummary base = run_evaluation(c);
  const auto rows = misalignment_sweep(c, {0.0, 20.0, 100.0});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(slurp(c.output_dir / "delay_0ms" / "frames.jsonl"), slurp(c.output_dir / "frames.jsonl"));
  EXPECT_DOUBLE_EQ(rows[0].mean_ps, base.mean_ps);
  EXPECT_LE(rows[2].mean_ps, rows[1].mean_ps);
  EXPECT_TRUE(fs::exists(c.output_dir / "sweep.csv"));
  fs::remove_all(dir);
}

TEST(Pipeline, FileEncoderReadsEmbeddings) {
  const fs::path dir = scratch("file");
  RunConfig c = short_demo(dir);
  c.encoder = Encoder::kFile;
  c.embeddings = dir / "emb";
  c.mos.clear();
  const std::size_t frames = 100;  // 2 s at 50 fps
  for (const auto& [system, paths] : c.trials[0].systems) {
    fs::create_directories(c.embeddings / "demo");
    for (const char* tag : {"ps", "pm"}) {
      std::vector<EmbeddingMatrix> all;
      for (std::size_t f = 0; f < frames; ++f) {
        EmbeddingMatrix m = cluster_set(f + 17 * system.size(), 0.4, 12, 8, 4.0);
        m.frame_index = static_cast<std::uint32_t>(f);
        all.push_back(m);
      }
      write_embedding_file(c.embeddings / "demo" / (system + "." + tag + ".mapssemb"), all);
    }
  }
  const RunSummary s = run_evaluation(c);
  EXPECT_GT(s.records, 0u);
  EXPECT_FALSE(s.report);
  EXPECT_GT(s.mean_ps, 0.8);

  fs::remove(c.embeddings / "demo" / "clean.pm.mapssemb");
  try {
    run_evaluation(c);
    FAIL() << "missing embeddings accepted";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("clean.pm.mapssemb"), std::string::npos);
  }
  EXPECT_THROW(misalignment_sweep(c, {20.0}), Error);
  fs::remove_all(dir);
}

TEST(Pipeline, ErrorsCarryContext) {
  const fs::path dir = scratch("ctx");
  RunConfig c = short_demo(dir);
  c.trials[0].systems["clean"][1] = dir / "missing.wav";
  try {
    run_evaluation(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoError);
    EXPECT_NE(std::string(e.what()).find("missing.wav"), std::string::npos);
  }
  fs::remove_all(dir);
}

TEST(Pipeline, BankDump) {
  const fs::path dir = scratch("bank");
  const RunConfig c = short_demo(dir);
  BankConfig b;
  b.max_size = 5;
  EXPECT_EQ(dump_bank(c.trials[0].references.at(0), MeasureVariant::kPM, 1, b, dir / "one"), 5u);
  EXPECT_TRUE(fs::exists(dir / "one" / "bank.json"));
  EXPECT_EQ(dump_config_banks(c, MeasureVariant::kPS, dir / "cfg"), 2u * 40u);
  EXPECT_TRUE(fs::exists(dir / "cfg" / "demo" / "source1" / "bank.json"));
  fs::remove_all(dir);
}

TEST(RunConfig, SharedPoolingAndFileValuedKeys) {
  const fs::path dir = scratch("keys");
  {
    std::ofstream(dir / "bounds.json") << R"({"C_cov": 3.0, "delta": 0.2})";
    std::ofstream(dir / "bank.json") << R"({"families": ["echo"], "max_size": 2})";
  }
  const nlohmann::json j = {{"agg", {{"window", 20}, {"hop", 10}}},
                            {"agg.p", 4.0},
                            {"pm", {{"bank", "bank.json"}}},
                            {"bounds", "bounds.json"},
                            {"delta", 0.01}};
  const RunConfig c = run_config_from_json(j, dir);
  for (const auto* m : {&c.ps, &c.pm}) {
    EXPECT_EQ(m->aggregation.window, 20u);
    EXPECT_EQ(m->aggregation.hop, 10u);
    EXPECT_DOUBLE_EQ(m->aggregation.p, 4.0);
  }
  EXPECT_EQ(c.ps.aggregation.method, AggregationMethod::kPesq);
  EXPECT_EQ(c.pm.aggregation.method, AggregationMethod::kAverage);
  EXPECT_DOUBLE_EQ(c.bounds.c_cov, 3.0);
  EXPECT_DOUBLE_EQ(c.bounds.delta, 0.01);
  EXPECT_EQ(c.pm.bank.max_size, 2u);
  EXPECT_EQ(c.pm.bank_json["families"][0], "echo");

  auto code = [&](nlohmann::json k) {
    try {
      run_config_from_json(k, dir);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kOk;
  };
  EXPECT_EQ(code({{"agg", {{"method", "pesq"}}}}), ErrorCode::kConfigError);
  EXPECT_EQ(code({{"agg", {{"window", 5}}}}), ErrorCode::kConfigError);
  EXPECT_EQ(code({{"bounds", "missing.json"}}), ErrorCode::kIoError);
  fs::remove_all(dir);
}

TEST(Pipeline, RecordsCarryDistancesAndRoundTrip) {
  const fs::path dir = scratch("records");
  RunConfig c = short_demo(dir);
  c.spectra = true;
  run_evaluation(c);
  std::ifstream f(c.output_dir / "frames.jsonl");
  std::string line;
  std::size_t n = 0;
  while (std::getline(f, line)) {
    const auto j = nlohmann::json::parse(line);
    const FrameRecord r = frame_record_from_json(j);
    EXPECT_EQ(frame_record_json(r).dump(), line);
    EXPECT_NEAR(r.ps.value, 1.0 - r.ps.a / (r.ps.a + r.ps.b), 1e-12);
    EXPECT_GE(r.pm.a, 0.0);
    EXPECT_GE(r.pm.ks, 0.0);
    EXPECT_LE(r.pm.ks, 1.0);
    EXPECT_EQ(r.ps.items, r.active * (40 + 2));
    EXPECT_EQ(r.pm.items, r.active * (30 + 2));
    ++n;
  }
  ASSERT_GT(n, 0u);

  const fs::path spectra = c.output_dir / "spectra.jsonl";
  const std::string full = slurp(spectra), frames = slurp(c.output_dir / "frames.jsonl");
  std::size_t lines = 0;
  for (char ch : full) lines += ch == '\n';
  EXPECT_EQ(lines * 2, n);  // one spectrum line per frame set, two sources per frame
  const auto first = nlohmann::json::parse(full.substr(0, full.find('\n')));
  EXPECT_EQ(first["ps"]["d"].get<std::size_t>(), frame_record_from_json(nlohmann::json::parse(frames.substr(0, frames.find('\n')))).ps.d);

  // losing the spectra forces those frames to be scored again
  fs::resize_file(spectra, full.size() / 2);
  RunOptions o;
  o.resume = true;
  const RunSummary s = run_evaluation(c, o);
  EXPECT_GT(s.frames_scored, 0u);
  EXPECT_EQ(slurp(spectra), full);
  EXPECT_EQ(slurp(c.output_dir / "frames.jsonl"), frames);
  fs::remove_all(dir);
}
