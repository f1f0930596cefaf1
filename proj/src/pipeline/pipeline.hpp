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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "embeddings/embeddings.hpp"
#include "evalreport/report.hpp"
#include "pipeline/config.hpp"

namespace mapss {

/// Scores of one source in one frame for one measure.
struct MeasureFrame {
  int source = 0;
  double value = 0.0;
  double radius = 0.0;
  double half_width = 0.0;
  bool valid = true;
  bool fallback = false;  // PM box used the gradient bound
  int nearest = -1;       // PS: source id of the closest foreign cluster
  double a = 0.0;         // PS: distance to own cluster; PM: squared distance to reference
  double b = 0.0;         // PS: distance to the nearest foreign cluster
  double ks = std::numeric_limits<double>::quiet_NaN();  // PM: KS statistic against the fitted Gamma
  bool ks_pass = true;
  std::size_t items = 0;  // rows in the frame set
  std::size_t d = 0;
  std::size_t dim = 0;
};

/// Builds the frame's manifold and scores every source in it. When
/// `spectrum` is given it receives the graph and spectrum summary.
std::vector<MeasureFrame> score_ps_set(const EmbeddingMatrix& m, const MeasureSettings& s, const BoundConfig& b,
                                       nlohmann::json* spectrum = nullptr);
std::vector<MeasureFrame> score_pm_set(const EmbeddingMatrix& m, const MeasureSettings& s, const BoundConfig& b,
                                       nlohmann::json* spectrum = nullptr);

struct FrameRecord {
  std::string trial;
  std::string system;
  std::size_t frame = 0;
  double time_s = 0.0;
  std::size_t active = 0;  // sources scored in this frame
  int source = 0;
  MeasureFrame ps;
  MeasureFrame pm;
};

nlohmann::json frame_record_json(const FrameRecord& r);
FrameRecord frame_record_from_json(const nlohmann::json& j);

struct RunOptions {
  bool resume = false;
  double delay_ms = 0.0;  // applied to every system output
  std::function<void(const std::string&)> log;
};

struct RunSummary {
  std::filesystem::path output_dir;
  std::size_t frames_scored = 0;   // frame records computed in this run
  std::size_t frames_resumed = 0;  // taken from an earlier run
  std::size_t records = 0;
  double mean_ps = 0.0;
  double mean_pm = 0.0;
  double pm_valid_fraction = 0.0;
  ScoreTable table;
  std::optional<ScenarioReport> report;
  std::string report_note;
  std::vector<NmiPoint> nmi;
  nlohmann::json json;  // contents of report.json
};

/// Writes frames.jsonl, utterances.csv, report.json, report.txt and, when
/// enabled, nmi.svg, scores.svg and spectra.jsonl under cfg.output_dir.
RunSummary run_evaluation(const RunConfig& cfg, const RunOptions& opt = {});

struct SweepRow {
  double delay_ms = 0.0;
  std::size_t records = 0;
  double mean_ps = 0.0;
  double mean_pm = 0.0;
  std::optional<ScenarioReport> report;
};

/// One evaluation per delay under output_dir/delay_<ms>ms, plus sweep.csv and
/// sweep.json in output_dir.
std::vector<SweepRow> misalignment_sweep(const RunConfig& cfg, const std::vector<double>& delays,
                                         const RunOptions& opt = {});
nlohmann::json sweep_json(const std::vector<SweepRow>& rows);

/// Two synthetic voices, three systems of graded quality, a MOS table and a
/// config under `dir`. Returns the config path.
std::filesystem::path write_demo(const std::filesystem::path& dir, std::uint64_t seed = 0, double seconds = 5.0);

/// Distorted copies of `input` for audit: one wav per bank entry plus
/// bank.json. Returns the number written.
std::size_t dump_bank(const std::filesystem::path& input, MeasureVariant variant, std::uint64_t seed,
                      const BankConfig& bank, const std::filesystem::path& out_dir);

/// The banks a raw-encoder run would draw for every reference of `cfg`, under
/// out_dir/<trial>/source<id>. Returns the number of files written.
std::size_t dump_config_banks(const RunConfig& cfg, MeasureVariant variant, const std::filesystem::path& out_dir);

}  // namespace mapss
