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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bounds/bounds.hpp"

namespace mapss {

enum class Measure { kPS, kPM };

/// One utterance of one system: source `source` in trial `trial`.
struct ScoreRow {
  std::string trial;
  std::string system;
  int source = 0;
  std::size_t frames = 0;
  std::size_t pm_frames = 0;  // frames with a valid PM bound
  double ps = 0.0;  // PESQ scale when pooled that way
  double pm = 0.0;  // NaN when no frame is valid
  UtteranceBound ps_bound;
  UtteranceBound pm_bound;
  std::optional<double> mos;
};

struct ScoreTable {
  std::string scenario;
  std::vector<ScoreRow> rows;

  /// Throws InvalidArgument on a repeated (trial, system, source).
  void check_unique() const;
};

struct MosEntry {
  std::string trial;
  std::string system;
  int source = 0;
  double mos = 0.0;
};

/// CSV with a header naming at least trial, system, source, mos.
std::vector<MosEntry> read_mos_csv(const std::filesystem::path& path);
std::vector<MosEntry> parse_mos_csv(const std::string& text);

/// Fills row.mos from matching entries; returns the number matched.
std::size_t attach_mos(ScoreTable& table, const std::vector<MosEntry>& mos);

struct GroupCoefficient {
  std::string trial;
  int source = 0;
  std::size_t systems = 0;
  double pcc = 0.0;
  double srcc = 0.0;
  std::optional<CorrelationBound> pcc_bound;  // needs three systems
  std::optional<CorrelationBound> srcc_bound;
};

struct MeasureReport {
  double pcc = 0.0;
  double srcc = 0.0;
  std::optional<CorrelationBound> pcc_bound;
  std::optional<CorrelationBound> srcc_bound;
  std::vector<GroupCoefficient> groups;
  std::size_t skipped = 0;  // constant or undefined score vectors, constant MOS
};

struct ReportOptions {
  double confidence = 0.95;
  std::size_t draws = 10000;
  std::uint64_t seed = 0;
  double rho = 0.0;
};

struct ScenarioReport {
  std::string scenario;
  MeasureReport ps;
  MeasureReport pm;
};

/// Mean over (trial, source) of the per-group coefficients across systems.
/// Rows without MOS are ignored. Throws InsufficientSystems when a group has
/// fewer than two systems, InvalidArgument when sources of one trial were
/// scored on different system sets.
ScenarioReport scenario_report(const ScoreTable& table, const ReportOptions& opt = {});
MeasureReport measure_report(const ScoreTable& table, Measure m, const ReportOptions& opt = {});

/// Min-max rescale to [0, 1]; a constant input maps to zeros.
std::vector<double> minmax_normalize(std::span<const double> x);

inline constexpr std::size_t kNmiBins = 10;
inline constexpr std::size_t kNmiMinFrames = 50;

/// Histogram NMI with equal-width bins over each variable's observed range,
/// normalized by the mean of the marginal entropies. Zero when both
/// marginals are degenerate.
double nmi(std::span<const double> x, std::span<const double> y, std::size_t bins = kNmiBins);

struct NmiPoint {
  double threshold = 0.0;
  std::size_t count_ps = 0;  // frames with PS <= threshold
  std::size_t count_pm = 0;
  std::optional<double> nmi_ps;  // conditioned on PS
  std::optional<double> nmi_pm;
};

std::vector<double> default_thresholds();

std::vector<NmiPoint> nmi_thresholded(std::span<const double> ps, std::span<const double> pm,
                                      std::span<const double> thresholds, std::size_t bins = kNmiBins,
                                      std::size_t min_frames = kNmiMinFrames);

nlohmann::json report_json(const ScenarioReport& r);
nlohmann::json nmi_json(const std::vector<NmiPoint>& curve);
std::string report_text(const ScenarioReport& r);
std::string nmi_text(const std::vector<NmiPoint>& curve);

std::string nmi_svg(const std::vector<NmiPoint>& curve);
std::string histogram_svg(std::span<const double> ps, std::span<const double> pm, std::size_t bins = 20);

}  // namespace mapss
