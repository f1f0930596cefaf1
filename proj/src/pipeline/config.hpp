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
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "aggregate/aggregate.hpp"
#include "bounds/bounds.hpp"
#include "distortions/bank.hpp"
#include "preprocess/framing.hpp"

namespace mapss {

enum class Scenario { kEnglish, kSpanish, kMusicDrums, kMusicNoDrums };
enum class Encoder { kRaw, kFile };

std::string_view scenario_name(Scenario s);
Scenario parse_scenario(std::string_view s);
std::string_view encoder_name(Encoder e);
Encoder parse_encoder(std::string_view s);

struct TrialSpec {
  std::string id;
  std::map<int, std::filesystem::path> references;                          // source id -> wav
  std::map<std::string, std::map<int, std::filesystem::path>> systems;      // system -> source id -> wav
};

struct MeasureSettings {
  double alpha = 1.0;
  int t = 1;
  double tau = 0.99;
  AggregationConfig aggregation;
  BankConfig bank;
  nlohmann::json bank_json;  // as given, echoed in reports
};

struct RunConfig {
  Scenario scenario = Scenario::kEnglish;
  MeasureSettings ps;
  MeasureSettings pm;
  BoundConfig bounds;
  PlanParams plan;
  double target_lufs = -23.0;
  Encoder encoder = Encoder::kRaw;
  std::filesystem::path embeddings;  // directory of <trial>/<system>.{ps,pm}.mapssemb
  std::filesystem::path mos;
  std::filesystem::path output_dir = "mapss_out";
  std::uint64_t seed = 0;
  std::size_t mc_draws = 10000;
  double rho = 0.0;
  std::size_t workers = 0;  // 0: one per hardware thread
  bool plots = true;
  bool spectra = false;  // graph and spectrum summary per frame set in spectra.jsonl
  std::vector<double> delays = {0.0, 20.0, 50.0, 100.0};
  std::vector<TrialSpec> trials;

  double confidence() const { return 1.0 - bounds.delta; }
  void validate() const;
};

/// Per-scenario measure settings plus the frame geometry of the scenario family.
RunConfig scenario_preset(Scenario s);

/// Starts from the preset of j["scenario"] and applies every other key.
/// Relative paths resolve against `base_dir`. Unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Effective settings (without the trial list) for reports.
nlohmann::json run_config_summary(const RunConfig& c);

}  // namespace mapss
