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

#include "pipeline/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "common/error.hpp"

namespace mapss {
namespace {

using nlohmann::json;

template <typename T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfigError, std::string("config key '") + key + "': " + e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path q(p);
  return q.is_absolute() || base.empty() ? q : base / q;
}

json load_json_file(const std::filesystem::path& p, const std::string& what) {
  std::ifstream f(p);
  require(static_cast<bool>(f), ErrorCode::kIoError, "cannot open " + what + " file " + p.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfigError, what + " file " + p.string() + " is not valid JSON: " + e.what());
  }
}

// An object, or a path to a JSON file holding one.
json inline_or_file(const json& v, const std::filesystem::path& base, const std::string& what) {
  return v.is_string() ? load_json_file(resolve(base, v.get<std::string>()), what) : v;
}

AggregationConfig aggregation_from_json(const json& j, AggregationConfig a) {
  if (!j.is_object()) fail(ErrorCode::kConfigError, "aggregation must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "method") a.method = parse_aggregation(get<std::string>(j, "method"));
    else if (k == "window") a.window = get<std::size_t>(j, "window");
    else if (k == "hop") a.hop = get<std::size_t>(j, "hop");
    else if (k == "p") a.p = get<double>(j, "p");
    else fail(ErrorCode::kConfigError, "unknown aggregation key '" + k + "'");
  }
  a.validate();
  return a;
}

json aggregation_json(const AggregationConfig& a) {
  json j{{"method", aggregation_name(a.method)}};
  if (a.method == AggregationMethod::kPesq) {
    j["window"] = a.window;
    j["hop"] = a.hop;
    j["p"] = a.p;
  }
  return j;
}

void apply_measure(const json& j, MeasureSettings& m, MeasureVariant v, const std::filesystem::path& base) {
  if (!j.is_object()) fail(ErrorCode::kConfigError, "measure settings must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "alpha") m.alpha = get<double>(j, "alpha");
    else if (k == "t") m.t = get<int>(j, "t");
    else if (k == "tau") m.tau = get<double>(j, "tau");
    else if (k == "aggregation") m.aggregation = aggregation_from_json(j.at(k), m.aggregation);
    else if (k == "bank") {
      m.bank_json = inline_or_file(j.at(k), base, "bank");
      m.bank = bank_config_from_json(m.bank_json, v);
    } else {
      fail(ErrorCode::kConfigError, "unknown measure key '" + k + "'");
    }
  }
}

std::map<int, std::filesystem::path> source_map(const json& j, const std::filesystem::path& base, const std::string& what) {
  if (!j.is_object()) fail(ErrorCode::kConfigError, what + " must map source ids to wav paths");
  std::map<int, std::filesystem::path> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    int id = -1;
    try {
      std::size_t used = 0;
      id = std::stoi(it.key(), &used);
      if (used != it.key().size()) id = -1;
    } catch (const std::logic_error&) {
    }
    require(id >= 0, ErrorCode::kConfigError, what + ": source id '" + it.key() + "' is not a non-negative integer");
    if (!it->is_string()) fail(ErrorCode::kConfigError, what + ": path for source " + it.key() + " must be a string");
    out[id] = resolve(base, it->get<std::string>());
  }
  return out;
}

TrialSpec trial_from_json(const json& j, const std::filesystem::path& base, std::size_t index) {
  if (!j.is_object()) fail(ErrorCode::kConfigError, "each trial must be an object");
  TrialSpec t;
  t.id = j.contains("id") ? get<std::string>(j, "id") : "trial" + std::to_string(index);
  if (!j.contains("references") || !j.contains("systems"))
    fail(ErrorCode::kConfigError, "trial " + t.id + " needs 'references' and 'systems'");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "id" && it.key() != "references" && it.key() != "systems")
      fail(ErrorCode::kConfigError, "unknown trial key '" + it.key() + "'");
  t.references = source_map(j.at("references"), base, "trial " + t.id + " references");
  const json& s = j.at("systems");
  if (!s.is_object()) fail(ErrorCode::kConfigError, "trial " + t.id + " systems must be an object");
  for (auto it = s.begin(); it != s.end(); ++it)
    t.systems[it.key()] = source_map(*it, base, "trial " + t.id + " system " + it.key());
  return t;
}

}  // namespace

std::string_view scenario_name(Scenario s) {
  switch (s) {
    case Scenario::kEnglish: return "english";
    case Scenario::kSpanish: return "spanish";
    case Scenario::kMusicDrums: return "music_drums";
    case Scenario::kMusicNoDrums: return "music_nodrums";
  }
  return "?";
}

Scenario parse_scenario(std::string_view s) {
  for (Scenario x : {Scenario::kEnglish, Scenario::kSpanish, Scenario::kMusicDrums, Scenario::kMusicNoDrums})
    if (scenario_name(x) == s) return x;
  fail(ErrorCode::kConfigError, "unknown scenario '" + std::string(s) + "'");
}

std::string_view encoder_name(Encoder e) { return e == Encoder::kRaw ? "raw" : "file"; }

Encoder parse_encoder(std::string_view s) {
  if (s == "raw") return Encoder::kRaw;
  if (s == "file") return Encoder::kFile;
  fail(ErrorCode::kConfigError, "unknown encoder '" + std::string(s) + "'");
}

RunConfig scenario_preset(Scenario s) {
  RunConfig c;
  c.scenario = s;
  c.ps.aggregation.method = AggregationMethod::kPesq;
  c.pm.aggregation.method = AggregationMethod::kAverage;
  c.ps.alpha = c.pm.alpha = s == Scenario::kMusicDrums ? 0.0 : 1.0;
  c.ps.t = c.pm.t = 1;
  if (s == Scenario::kMusicDrums || s == Scenario::kMusicNoDrums) {
    c.plan.frame_ms = 160.0;
    c.plan.hop_ms = 100.0;
  }
  return c;
}

void RunConfig::validate() const {
  for (const MeasureSettings* m : {&ps, &pm}) {
    require(m->alpha >= 0.0 && m->alpha <= 1.0, ErrorCode::kConfigError, "alpha must lie in [0, 1]");
    require(m->t >= 1, ErrorCode::kConfigError, "diffusion time t must be >= 1");
    require(m->tau > 0.0 && m->tau <= 1.0, ErrorCode::kConfigError, "tau must lie in (0, 1]");
    m->aggregation.validate();
  }
  bounds.validate();
  require(plan.frame_ms > 0.0 && plan.hop_ms > 0.0 && plan.hop_ms <= plan.frame_ms, ErrorCode::kConfigError,
          "frame geometry needs 0 < hop_ms <= frame_ms");
  require(std::isfinite(target_lufs), ErrorCode::kConfigError, "target_lufs must be finite");
  require(mc_draws >= 1, ErrorCode::kConfigError, "mc_draws must be positive");
  require(rho >= -1.0 && rho <= 1.0, ErrorCode::kConfigError, "rho must lie in [-1, 1]");
  require(encoder == Encoder::kRaw || !embeddings.empty(), ErrorCode::kConfigError,
          "file encoder needs an embeddings directory");
  for (double d : delays) require(d >= 0.0, ErrorCode::kConfigError, "delays must be non-negative");
  std::set<std::string> ids;
  for (const auto& t : trials) {
    require(ids.insert(t.id).second, ErrorCode::kConfigError, "duplicate trial id " + t.id);
    require(t.references.size() >= 2, ErrorCode::kConfigError, "trial " + t.id + " needs at least two sources");
    require(!t.systems.empty(), ErrorCode::kConfigError, "trial " + t.id + " has no systems");
    for (const auto& [name, outs] : t.systems) {
      std::set<int> a, b;
      for (const auto& [id, p] : outs) a.insert(id);
      for (const auto& [id, p] : t.references) b.insert(id);
      require(a == b, ErrorCode::kConfigError,
              "trial " + t.id + " system " + name + " must provide one output per reference source");
    }
  }
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base) {
  if (!j.is_object()) fail(ErrorCode::kConfigError, "config must be a JSON object");
  RunConfig c = scenario_preset(j.contains("scenario") ? parse_scenario(get<std::string>(j, "scenario"))
                                                      : Scenario::kEnglish);
  json bounds = bound_config_json(c.bounds);
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "scenario") continue;
    if (k == "alpha" || k == "t" || k == "tau") {
      const json one{{k, *it}};
      apply_measure(one, c.ps, MeasureVariant::kPS, base);
      apply_measure(one, c.pm, MeasureVariant::kPM, base);
    } else if (k == "agg" || k == "agg.window" || k == "agg.hop" || k == "agg.p") {
      // pooling geometry shared by both measures; the method stays per measure
      json a = k == "agg" ? *it : json{{k.substr(4), *it}};
      if (!a.is_object()) fail(ErrorCode::kConfigError, "agg must be an object");
      if (a.contains("method")) fail(ErrorCode::kConfigError, "agg sets window, hop and p; the method is per measure");
      for (auto it2 = a.begin(); it2 != a.end(); ++it2) {
        const std::string& f = it2.key();
        if (f == "window") c.ps.aggregation.window = c.pm.aggregation.window = get<std::size_t>(a, "window");
        else if (f == "hop") c.ps.aggregation.hop = c.pm.aggregation.hop = get<std::size_t>(a, "hop");
        else if (f == "p") c.ps.aggregation.p = c.pm.aggregation.p = get<double>(a, "p");
        else fail(ErrorCode::kConfigError, "unknown agg key '" + f + "'");
      }
    } else if (k == "ps") {
      apply_measure(*it, c.ps, MeasureVariant::kPS, base);
    } else if (k == "pm") {
      apply_measure(*it, c.pm, MeasureVariant::kPM, base);
    } else if (k == "delta") {
      bounds["delta"] = *it;
    } else if (k == "bounds") {
      const json b = inline_or_file(*it, base, "bound constants");
      if (!b.is_object()) fail(ErrorCode::kConfigError, "bounds must be an object or a path to one");
      bounds.update(b);
    } else if (k == "frame_ms") {
      c.plan.frame_ms = get<double>(j, "frame_ms");
    } else if (k == "hop_ms") {
      c.plan.hop_ms = get<double>(j, "hop_ms");
    } else if (k == "activity_db") {
      c.plan.activity_db = get<double>(j, "activity_db");
    } else if (k == "target_lufs") {
      c.target_lufs = get<double>(j, "target_lufs");
    } else if (k == "encoder") {
      c.encoder = parse_encoder(get<std::string>(j, "encoder"));
    } else if (k == "embeddings") {
      c.embeddings = resolve(base, get<std::string>(j, "embeddings"));
    } else if (k == "mos") {
      c.mos = resolve(base, get<std::string>(j, "mos"));
    } else if (k == "output_dir") {
      c.output_dir = resolve(base, get<std::string>(j, "output_dir"));
    } else if (k == "seed") {
      c.seed = get<std::uint64_t>(j, "seed");
    } else if (k == "mc_draws") {
      c.mc_draws = get<std::size_t>(j, "mc_draws");
    } else if (k == "rho") {
      c.rho = get<double>(j, "rho");
    } else if (k == "workers") {
      c.workers = get<std::size_t>(j, "workers");
    } else if (k == "plots") {
      c.plots = get<bool>(j, "plots");
    } else if (k == "spectra") {
      c.spectra = get<bool>(j, "spectra");
    } else if (k == "delays") {
      c.delays = get<std::vector<double>>(j, "delays");
    } else if (k == "trials") {
      if (!it->is_array()) fail(ErrorCode::kConfigError, "trials must be an array");
      for (std::size_t n = 0; n < it->size(); ++n) c.trials.push_back(trial_from_json((*it)[n], base, n));
    } else {
      fail(ErrorCode::kConfigError, "unknown config key '" + k + "'");
    }
  }
  c.bounds = bound_config_from_json(bounds);
  c.ps.aggregation.validate();
  c.pm.aggregation.validate();
  if (!j.contains("output_dir")) c.output_dir = resolve(base, "mapss_out");
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  require(static_cast<bool>(f), ErrorCode::kIoError, "cannot open config " + path.string());
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfigError, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

json run_config_summary(const RunConfig& c) {
  auto measure = [](const MeasureSettings& m) {
    return json{{"alpha", m.alpha},
                {"t", m.t},
                {"tau", m.tau},
                {"aggregation", aggregation_json(m.aggregation)},
                {"bank", m.bank_json}};
  };
  return {{"scenario", scenario_name(c.scenario)},
          {"ps", measure(c.ps)},
          {"pm", measure(c.pm)},
          {"bounds", bound_config_json(c.bounds)},
          {"frame_ms", c.plan.frame_ms},
          {"hop_ms", c.plan.hop_ms},
          {"activity_db", c.plan.activity_db},
          {"target_lufs", c.target_lufs},
          {"encoder", encoder_name(c.encoder)},
          {"seed", c.seed},
          {"mc_draws", c.mc_draws},
          {"rho", c.rho},
          {"spectra", c.spectra}};
}

}  // namespace mapss
