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

#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mapss/mapss.h"

namespace {

struct Config {
  mapss_config* p = nullptr;
  ~Config() { mapss_config_free(p); }
};

struct Result {
  mapss_result* p = nullptr;
  ~Result() { mapss_result_free(p); }
};

int report(int rc, const char* what) {
  if (rc != MAPSS_OK) std::fprintf(stderr, "mapss: %s failed [%s]: %s\n", what, mapss_error_name(rc), mapss_last_error());
  return rc;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void log_line(const char* msg, void*) { std::fprintf(stderr, "%s\n", msg); }

void print_owned(char* s) {
  std::fputs(s, stdout);
  mapss_string_free(s);
}

struct Overrides {
  std::string config;
  std::string embeddings;
  std::string mos;
  std::string out;
  std::string scenario;
  std::string encoder;
  std::string bound_constants;
  long long seed = -1;
  int workers = -1;
  double delta = -1.0;
  long long mc_draws = -1;
  bool spectra = false;
  std::vector<std::string> sets;
};

void add_overrides(CLI::App* app, Overrides& o) {
  app->add_option("--config,-c", o.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  app->add_option("--mos", o.mos, "MOS table, CSV with trial,system,source,mos");
  app->add_option("--out,-o", o.out, "output directory");
  app->add_option("--scenario", o.scenario, "english, spanish, music_drums or music_nodrums");
  app->add_option("--seed,--bank-seed", o.seed, "run seed; distortion banks derive from it");
  app->add_option("--workers", o.workers, "frame worker threads (0: all cores)");
  app->add_option("--encoder", o.encoder, "raw or file")->check(CLI::IsMember({"raw", "file"}));
  app->add_option("--delta", o.delta, "bound failure probability, in (0, 1)");
  app->add_option("--mc-draws", o.mc_draws, "Monte Carlo draws for SRCC half-widths");
  app->add_option("--bound-constants", o.bound_constants, "JSON file of bound constants")->check(CLI::ExistingFile);
  app->add_flag("--spectra", o.spectra, "write per-frame graph spectra to spectra.jsonl");
  app->add_option("--set", o.sets, "override a config key, key=<json>");
}

int load(const Overrides& o, Config& c) {
  if (int rc = report(mapss_config_load(o.config.c_str(), &c.p), "loading config")) return rc;
  if (!o.scenario.empty())
    if (int rc = report(mapss_config_set(c.p, "scenario", ("\"" + o.scenario + "\"").c_str()), "--scenario")) return rc;
  if (!o.embeddings.empty()) {
    if (int rc = report(mapss_config_set_path(c.p, "embeddings", o.embeddings.c_str()), "--embeddings")) return rc;
    if (o.encoder.empty())
      if (int rc = report(mapss_config_set(c.p, "encoder", "\"file\""), "--embeddings")) return rc;
  }
  if (!o.encoder.empty())
    if (int rc = report(mapss_config_set(c.p, "encoder", ("\"" + o.encoder + "\"").c_str()), "--encoder")) return rc;
  if (!o.mos.empty())
    if (int rc = report(mapss_config_set_path(c.p, "mos", o.mos.c_str()), "--mos")) return rc;
  if (!o.bound_constants.empty())
    if (int rc = report(mapss_config_set_path(c.p, "bounds", o.bound_constants.c_str()), "--bound-constants"))
      return rc;
  if (o.delta >= 0.0)
    if (int rc = report(mapss_config_set(c.p, "delta", num(o.delta).c_str()), "--delta")) return rc;
  if (o.mc_draws >= 0)
    if (int rc = report(mapss_config_set(c.p, "mc_draws", std::to_string(o.mc_draws).c_str()), "--mc-draws")) return rc;
  if (o.spectra)
    if (int rc = report(mapss_config_set(c.p, "spectra", "true"), "--spectra")) return rc;
  if (!o.out.empty())
    if (int rc = report(mapss_config_set_path(c.p, "output_dir", o.out.c_str()), "--out")) return rc;
  if (o.seed >= 0)
    if (int rc = report(mapss_config_set(c.p, "seed", std::to_string(o.seed).c_str()), "--seed")) return rc;
  if (o.workers >= 0)
    if (int rc = report(mapss_config_set(c.p, "workers", std::to_string(o.workers).c_str()), "--workers")) return rc;
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr, "mapss: --set expects key=<json>, got '%s'\n", s.c_str());
      return MAPSS_E_CONFIG;
    }
    if (int rc = report(mapss_config_set(c.p, s.substr(0, eq).c_str(), s.substr(eq + 1).c_str()), "--set")) return rc;
  }
  return MAPSS_OK;
}

std::vector<double> parse_delays(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    out.push_back(std::stod(item, &used));
    if (used != item.size()) throw std::invalid_argument(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perceptual separation and match measures for source-separation outputs"};
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("--quiet,-q", quiet, "no progress messages");
  app.set_version_flag("--version", std::string(mapss_version()));

  Overrides ev;
  bool resume = false, as_json = false;
  auto* eval = app.add_subcommand("eval", "score every trial in a config and write reports");
  add_overrides(eval, ev);
  eval->add_option("--embeddings", ev.embeddings, "directory of <trial>/<system>.{ps,pm}.mapssemb; selects the file encoder");
  eval->add_flag("--resume", resume, "keep completed frames from an earlier run");
  eval->add_flag("--json", as_json, "print report.json instead of the text summary");

  Overrides sw;
  std::string delays;
  auto* sweep = app.add_subcommand("sweep-delay", "re-run the evaluation with delayed outputs");
  add_overrides(sweep, sw);
  sweep->add_option("--delays", delays, "comma separated delays in ms (default from config: 0,20,50,100)");

  std::string variant = "PM", bank_out, bank_input, bank_config;
  unsigned long long bank_seed = 0;
  std::size_t bank_max = 0;
  auto* bank = app.add_subcommand("bank", "write the distortion bank as wav files for audit");
  bank->add_option("--variant", variant, "PS or PM")->check(CLI::IsMember({"PS", "PM"}));
  bank->add_option("--out,-o", bank_out, "output directory")->required();
  auto* in_opt = bank->add_option("--input", bank_input, "single wav to distort")->check(CLI::ExistingFile);
  auto* cfg_opt = bank->add_option("--config,-c", bank_config, "dump the banks a run of this config uses")
                      ->check(CLI::ExistingFile);
  in_opt->excludes(cfg_opt);
  bank->add_option("--seed,--bank-seed", bank_seed, "bank seed for --input");
  bank->add_option("--max-size", bank_max, "thin the grid to this many entries for --input (0: all)");

  std::string demo_dir = "mapss_demo";
  unsigned long long demo_seed = 0;
  double demo_seconds = 5.0;
  auto* demo = app.add_subcommand("demo", "write a synthetic two-voice demo with config and MOS table");
  demo->add_option("--out,-o", demo_dir, "target directory");
  demo->add_option("--seed", demo_seed, "synthesis seed");
  demo->add_option("--seconds", demo_seconds, "duration");

  CLI11_PARSE(app, argc, argv);
  mapss_log_fn log = quiet ? nullptr : log_line;

  if (*eval) {
    Config c;
    if (int rc = load(ev, c)) return rc;
    Result r;
    if (int rc = report(mapss_evaluate(c.p, resume ? 1 : 0, log, nullptr, &r.p), "evaluation")) return rc;
    char* s = nullptr;
    if (int rc = report(as_json ? mapss_result_json(r.p, &s) : mapss_result_text(r.p, &s), "rendering")) return rc;
    print_owned(s);
    if (as_json) std::fputc('\n', stdout);
    return 0;
  }
  if (*sweep) {
    Config c;
    if (int rc = load(sw, c)) return rc;
    std::vector<double> d;
    try {
      d = parse_delays(delays);
    } catch (const std::exception&) {
      std::fprintf(stderr, "mapss: --delays expects numbers separated by commas\n");
      return MAPSS_E_CONFIG;
    }
    Result r;
    if (int rc = report(mapss_sweep_delay(c.p, d.data(), d.size(), log, nullptr, &r.p), "sweep")) return rc;
    char* s = nullptr;
    if (int rc = report(mapss_result_text(r.p, &s), "rendering")) return rc;
    print_owned(s);
    return 0;
  }
  if (*bank) {
    std::size_t n = 0;
    if (!bank_config.empty()) {
      Config c;
      if (int rc = report(mapss_config_load(bank_config.c_str(), &c.p), "loading config")) return rc;
      if (int rc = report(mapss_dump_config_banks(c.p, variant.c_str(), bank_out.c_str(), &n), "bank")) return rc;
    } else if (!bank_input.empty()) {
      if (int rc = report(mapss_dump_bank(bank_input.c_str(), variant.c_str(), bank_seed, bank_max, bank_out.c_str(), &n),
                          "bank"))
        return rc;
    } else {
      std::fprintf(stderr, "mapss: bank needs --input <wav> or --config <file>\n");
      return MAPSS_E_INVALID_ARGUMENT;
    }
    std::printf("wrote %zu %s distortions under %s\n", n, variant.c_str(), bank_out.c_str());
    return 0;
  }
  if (*demo) {
    char* path = nullptr;
    if (int rc = report(mapss_write_demo(demo_dir.c_str(), demo_seed, demo_seconds, &path), "demo")) return rc;
    std::printf("demo written; run:\n  mapss eval --config %s\n  mapss sweep-delay --config %s --delays 0,20,50,100\n",
                path, path);
    mapss_string_free(path);
    return 0;
  }
  return 0;
}
