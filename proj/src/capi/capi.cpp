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

#include "mapss/mapss.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "aggregate/aggregate.hpp"
#include "common/error.hpp"
#include "evalreport/correlation.hpp"
#include "measures/measures.hpp"
#include "pipeline/pipeline.hpp"

struct mapss_config {
  nlohmann::json j;
  std::filesystem::path base;
};

struct mapss_result {
  nlohmann::json j;
  std::string text;
};

namespace {

using mapss::ErrorCode;

thread_local std::string g_last_error;

template <typename F>
int guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return MAPSS_OK;
  } catch (const mapss::Error& e) {
    g_last_error = e.what();
    return static_cast<int>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown failure";
  }
  return MAPSS_E_INTERNAL;
}

void need(const void* p, const char* what) {
  if (!p) mapss::fail(ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

mapss::RunConfig effective(const mapss_config* c) { return mapss::run_config_from_json(c->j, c->base); }

mapss::RunOptions options(mapss_log_fn log, void* user) {
  mapss::RunOptions o;
  if (log) o.log = [log, user](const std::string& m) { log(m.c_str(), user); };
  return o;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

extern "C" {

const char* mapss_version(void) { return "0.1.0"; }

const char* mapss_last_error(void) { return g_last_error.c_str(); }

const char* mapss_error_name(int code) { return mapss::error_code_name(static_cast<ErrorCode>(code)); }

void mapss_string_free(char* s) { std::free(s); }

int mapss_config_load(const char* path, mapss_config** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    std::ifstream f(path);
    mapss::require(static_cast<bool>(f), ErrorCode::kIoError, std::string("cannot open config ") + path);
    auto c = std::make_unique<mapss_config>();
    try {
      f >> c->j;
    } catch (const nlohmann::json::exception& e) {
      mapss::fail(ErrorCode::kConfigError, std::string("config is not valid JSON: ") + e.what());
    }
    c->base = std::filesystem::absolute(path).parent_path();
    effective(c.get());
    *out = c.release();
  });
}

int mapss_config_parse(const char* json_text, const char* base_dir, mapss_config** out) {
  return guard([&] {
    need(json_text, "json_text");
    need(out, "out");
    auto c = std::make_unique<mapss_config>();
    try {
      c->j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
      mapss::fail(ErrorCode::kConfigError, std::string("config is not valid JSON: ") + e.what());
    }
    c->base = base_dir ? std::filesystem::path(base_dir) : std::filesystem::current_path();
    effective(c.get());
    *out = c.release();
  });
}

int mapss_config_set(mapss_config* cfg, const char* key, const char* json_value) {
  return guard([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(json_value, "json_value");
    nlohmann::json v;
    try {
      v = nlohmann::json::parse(json_value);
    } catch (const nlohmann::json::exception& e) {
      mapss::fail(ErrorCode::kConfigError, std::string("value for '") + key + "' is not JSON: " + e.what());
    }
    nlohmann::json next = cfg->j;
    next[key] = v;
    mapss::run_config_from_json(next, cfg->base);
    cfg->j = std::move(next);
  });
}

int mapss_config_set_path(mapss_config* cfg, const char* key, const char* path) {
  return guard([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(path, "path");
    nlohmann::json next = cfg->j;
    next[key] = std::filesystem::absolute(path).string();
    mapss::run_config_from_json(next, cfg->base);
    cfg->j = std::move(next);
  });
}

int mapss_config_effective(const mapss_config* cfg, char** json_out) {
  return guard([&] {
    need(cfg, "cfg");
    need(json_out, "json_out");
    const auto c = effective(cfg);
    auto j = mapss::run_config_summary(c);
    j["output_dir"] = c.output_dir.string();
    j["trials"] = c.trials.size();
    *json_out = dup(j.dump(2));
  });
}

void mapss_config_free(mapss_config* cfg) { delete cfg; }

int mapss_evaluate(const mapss_config* cfg, int resume, mapss_log_fn log, void* user, mapss_result** out) {
  return guard([&] {
    need(cfg, "cfg");
    need(out, "out");
    mapss::RunOptions o = options(log, user);
    o.resume = resume != 0;
    const auto s = mapss::run_evaluation(effective(cfg), o);
    auto r = std::make_unique<mapss_result>();
    r->j = s.json;
    r->j["output_dir"] = s.output_dir.string();
    r->j["frames"]["scored"] = s.frames_scored;
    r->j["frames"]["resumed"] = s.frames_resumed;
    r->text = read_file(s.output_dir / "report.txt");
    *out = r.release();
  });
}

int mapss_sweep_delay(const mapss_config* cfg, const double* delays_ms, size_t n, mapss_log_fn log, void* user,
                      mapss_result** out) {
  return guard([&] {
    need(cfg, "cfg");
    need(out, "out");
    if (n) need(delays_ms, "delays_ms");
    const auto c = effective(cfg);
    const std::vector<double> delays = n ? std::vector<double>(delays_ms, delays_ms + n) : c.delays;
    const auto rows = mapss::misalignment_sweep(c, delays, options(log, user));
    auto r = std::make_unique<mapss_result>();
    r->j = {{"output_dir", c.output_dir.string()}, {"rows", mapss::sweep_json(rows)}};
    r->text = read_file(c.output_dir / "sweep.csv");
    *out = r.release();
  });
}

int mapss_result_json(const mapss_result* r, char** json_out) {
  return guard([&] {
    need(r, "result");
    need(json_out, "json_out");
    *json_out = dup(r->j.dump(2));
  });
}

int mapss_result_text(const mapss_result* r, char** text_out) {
  return guard([&] {
    need(r, "result");
    need(text_out, "text_out");
    *text_out = dup(r->text);
  });
}

int mapss_result_number(const mapss_result* r, const char* pointer, double* out) {
  return guard([&] {
    need(r, "result");
    need(pointer, "pointer");
    need(out, "out");
    try {
      const auto& v = r->j.at(nlohmann::json::json_pointer(pointer));
      mapss::require(v.is_number(), ErrorCode::kInvalidArgument, std::string(pointer) + " is not a number");
      *out = v.get<double>();
    } catch (const nlohmann::json::exception& e) {
      mapss::fail(ErrorCode::kInvalidArgument, std::string("no number at ") + pointer + ": " + e.what());
    }
  });
}

void mapss_result_free(mapss_result* r) { delete r; }

int mapss_write_demo(const char* dir, uint64_t seed, double seconds, char** config_path) {
  return guard([&] {
    need(dir, "dir");
    need(config_path, "config_path");
    *config_path = dup(mapss::write_demo(dir, seed, seconds).string());
  });
}

int mapss_dump_bank(const char* wav_path, const char* variant, uint64_t seed, size_t max_size, const char* out_dir,
                    size_t* written) {
  return guard([&] {
    need(wav_path, "wav_path");
    need(variant, "variant");
    need(out_dir, "out_dir");
    mapss::BankConfig b;
    b.max_size = max_size;
    const std::size_t n = mapss::dump_bank(wav_path, mapss::parse_variant(variant), seed, b, out_dir);
    if (written) *written = n;
  });
}

int mapss_dump_config_banks(const mapss_config* cfg, const char* variant, const char* out_dir, size_t* written) {
  return guard([&] {
    need(cfg, "cfg");
    need(variant, "variant");
    need(out_dir, "out_dir");
    const std::size_t n = mapss::dump_config_banks(effective(cfg), mapss::parse_variant(variant), out_dir);
    if (written) *written = n;
  });
}

int mapss_ps_from_distances(double a, double b, double* out) {
  return guard([&] {
    need(out, "out");
    *out = mapss::ps_from_distances(a, b);
  });
}

int mapss_pm_from_gamma(double k, double theta, double a_hat, double* out) {
  return guard([&] {
    need(out, "out");
    *out = mapss::compute_pm(k, theta, a_hat);
  });
}

int mapss_pcc(const double* x, const double* y, size_t n, double* out) {
  return guard([&] {
    need(x, "x");
    need(y, "y");
    need(out, "out");
    *out = mapss::pcc({x, n}, {y, n});
  });
}

int mapss_srcc(const double* x, const double* y, size_t n, double* out) {
  return guard([&] {
    need(x, "x");
    need(y, "y");
    need(out, "out");
    *out = mapss::srcc({x, n}, {y, n});
  });
}

int mapss_pesq_pool(const double* v, size_t n, size_t window, size_t hop, double p, double* out) {
  return guard([&] {
    need(v, "v");
    need(out, "out");
    mapss::AggregationConfig c;
    c.method = mapss::AggregationMethod::kPesq;
    c.window = window;
    c.hop = hop;
    c.p = p;
    c.validate();
    *out = mapss::aggregate_pesq({v, n}, c);
  });
}

}  // extern "C"
