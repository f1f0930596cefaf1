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

#ifndef MAPSS_MAPSS_H
#define MAPSS_MAPSS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MAPSS_BUILDING)
#    define MAPSS_API __declspec(dllexport)
#  else
#    define MAPSS_API __declspec(dllimport)
#  endif
#else
#  define MAPSS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Return codes. Every function returning int reports one of these; details
 * of the last failure on the calling thread are in mapss_last_error(). */
enum {
  MAPSS_OK = 0,
  MAPSS_E_INVALID_ARGUMENT = 1,
  MAPSS_E_SILENT_INPUT = 2,
  MAPSS_E_LENGTH_MISMATCH = 3,
  MAPSS_E_DELAY_TOO_LONG = 4,
  MAPSS_E_INVALID_PARAMS = 5,
  MAPSS_E_TOO_SHORT = 6,
  MAPSS_E_FORMAT = 7,
  MAPSS_E_SHAPE = 8,
  MAPSS_E_DIMENSION_MISMATCH = 9,
  MAPSS_E_DEGENERATE_GRAPH = 10,
  MAPSS_E_EIG_SOLVER = 11,
  MAPSS_E_NON_POSITIVE_SPECTRUM = 12,
  MAPSS_E_INDEX_OUT_OF_RANGE = 13,
  MAPSS_E_SOLVE = 14,
  MAPSS_E_SINGLE_SOURCE = 15,
  MAPSS_E_DEGENERATE_MOMENTS = 16,
  MAPSS_E_COMPLEMENT_NOT_PD = 17,
  MAPSS_E_EMPTY_SET = 18,
  MAPSS_E_ZERO_VARIANCE = 19,
  MAPSS_E_INSUFFICIENT_SYSTEMS = 20,
  MAPSS_E_IO = 21,
  MAPSS_E_CONFIG = 22,
  MAPSS_E_INTERNAL = 99
};

typedef struct mapss_config mapss_config;
typedef struct mapss_result mapss_result;

/* Progress messages; `user` is passed through unchanged. */
typedef void (*mapss_log_fn)(const char* message, void* user);

MAPSS_API const char* mapss_version(void);
/* Message of the last failure on this thread; empty after a success. */
MAPSS_API const char* mapss_last_error(void);
MAPSS_API const char* mapss_error_name(int code);

/* Strings returned through char** are owned by the caller. */
MAPSS_API void mapss_string_free(char* s);

/* Run configuration (JSON). Relative paths in the file resolve against the
 * file's directory. */
MAPSS_API int mapss_config_load(const char* path, mapss_config** out);
MAPSS_API int mapss_config_parse(const char* json_text, const char* base_dir, mapss_config** out);
/* Replaces top-level `key` with a JSON value, e.g. ("seed", "7"). */
MAPSS_API int mapss_config_set(mapss_config* cfg, const char* key, const char* json_value);
/* Sets a path-valued key (output_dir, mos, embeddings) relative to the
 * current directory. */
MAPSS_API int mapss_config_set_path(mapss_config* cfg, const char* key, const char* path);
/* Effective settings after presets and overrides. */
MAPSS_API int mapss_config_effective(const mapss_config* cfg, char** json_out);
MAPSS_API void mapss_config_free(mapss_config* cfg);

MAPSS_API int mapss_evaluate(const mapss_config* cfg, int resume, mapss_log_fn log, void* user,
                             mapss_result** out);
/* n == 0 uses the config's delay list. */
MAPSS_API int mapss_sweep_delay(const mapss_config* cfg, const double* delays_ms, size_t n, mapss_log_fn log,
                                void* user, mapss_result** out);
MAPSS_API int mapss_result_json(const mapss_result* r, char** json_out);
MAPSS_API int mapss_result_text(const mapss_result* r, char** text_out);
/* Number at a JSON pointer into the result, e.g. "/frames/mean_ps". */
MAPSS_API int mapss_result_number(const mapss_result* r, const char* pointer, double* out);
MAPSS_API void mapss_result_free(mapss_result* r);

/* Writes the synthetic two-voice demo; *config_path receives its config. */
MAPSS_API int mapss_write_demo(const char* dir, uint64_t seed, double seconds, char** config_path);
/* variant is "PS" or "PM"; max_size 0 keeps the whole grid. */
MAPSS_API int mapss_dump_bank(const char* wav_path, const char* variant, uint64_t seed, size_t max_size,
                              const char* out_dir, size_t* written);
MAPSS_API int mapss_dump_config_banks(const mapss_config* cfg, const char* variant, const char* out_dir,
                                      size_t* written);

/* Closed-form pieces. */
MAPSS_API int mapss_ps_from_distances(double a, double b, double* out);
MAPSS_API int mapss_pm_from_gamma(double k, double theta, double a_hat, double* out);
MAPSS_API int mapss_pcc(const double* x, const double* y, size_t n, double* out);
MAPSS_API int mapss_srcc(const double* x, const double* y, size_t n, double* out);
MAPSS_API int mapss_pesq_pool(const double* v, size_t n, size_t window, size_t hop, double p, double* out);

#ifdef __cplusplus
}
#endif

#endif
