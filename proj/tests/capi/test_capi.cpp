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
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "mapss/mapss.h"

namespace fs = std::filesystem;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  mapss_string_free(s);
  return out;
}

}  // namespace

TEST(CApi, VersionAndNames) {
  EXPECT_STREQ(mapss_version(), "0.1.0");
  EXPECT_STRNE(mapss_error_name(MAPSS_E_CONFIG), mapss_error_name(MAPSS_OK));
}

TEST(CApi, NumericsAndErrors) {
  double v = 0;
  ASSERT_EQ(mapss_ps_from_distances(1.0, 3.0, &v), MAPSS_OK);
  EXPECT_DOUBLE_EQ(v, 0.75);
  EXPECT_STREQ(mapss_last_error(), "");

  const double x[] = {1, 2, 3, 4}, y[] = {2, 4, 6, 8}, z[] = {1, 1, 1, 1};
  ASSERT_EQ(mapss_pcc(x, y, 4, &v), MAPSS_OK);
  EXPECT_NEAR(v, 1.0, 1e-15);
  ASSERT_EQ(mapss_srcc(x, y, 4, &v), MAPSS_OK);
  EXPECT_DOUBLE_EQ(v, 1.0);

  EXPECT_EQ(mapss_pcc(x, z, 4, &v), MAPSS_E_ZERO_VARIANCE);
  EXPECT_STRNE(mapss_last_error(), "");
  EXPECT_EQ(mapss_pcc(nullptr, y, 4, &v), MAPSS_E_INVALID_ARGUMENT);
  EXPECT_EQ(mapss_pm_from_gamma(-1.0, 1.0, 0.5, &v), MAPSS_E_INVALID_ARGUMENT);
  EXPECT_EQ(mapss_pesq_pool(x, 4, 0, 1, 6.0, &v), MAPSS_E_CONFIG);

  ASSERT_EQ(mapss_pm_from_gamma(2.0, 1.0, 0.0, &v), MAPSS_OK);
  EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(CApi, LastErrorIsPerThread) {
  double v = 0;
  const double x[] = {1, 1};
  ASSERT_NE(mapss_pcc(x, x, 2, &v), MAPSS_OK);
  std::string other;
  std::thread([&] { other = mapss_last_error(); }).join();
  EXPECT_EQ(other, "");
  EXPECT_STRNE(mapss_last_error(), "");
}

TEST(CApi, ConfigRoundTrip) {
  mapss_config* c = nullptr;
  EXPECT_EQ(mapss_config_parse("{ not json", nullptr, &c), MAPSS_E_CONFIG);
  EXPECT_EQ(c, nullptr);
  ASSERT_EQ(mapss_config_parse(R"({"scenario":"music_drums"})", "/tmp", &c), MAPSS_OK);
  EXPECT_EQ(mapss_config_set(c, "seed", "11"), MAPSS_OK);
  EXPECT_EQ(mapss_config_set(c, "alpha", "2"), MAPSS_E_CONFIG);
  EXPECT_EQ(mapss_config_set(c, "nonsense", "1"), MAPSS_E_CONFIG);
  char* s = nullptr;
  ASSERT_EQ(mapss_config_effective(c, &s), MAPSS_OK);
  const std::string eff = take(s);
  EXPECT_NE(eff.find("music_drums"), std::string::npos);
  EXPECT_NE(eff.find("\"seed\": 11"), std::string::npos);
  mapss_config_free(c);
  mapss_config_free(nullptr);
  mapss_result_free(nullptr);
}

TEST(CApi, DemoEvaluateAndSweep) {
  const fs::path dir = fs::temp_directory_path() / "mapss_capi_demo";
  fs::remove_all(dir);
  char* path = nullptr;
  ASSERT_EQ(mapss_write_demo(dir.c_str(), 5, 1.5, &path), MAPSS_OK);
  mapss_config* c = nullptr;
  ASSERT_EQ(mapss_config_load(path, &c), MAPSS_OK) << mapss_last_error();
  mapss_string_free(path);

  std::vector<std::string> log;
  auto sink = [](const char* m, void* u) { static_cast<std::vector<std::string>*>(u)->push_back(m); };
  mapss_result* r = nullptr;
  ASSERT_EQ(mapss_evaluate(c, 0, sink, &log, &r), MAPSS_OK) << mapss_last_error();
  EXPECT_FALSE(log.empty());
  double v = -1;
  ASSERT_EQ(mapss_result_number(r, "/frames/mean_ps", &v), MAPSS_OK);
  EXPECT_GE(v, 0.0);
  EXPECT_LE(v, 1.0);
  ASSERT_EQ(mapss_result_number(r, "/correlation/PS/pcc", &v), MAPSS_OK);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_EQ(mapss_result_number(r, "/no/such", &v), MAPSS_E_INVALID_ARGUMENT);
  char* text = nullptr;
  ASSERT_EQ(mapss_result_text(r, &text), MAPSS_OK);
  EXPECT_FALSE(take(text).empty());
  mapss_result_free(r);

  const double delays[] = {0.0, 50.0};
  ASSERT_EQ(mapss_sweep_delay(c, delays, 2, nullptr, nullptr, &r), MAPSS_OK) << mapss_last_error();
  ASSERT_EQ(mapss_result_number(r, "/rows/1/delay_ms", &v), MAPSS_OK);
  EXPECT_DOUBLE_EQ(v, 50.0);
  mapss_result_free(r);

  size_t n = 0;
  ASSERT_EQ(mapss_dump_config_banks(c, "PS", (dir / "banks").c_str(), &n), MAPSS_OK);
  EXPECT_EQ(n, 80u);
  EXPECT_EQ(mapss_dump_config_banks(c, "XX", (dir / "banks").c_str(), &n), MAPSS_E_INVALID_PARAMS);
  mapss_config_free(c);

  ASSERT_EQ(mapss_config_parse(R"({"trials":[{"id":"t","references":{"0":"none.wav","1":"none.wav"},
                                   "systems":{"s":{"0":"none.wav","1":"none.wav"}}}]})",
                               dir.c_str(), &c),
            MAPSS_OK);
  EXPECT_EQ(mapss_evaluate(c, 0, nullptr, nullptr, &r), MAPSS_E_IO);
  EXPECT_NE(std::string(mapss_last_error()).find("none.wav"), std::string::npos);
  mapss_config_free(c);
  fs::remove_all(dir);
}
