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
#include <span>
#include <string>

namespace mapss {

enum class AggregationMethod { kAverage, kPesq };

const char* aggregation_name(AggregationMethod m);
AggregationMethod parse_aggregation(const std::string& s);

struct AggregationConfig {
  AggregationMethod method = AggregationMethod::kAverage;
  std::size_t window = 30;
  std::size_t hop = 15;
  double p = 6.0;
  double offset = 0.999;
  double range = 4.0;
  double slope = 1.3669;
  double shift = 3.8224;

  void validate() const;
};

/// Logistic map s(u) = offset + range / (1 + exp(-slope u + shift)).
double pesq_logistic(double u, const AggregationConfig& cfg = {});
double pesq_logistic_slope(double u, const AggregationConfig& cfg = {});

/// max(1, floor((F - W) / H)).
std::size_t pesq_window_count(std::size_t frames, const AggregationConfig& cfg);

/// ceil(W / H).
std::size_t overlap_factor(const AggregationConfig& cfg);

double aggregate_average(std::span<const double> values);

/// Windowed p-norms, RMS over windows, then the logistic map. Returns the
/// pooled level u as well when `level` is non-null.
double aggregate_pesq(std::span<const double> values, const AggregationConfig& cfg, double* level = nullptr);

double aggregate(std::span<const double> values, const AggregationConfig& cfg);

}  // namespace mapss
