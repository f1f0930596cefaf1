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

#include "aggregate/aggregate.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace mapss {

const char* aggregation_name(AggregationMethod m) { return m == AggregationMethod::kPesq ? "pesq" : "average"; }

AggregationMethod parse_aggregation(const std::string& s) {
  if (s == "average" || s == "Average") return AggregationMethod::kAverage;
  if (s == "pesq" || s == "PESQ") return AggregationMethod::kPesq;
  fail(ErrorCode::kConfigError, "unknown aggregation '" + s + "'");
}

void AggregationConfig::validate() const {
  require(hop >= 1 && window >= hop, ErrorCode::kConfigError, "aggregation needs window >= hop >= 1");
  require(p >= 1.0, ErrorCode::kConfigError, "aggregation norm order must be >= 1");
}

double pesq_logistic(double u, const AggregationConfig& cfg) {
  return cfg.offset + cfg.range / (1.0 + std::exp(-cfg.slope * u + cfg.shift));
}

double pesq_logistic_slope(double u, const AggregationConfig& cfg) {
  const double e = std::exp(-cfg.slope * u + cfg.shift);
  return cfg.range * cfg.slope * e / ((1.0 + e) * (1.0 + e));
}

std::size_t pesq_window_count(std::size_t frames, const AggregationConfig& cfg) {
  if (frames <= cfg.window) return 1;
  return std::max<std::size_t>(1, (frames - cfg.window) / cfg.hop);
}

std::size_t overlap_factor(const AggregationConfig& cfg) { return (cfg.window + cfg.hop - 1) / cfg.hop; }

double aggregate_average(std::span<const double> values) {
  if (values.empty()) fail(ErrorCode::kEmptySet, "no frames to aggregate");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double aggregate_pesq(std::span<const double> values, const AggregationConfig& cfg, double* level) {
  if (values.empty()) fail(ErrorCode::kEmptySet, "no frames to aggregate");
  cfg.validate();
  const std::size_t m_count = pesq_window_count(values.size(), cfg);
  double acc = 0.0;
  for (std::size_t m = 0; m < m_count; ++m) {
    const std::size_t start = m * cfg.hop;
    const std::size_t stop = std::min(values.size(), start + cfg.window);
    double s = 0.0;
    for (std::size_t f = start; f < stop; ++f) s += std::pow(std::abs(values[f]), cfg.p);
    // short utterances: mean over the frames that exist
    const double l = std::pow(s / static_cast<double>(stop - start), 1.0 / cfg.p);
    acc += l * l;
  }
  const double u = std::sqrt(acc / static_cast<double>(m_count));
  if (level) *level = u;
  return pesq_logistic(u, cfg);
}

double aggregate(std::span<const double> values, const AggregationConfig& cfg) {
  return cfg.method == AggregationMethod::kPesq ? aggregate_pesq(values, cfg) : aggregate_average(values);
}

}  // namespace mapss
