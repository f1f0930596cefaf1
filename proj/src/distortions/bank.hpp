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

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "distortions/distortion.hpp"

namespace mapss {

/// Declarative bank selection. With no explicit specs the full grid of the
/// variant is enumerated, optionally filtered by family and thinned to
/// `max_size` evenly spaced entries.
struct BankConfig {
  std::vector<Family> families;  // empty: all families
  std::size_t max_size = 0;      // 0: keep every grid point
  std::vector<DistortionSpec> specs;
};

struct DistortionBank {
  MeasureVariant variant = MeasureVariant::kPM;
  std::uint64_t seed = 0;
  std::vector<DistortionSpec> specs;

  std::size_t size() const { return specs.size(); }
};

/// Every grid point of the variant's parameter grid in a fixed order. Grid
/// points that do not fit the sample rate (e.g. notch centers at Nyquist)
/// are dropped.
std::vector<DistortionSpec> enumerate_grid(MeasureVariant variant, int sample_rate);

DistortionBank make_bank(MeasureVariant variant, int sample_rate, std::uint64_t seed,
                         const BankConfig& config = {});

std::vector<Utterance> generate_bank(const Utterance& y, const DistortionBank& bank);
std::vector<Utterance> generate_bank(const Utterance& y, MeasureVariant variant, std::uint64_t seed);

nlohmann::json spec_to_json(const DistortionSpec& spec);
DistortionSpec spec_from_json(const nlohmann::json& j, MeasureVariant variant);
BankConfig bank_config_from_json(const nlohmann::json& j, MeasureVariant variant);

}  // namespace mapss
