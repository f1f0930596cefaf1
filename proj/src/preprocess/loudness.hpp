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

#include <span>

#include "preprocess/utterance.hpp"

namespace mapss {

/// Gated integrated loudness in LUFS (ITU-R BS.1770-4: K-weighting, 400 ms
/// blocks with 75% overlap, absolute gate -70 LUFS, relative gate -10 LU).
/// Signals shorter than one block are measured as a single block.
/// Throws SilentInput when no block passes the absolute gate.
double integrated_loudness(std::span<const double> samples, int sample_rate);

/// K-weighted signal (pre-filter shelf followed by the RLB high-pass).
std::vector<double> k_weight(std::span<const double> samples, int sample_rate);

/// Scales u to target_lufs. When the required gain would push the peak above
/// full scale the gain is reduced so the peak lands exactly on 1.0.
Utterance normalize_loudness(const Utterance& u, double target_lufs);

}  // namespace mapss
