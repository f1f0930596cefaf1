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
#include <vector>

namespace mapss {

enum class Role { kReference, kOutput, kMixture };

/// Mono waveform with rate metadata. Samples are full-scale amplitudes.
struct Utterance {
  std::vector<double> samples;
  int sample_rate = 16000;
  Role role = Role::kReference;
  int source_id = 0;

  std::size_t size() const { return samples.size(); }
  std::span<const double> view() const { return samples; }
  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }
};

/// Validates the basic invariants (finite samples, positive rate).
void check_utterance(const Utterance& u);

double rms(std::span<const double> x);
double peak_abs(std::span<const double> x);

}  // namespace mapss
