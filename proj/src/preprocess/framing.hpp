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
#include <vector>

#include "preprocess/utterance.hpp"

namespace mapss {

struct PlanParams {
  double frame_ms = 25.0;
  double hop_ms = 20.0;
  double activity_db = -40.0;  // frame RMS threshold relative to utterance RMS
};

/// Frame geometry plus the subset of frames where at least two references
/// are active.
struct FramePlan {
  std::size_t frame_length = 0;  // samples
  std::size_t hop = 0;           // samples
  double frames_per_second = 0.0;
  std::size_t total_frames = 0;
  std::vector<std::size_t> active_frames;             // F^l, ascending
  std::vector<std::vector<int>> active_sources;       // S^l_f per active frame, ascending ids

  std::size_t frame_start(std::size_t frame) const { return frame * hop; }
};

std::size_t frame_count(std::size_t length, std::size_t frame_length, std::size_t hop);

/// Judges activity on references only. An empty active set is a valid result.
FramePlan detect_overlap_frames(const std::vector<Utterance>& refs, const PlanParams& params);

/// Shifts u right by round(delay_ms * rate / 1000) samples, zero-filling the
/// head and truncating to the original length.
Utterance inject_delay(const Utterance& u, double delay_ms);

/// Copies samples [start, start + length) of u; zero-pads past the end.
std::vector<double> slice_frame(const Utterance& u, std::size_t start, std::size_t length);

}  // namespace mapss
