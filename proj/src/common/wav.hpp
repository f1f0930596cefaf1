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

#include <filesystem>
#include <vector>

namespace mapss {

enum class WavEncoding { kPcm16, kPcm24, kFloat32 };

struct WavData {
  std::vector<double> samples;  // mono, full scale +-1
  int sample_rate = 0;
};

/// Reads a mono RIFF/WAVE file (PCM 16/24-bit or IEEE float32).
/// Multi-channel input is rejected.
WavData read_wav(const std::filesystem::path& path);

void write_wav(const std::filesystem::path& path, const std::vector<double>& samples,
               int sample_rate, WavEncoding encoding = WavEncoding::kFloat32);

}  // namespace mapss
