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
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "preprocess/utterance.hpp"

namespace mapss {

enum class Family {
  kNotch,
  kComb,
  kTremolo,
  kAdditiveNoise,
  kHarmonicTone,
  kReverberation,
  kNoiseGate,
  kPitchShift,
  kLowPass,
  kHighPass,
  kEcho,
  kHardClip,
  kVibrato,
};

enum class MeasureVariant { kPS, kPM };
enum class NoiseColor { kWhite, kPink, kBrown };

std::string_view family_name(Family f);
Family parse_family(std::string_view name);
std::string_view variant_name(MeasureVariant v);
MeasureVariant parse_variant(std::string_view name);
std::string_view color_name(NoiseColor c);
NoiseColor parse_color(std::string_view name);

// Parameter records. Fields marked "relative" are multiplied by a statistic
// of the input (A_RMS or A_95) in the PM variant; the PS variant uses absolute
// values.
struct NotchParams {
  std::vector<double> centers_hz;  // explicit centers; empty -> spread `count` over the band
  int count = 0;
  double half_bandwidth_hz = 60.0;
};
struct CombParams { double delay_ms = 5.0; double feedback = 0.5; };
struct TremoloParams { double rate_hz = 4.0; double depth = 1.0; };
struct NoiseParams { double snr_db = 0.0; NoiseColor color = NoiseColor::kWhite; };
struct ToneParams { double freq_hz = 1000.0; double amplitude = 0.05; };  // PM: x A_RMS
struct ReverbParams {
  double rt60_s = 0.5;        // PS
  double early_ms = 10.0;     // PS: onset of the diffuse tail
  double tail_ms = 100.0;     // PM: exponential tail length
  double decay_scale = 0.5;   // PM: tail-to-direct amplitude ratio
};
struct GateParams { double threshold = 0.01; };         // PM: x A_95
struct PitchParams { double semitones = 2.0; };
struct FilterParams {
  double cutoff_hz = 0.0;        // PS: absolute cutoff
  double energy_percent = 0.0;   // PM: cumulative spectral-energy point
};
struct EchoParams { double delay_ms = 10.0; double gain = 0.5; };
struct ClipParams { double threshold = 0.5; };          // PM: x A_95
struct VibratoParams { double rate_hz = 5.0; double depth = 0.002; };  // PM: depth derived from the signal

using DistortionParams =
    std::variant<NotchParams, CombParams, TremoloParams, NoiseParams, ToneParams, ReverbParams,
                 GateParams, PitchParams, FilterParams, EchoParams, ClipParams, VibratoParams>;

struct DistortionSpec {
  Family family = Family::kNotch;
  MeasureVariant variant = MeasureVariant::kPM;
  DistortionParams params;
  std::uint64_t seed = 0;  // per-spec stream for stochastic families

  std::string describe() const;
};

/// Throws InvalidParams when the parameters fall outside the parameter grid range for
/// the spec's variant (or the record does not match the family).
void validate_spec(const DistortionSpec& spec, int sample_rate);

/// Applies one distortion. Output has the input's length and rate and is a
/// deterministic function of (y, spec).
Utterance apply_distortion(const Utterance& y, const DistortionSpec& spec);

// Statistics used by the amplitude-relative PM rows.
double amplitude_percentile(std::span<const double> x, double percentile);
double spectral_energy_cutoff(std::span<const double> x, int sample_rate, double percent);
double adaptive_vibrato_depth(std::span<const double> x);

}  // namespace mapss
