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

#include <array>
#include <cmath>
#include <fstream>
#include <numbers>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "common/wav.hpp"
#include "pipeline/pipeline.hpp"

namespace mapss {
namespace {

struct Voice {
  double f0 = 120.0;
  double syllable_hz = 4.0;
  double vibrato_hz = 5.0;
};

// Vowel formants (F1, F2, F3) in Hz.
constexpr std::array<std::array<double, 3>, 5> kVowels = {{
    {730, 1090, 2440}, {270, 2290, 3010}, {530, 1840, 2480}, {570, 840, 2410}, {300, 870, 2240},
}};

double formant_gain(double f, const std::array<double, 3>& fm) {
  double g = 0.0;
  for (std::size_t k = 0; k < fm.size(); ++k) {
    const double bw = 80.0 + 0.06 * fm[k];
    const double x = (f - fm[k]) / bw;
    g += std::exp(-0.5 * x * x) / static_cast<double>(k + 1);
  }
  return g + 0.02;
}

// Harmonic source shaped by a vowel per syllable, gated by a raised-cosine
// syllable envelope with short pauses.
std::vector<double> synth_voice(const Voice& v, int fs, std::size_t n, CounterRng& r) {
  std::vector<double> y(n, 0.0);
  const double syl = 1.0 / v.syllable_hz;
  const std::size_t harmonics = static_cast<std::size_t>(0.45 * fs / v.f0);
  std::vector<double> phase(harmonics, 0.0);
  std::vector<std::size_t> vowel;
  std::vector<double> pitch;
  for (double t = 0.0; t < static_cast<double>(n) / fs + syl; t += syl) {
    vowel.push_back(static_cast<std::size_t>(r() % kVowels.size()));
    pitch.push_back(r.uniform(0.85, 1.15));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    const auto s = static_cast<std::size_t>(t / syl);
    const double u = t / syl - static_cast<double>(s);
    const double env = u < 0.8 ? std::pow(std::sin(std::numbers::pi * u / 0.8), 2.0) : 0.0;
    const double f0 = v.f0 * pitch[s] * (1.0 + 0.02 * std::sin(2.0 * std::numbers::pi * v.vibrato_hz * t));
    double acc = 0.0;
    for (std::size_t h = 0; h < harmonics; ++h) {
      const double f = f0 * static_cast<double>(h + 1);
      phase[h] += 2.0 * std::numbers::pi * f / fs;
      if (f < 0.45 * fs) acc += formant_gain(f, kVowels[vowel[s]]) * std::sin(phase[h]) / std::sqrt(h + 1.0);
    }
    y[i] = env * acc + 0.002 * r.normal();
  }
  double peak = 0.0;
  for (double x : y) peak = std::max(peak, std::abs(x));
  for (double& x : y) x *= 0.5 / peak;
  return y;
}

std::vector<double> lowpass(const std::vector<double>& x, int fs, double cutoff) {
  const double a = std::exp(-2.0 * std::numbers::pi * cutoff / fs);
  std::vector<double> y(x.size());
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s1 = (1.0 - a) * x[i] + a * s1;
    s2 = (1.0 - a) * s1 + a * s2;
    y[i] = s2;
  }
  return y;
}

std::vector<double> mix(const std::vector<double>& a, double ga, const std::vector<double>& b, double gb) {
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = ga * a[i] + gb * b[i];
  return y;
}

}  // namespace

std::filesystem::path write_demo(const std::filesystem::path& dir, std::uint64_t seed, double seconds) {
  require(seconds >= 1.0, ErrorCode::kInvalidArgument, "demo needs at least one second");
  constexpr int fs = 16000;
  const auto n = static_cast<std::size_t>(seconds * fs);
  const CounterRng root(seed);
  std::filesystem::create_directories(dir / "audio");
  CounterRng r0 = root.split(0), r1 = root.split(1), rn = root.split(2);
  const std::array<std::vector<double>, 2> ref = {synth_voice({118.0, 3.7, 5.0}, fs, n, r0),
                                                  synth_voice({215.0, 4.6, 6.0}, fs, n, r1)};
  std::vector<double> hiss(n);
  for (double& x : hiss) x = 0.01 * rn.normal();

  nlohmann::json systems = nlohmann::json::object();
  std::string mos = "trial,system,source,mos\n";
  struct Sys {
    const char* name;
    double leak;
    bool muffle;
    std::array<double, 2> mos;
  };
  const Sys kind[] = {{"clean", 0.03, false, {4.6, 4.4}}, {"muffled", 0.15, true, {3.1, 3.4}},
                      {"leaky", 0.45, false, {2.1, 2.5}}};
  for (const auto& s : kind) {
    nlohmann::json outs;
    for (int i = 0; i < 2; ++i) {
      const auto& own = ref[static_cast<std::size_t>(i)];
      const auto& other = ref[static_cast<std::size_t>(1 - i)];
      std::vector<double> y = mix(s.muffle ? lowpass(own, fs, 1200.0) : own, 1.0, other, s.leak);
      y = mix(y, 1.0, hiss, 1.0);
      const std::string name = std::string(s.name) + "_s" + std::to_string(i) + ".wav";
      write_wav(dir / "audio" / name, y, fs, WavEncoding::kFloat32);
      outs[std::to_string(i)] = "audio/" + name;
      char line[96];
      std::snprintf(line, sizeof line, "demo,%s,%d,%.2f\n", s.name, i, s.mos[static_cast<std::size_t>(i)]);
      mos += line;
    }
    systems[s.name] = outs;
  }
  for (int i = 0; i < 2; ++i)
    write_wav(dir / "audio" / ("ref_s" + std::to_string(i) + ".wav"), ref[static_cast<std::size_t>(i)], fs,
              WavEncoding::kFloat32);
  {
    std::ofstream f(dir / "mos.csv");
    require(static_cast<bool>(f), ErrorCode::kIoError, "cannot write demo MOS table");
    f << mos;
  }
  const nlohmann::json cfg = {
      {"scenario", "english"},
      {"encoder", "raw"},
      {"seed", seed},
      {"ps", {{"bank", {{"max_size", 40}}}}},
      {"pm", {{"bank", {{"max_size", 30}}}}},
      {"mos", "mos.csv"},
      {"output_dir", "out"},
      {"delays", {0, 20, 50, 100}},
      {"trials",
       {{{"id", "demo"},
         {"references", {{"0", "audio/ref_s0.wav"}, {"1", "audio/ref_s1.wav"}}},
         {"systems", systems}}}}};
  const auto path = dir / "config.json";
  std::ofstream f(path);
  require(static_cast<bool>(f), ErrorCode::kIoError, "cannot write demo config");
  f << cfg.dump(2) << '\n';
  return path;
}

}  // namespace mapss
