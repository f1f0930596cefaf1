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

#include "preprocess/loudness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "common/error.hpp"

namespace mapss {
namespace {

struct Biquad {
  double b0, b1, b2, a1, a2;
};

// Analog prototypes of the BS.1770 filters, re-derived at any rate through the
// bilinear transform (these reproduce the 48 kHz table coefficients).
Biquad shelf_stage(int fs) {
  const double f0 = 1681.974450955533;
  const double gain_db = 3.999843853973347;
  const double q = 0.7071752369554196;
  const double k = std::tan(std::numbers::pi * f0 / fs);
  const double vh = std::pow(10.0, gain_db / 20.0);
  const double vb = std::pow(vh, 0.4996667741545416);
  const double a0 = 1.0 + k / q + k * k;
  return {(vh + vb * k / q + k * k) / a0, 2.0 * (k * k - vh) / a0, (vh - vb * k / q + k * k) / a0,
          2.0 * (k * k - 1.0) / a0, (1.0 - k / q + k * k) / a0};
}

Biquad highpass_stage(int fs) {
  const double f0 = 38.13547087602444;
  const double q = 0.5003270373238773;
  const double k = std::tan(std::numbers::pi * f0 / fs);
  const double a0 = 1.0 + k / q + k * k;
  return {1.0, -2.0, 1.0, 2.0 * (k * k - 1.0) / a0, (1.0 - k / q + k * k) / a0};
}

void run(const Biquad& f, std::vector<double>& x) {
  double z1 = 0.0, z2 = 0.0;
  for (double& v : x) {
    const double y = f.b0 * v + z1;
    z1 = f.b1 * v - f.a1 * y + z2;
    z2 = f.b2 * v - f.a2 * y;
    v = y;
  }
}

}  // namespace

std::vector<double> k_weight(std::span<const double> samples, int sample_rate) {
  std::vector<double> y(samples.begin(), samples.end());
  run(shelf_stage(sample_rate), y);
  run(highpass_stage(sample_rate), y);
  return y;
}

double integrated_loudness(std::span<const double> samples, int sample_rate) {
  require(sample_rate > 0, ErrorCode::kInvalidArgument, "sample_rate must be positive");
  if (samples.empty()) fail(ErrorCode::kSilentInput, "empty signal has no loudness");
  const std::vector<double> y = k_weight(samples, sample_rate);

  const std::size_t block = static_cast<std::size_t>(std::lround(0.4 * sample_rate));
  const std::size_t step = static_cast<std::size_t>(std::lround(0.1 * sample_rate));
  std::vector<double> z;
  if (y.size() < block) {
    double acc = 0.0;
    for (double v : y) acc += v * v;
    z.push_back(acc / static_cast<double>(y.size()));
  } else {
    for (std::size_t start = 0; start + block <= y.size(); start += step) {
      double acc = 0.0;
      for (std::size_t i = start; i < start + block; ++i) acc += y[i] * y[i];
      z.push_back(acc / static_cast<double>(block));
    }
  }

  auto lufs = [](double ms) { return -0.691 + 10.0 * std::log10(ms); };
  constexpr double kAbsoluteGate = -70.0;
  std::vector<double> kept;
  for (double ms : z) {
    if (ms > 0.0 && lufs(ms) > kAbsoluteGate) kept.push_back(ms);
  }
  if (kept.empty()) fail(ErrorCode::kSilentInput, "signal below the absolute loudness gate");

  double mean_abs = 0.0;
  for (double ms : kept) mean_abs += ms;
  mean_abs /= static_cast<double>(kept.size());
  const double relative_gate = lufs(mean_abs) - 10.0;

  double acc = 0.0;
  std::size_t count = 0;
  for (double ms : kept) {
    if (lufs(ms) > relative_gate) {
      acc += ms;
      ++count;
    }
  }
  return lufs(acc / static_cast<double>(count));
}

Utterance normalize_loudness(const Utterance& u, double target_lufs) {
  require(std::isfinite(target_lufs), ErrorCode::kInvalidArgument, "target_lufs must be finite");
  check_utterance(u);
  const double current = integrated_loudness(u.samples, u.sample_rate);
  double gain = std::pow(10.0, (target_lufs - current) / 20.0);
  const double peak = peak_abs(u.samples);
  if (peak * gain > 1.0) gain = 1.0 / peak;

  Utterance out = u;
  for (double& v : out.samples) v *= gain;
  return out;
}

}  // namespace mapss
