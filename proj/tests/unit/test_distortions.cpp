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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "common/error.hpp"
#include "common/fft.hpp"
#include "common/rng.hpp"
#include "distortions/bank.hpp"

using namespace mapss;

namespace {

constexpr double kPi = std::numbers::pi;

Utterance tone(double freq, double amp, std::size_t n, int fs = 16000) {
  Utterance u;
  u.sample_rate = fs;
  u.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) u.samples[i] = amp * std::sin(2 * kPi * freq * i / fs);
  return u;
}

// Voiced-speech-like test signal: harmonic stack with syllabic envelope plus noise.
Utterance babble(std::size_t n, std::uint64_t seed = 1, int fs = 16000) {
  CounterRng r(seed);
  Utterance u;
  u.sample_rate = fs;
  u.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    const double env = 0.6 + 0.4 * std::sin(2 * kPi * 3.0 * t);
    double v = 0;
    for (int h = 1; h <= 12; ++h) v += std::sin(2 * kPi * 140.0 * h * t + h) / h;
    u.samples[i] = 0.2 * env * v + 0.01 * r.normal();
  }
  return u;
}

// Magnitude of the DFT at one frequency (direct sum).
double bin_magnitude(const std::vector<double>& x, double freq, int fs) {
  std::complex<double> acc = 0;
  for (std::size_t n = 0; n < x.size(); ++n) acc += x[n] * std::polar(1.0, -2 * kPi * freq * n / fs);
  return std::abs(acc);
}

double db(double ratio) { return 20 * std::log10(ratio); }

DistortionSpec spec(Family f, MeasureVariant v, DistortionParams p, std::uint64_t seed = 9) {
  return DistortionSpec{f, v, std::move(p), seed};
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kOk;
}

}  // namespace

TEST(Distortion, NoiseRealizedSnr) {
  Utterance u = babble(16000);
  const double s = rms(u.samples);
  for (double& v : u.samples) v /= s;
  for (auto color : {NoiseColor::kWhite, NoiseColor::kPink, NoiseColor::kBrown}) {
    for (double snr : {-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0}) {
      for (auto var : {MeasureVariant::kPS, MeasureVariant::kPM}) {
        const Utterance out = apply_distortion(u, spec(Family::kAdditiveNoise, var, NoiseParams{snr, color}));
        std::vector<double> diff(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) diff[i] = out.samples[i] - u.samples[i];
        EXPECT_NEAR(db(rms(u.samples) / rms(diff)), snr, 0.5);
      }
    }
  }
}

TEST(Distortion, HardClipAbovePeakIsIdentity) {
  const Utterance u = tone(440, 0.2, 4000);
  const Utterance out = apply_distortion(u, spec(Family::kHardClip, MeasureVariant::kPS, ClipParams{0.7}));
  EXPECT_EQ(out.samples, u.samples);
}

TEST(Distortion, HardClipRelativeToA95) {
  const Utterance u = babble(8000);
  const double a95 = amplitude_percentile(u.samples, 95.0);
  const Utterance out = apply_distortion(u, spec(Family::kHardClip, MeasureVariant::kPM, ClipParams{0.5}));
  EXPECT_NEAR(peak_abs(out.samples), 0.5 * a95, 1e-12);
}

TEST(Distortion, PmNotchOnSineBelowMinus30dB) {
  const Utterance u = tone(1000, 0.5, 16000);
  const Utterance out =
      apply_distortion(u, spec(Family::kNotch, MeasureVariant::kPM, NotchParams{{1000.0}, 0, 60.0}));
  const double before = bin_magnitude(u.samples, 1000, 16000);
  const double after = bin_magnitude(out.samples, 1000, 16000);
  EXPECT_LE(db(after / before), -30.0);
}

TEST(Distortion, PsNotchAttenuationAtEveryCenter) {
  for (double c : {500.0, 1000.0, 2000.0, 4000.0}) {
    const Utterance u = tone(c, 0.5, 16000);
    const Utterance out = apply_distortion(u, spec(Family::kNotch, MeasureVariant::kPS, NotchParams{{c}, 0, 60.0}));
    EXPECT_LE(db(bin_magnitude(out.samples, c, 16000) / bin_magnitude(u.samples, c, 16000)), -25.0) << c;
  }
}

TEST(Distortion, PmNotchCountSpreadsOverBand) {
  const Utterance u = babble(16000);
  for (int count : {1, 5, 10, 20}) {
    const Utterance out =
        apply_distortion(u, spec(Family::kNotch, MeasureVariant::kPM, NotchParams{{}, count, 60.0}));
    EXPECT_EQ(out.size(), u.size());
  }
  // 20 notches at 8 kHz would be packed tighter than 300 Hz.
  EXPECT_EQ(code_of([&] {
              validate_spec(spec(Family::kNotch, MeasureVariant::kPM, NotchParams{{}, 20, 60.0}), 8000);
            }),
            ErrorCode::kInvalidParams);
}

TEST(Distortion, LowPassOneOctaveAboveCutoff) {
  for (double fc : {2000.0, 3000.0}) {
    const Utterance u = tone(2 * fc, 0.5, 16000);
    const Utterance out = apply_distortion(u, spec(Family::kLowPass, MeasureVariant::kPS, FilterParams{fc, 0}));
    const std::span<const double> tail_in(u.samples.data() + 8000, 8000);
    const std::span<const double> tail_out(out.samples.data() + 8000, 8000);
    EXPECT_LE(db(rms(tail_out) / rms(tail_in)), -20.0) << fc;
  }
}

TEST(Distortion, HighPassPassesBandAndCutsBelow) {
  const Utterance lo = tone(100, 0.5, 16000);
  const Utterance hi = tone(4000, 0.5, 16000);
  const auto s = spec(Family::kHighPass, MeasureVariant::kPS, FilterParams{800, 0});
  const std::span<const double> lo_out(apply_distortion(lo, s).samples.data() + 8000, 8000);
  EXPECT_LE(db(rms(lo_out) / rms(lo.samples)), -60.0);
  const Utterance hi_out = apply_distortion(hi, s);
  EXPECT_NEAR(db(rms(std::span<const double>(hi_out.samples.data() + 8000, 8000)) / rms(hi.samples)), 0.0, 0.1);
}

TEST(Distortion, SpectralCutoffRule) {
  // All energy at 1 kHz: every percentile lands on the same rounded cutoff.
  const Utterance u = tone(1000, 0.5, 16000);
  EXPECT_DOUBLE_EQ(spectral_energy_cutoff(u.samples, 16000, 50.0), 1000.0);
  EXPECT_DOUBLE_EQ(spectral_energy_cutoff(u.samples, 16000, 5.0), 1000.0);
  const Utterance b = babble(16000);
  EXPECT_LE(spectral_energy_cutoff(b.samples, 16000, 50.0), spectral_energy_cutoff(b.samples, 16000, 95.0));
}

TEST(Distortion, PitchShiftMovesFundamental) {
  const Utterance u = tone(440, 0.5, 16000);
  const Utterance out = apply_distortion(u, spec(Family::kPitchShift, MeasureVariant::kPS, PitchParams{4.0}));
  ASSERT_EQ(out.size(), u.size());
  const double want = 440 * std::pow(2.0, 4.0 / 12.0);
  const auto ps = power_spectrum(out.samples, 16384);
  const auto peak = static_cast<double>(std::max_element(ps.begin() + 1, ps.end()) - ps.begin());
  EXPECT_NEAR(peak * 16000.0 / 16384.0, want, 5.0);
}

TEST(Distortion, EchoAndCombImpulseResponses) {
  Utterance u;
  u.samples.assign(4000, 0.0);
  u.samples[0] = 1.0;
  const Utterance echo = apply_distortion(u, spec(Family::kEcho, MeasureVariant::kPM, EchoParams{100.0, 0.5}));
  EXPECT_DOUBLE_EQ(echo.samples[1600], 0.5);
  EXPECT_DOUBLE_EQ(echo.samples[3200], 0.0);
  const Utterance comb = apply_distortion(u, spec(Family::kComb, MeasureVariant::kPM, CombParams{5.0, 0.5}));
  EXPECT_DOUBLE_EQ(comb.samples[80], 0.5);
  EXPECT_DOUBLE_EQ(comb.samples[160], 0.25);
}

TEST(Distortion, ToneAmplitudeRelativeToRms) {
  Utterance u;
  u.samples.assign(16000, 0.0);
  u.samples[0] = 1.0;  // rms = 1/sqrt(16000)
  const Utterance out = apply_distortion(u, spec(Family::kHarmonicTone, MeasureVariant::kPM, ToneParams{1000, 0.8}));
  EXPECT_NEAR(out.samples[4], 0.8 * rms(u.samples) * std::sin(2 * kPi * 1000 * 4 / 16000.0), 1e-15);
}

TEST(Distortion, TremoloFullDepthReachesSilence) {
  const Utterance u = tone(1000, 0.5, 16000);
  Utterance flat = u;
  std::fill(flat.samples.begin(), flat.samples.end(), 0.5);
  const Utterance out = apply_distortion(flat, spec(Family::kTremolo, MeasureVariant::kPM, TremoloParams{2, 1}));
  EXPECT_NEAR(out.samples[4000], 0.0, 1e-12);  // quarter second at 2 Hz
  EXPECT_DOUBLE_EQ(out.samples[0], 0.5);
}

TEST(Distortion, NoiseGateZeroesQuietStretches) {
  Utterance u = tone(300, 0.5, 16000);
  for (std::size_t i = 6000; i < 10000; ++i) u.samples[i] *= 1e-3;
  const Utterance out = apply_distortion(u, spec(Family::kNoiseGate, MeasureVariant::kPS, GateParams{0.01}));
  EXPECT_TRUE(std::all_of(out.samples.begin() + 6200, out.samples.begin() + 9800, [](double v) { return v == 0; }));
  EXPECT_EQ(out.samples[2000], u.samples[2000]);
}

TEST(Distortion, RejectsOutOfTableParameters) {
  const Utterance u = babble(8000);
  auto bad = [&](DistortionSpec s) { return code_of([&] { apply_distortion(u, s); }); };
  EXPECT_EQ(bad(spec(Family::kComb, MeasureVariant::kPS, CombParams{20.0, 0.5})), ErrorCode::kInvalidParams);
  EXPECT_EQ(bad(spec(Family::kComb, MeasureVariant::kPM, CombParams{3.0, 0.4})), ErrorCode::kInvalidParams);
  EXPECT_EQ(bad(spec(Family::kEcho, MeasureVariant::kPM, EchoParams{10.0, 0.5})), ErrorCode::kInvalidParams);
  EXPECT_EQ(bad(spec(Family::kTremolo, MeasureVariant::kPM, TremoloParams{2.0, 0.5})), ErrorCode::kInvalidParams);
  EXPECT_EQ(bad(spec(Family::kAdditiveNoise, MeasureVariant::kPM, NoiseParams{30.0})), ErrorCode::kInvalidParams);
  EXPECT_EQ(bad(spec(Family::kEcho, MeasureVariant::kPM, CombParams{})), ErrorCode::kInvalidParams);
  EXPECT_EQ(bad(spec(Family::kNotch, MeasureVariant::kPS, NotchParams{{8000.0}, 0, 60.0})),
            ErrorCode::kInvalidParams);
}

TEST(Distortion, TooShortInput) {
  const Utterance u = babble(100);
  EXPECT_EQ(code_of([&] { apply_distortion(u, spec(Family::kEcho, MeasureVariant::kPM, EchoParams{150, 0.5})); }),
            ErrorCode::kTooShort);
  EXPECT_EQ(code_of([&] { apply_distortion(u, spec(Family::kPitchShift, MeasureVariant::kPM, PitchParams{2})); }),
            ErrorCode::kTooShort);
}

TEST(Bank, GridSizes) {
  EXPECT_EQ(enumerate_grid(MeasureVariant::kPM, 16000).size(), 97u);
  EXPECT_EQ(enumerate_grid(MeasureVariant::kPS, 16000).size(), 136u);
  // The 8 kHz notch center only fits above 16 kHz sampling.
  EXPECT_EQ(enumerate_grid(MeasureVariant::kPS, 48000).size(), 137u);
}

TEST(Bank, EveryFamilyLengthPreservingAndDeterministic) {
  const Utterance u = babble(8000);
  for (auto v : {MeasureVariant::kPS, MeasureVariant::kPM}) {
    const DistortionBank bank = make_bank(v, 16000, 123);
    const auto a = generate_bank(u, bank);
    const auto b = generate_bank(u, bank);
    ASSERT_EQ(a.size(), bank.size());
    for (std::size_t p = 0; p < a.size(); ++p) {
      EXPECT_EQ(a[p].size(), u.size()) << bank.specs[p].describe();
      EXPECT_EQ(a[p].sample_rate, u.sample_rate);
      EXPECT_EQ(a[p].samples, b[p].samples) << bank.specs[p].describe();
      EXPECT_TRUE(std::all_of(a[p].samples.begin(), a[p].samples.end(), [](double x) { return std::isfinite(x); }));
    }
  }
}

TEST(Bank, SeedChangesStochasticFamiliesOnly) {
  const Utterance u = babble(8000);
  BankConfig cfg;
  cfg.families = {Family::kAdditiveNoise, Family::kEcho};
  const auto a = generate_bank(u, make_bank(MeasureVariant::kPM, 16000, 1, cfg));
  const auto b = generate_bank(u, make_bank(MeasureVariant::kPM, 16000, 2, cfg));
  EXPECT_NE(a.front().samples, b.front().samples);
  EXPECT_EQ(a.back().samples, b.back().samples);
}

TEST(Bank, VariantsUseDifferentParameterizations) {
  BankConfig cfg;
  cfg.families = {Family::kEcho};
  const auto ps = make_bank(MeasureVariant::kPS, 16000, 0, cfg);
  const auto pm = make_bank(MeasureVariant::kPM, 16000, 0, cfg);
  for (const auto& s : ps.specs) EXPECT_LE(std::get<EchoParams>(s.params).delay_ms, 20.0);
  for (const auto& s : pm.specs) EXPECT_GE(std::get<EchoParams>(s.params).delay_ms, 50.0);
  EXPECT_EQ(pm.size(), 9u);
  EXPECT_EQ(ps.size(), 16u);
}

TEST(Bank, ThinningKeepsSeedsOfSurvivors) {
  const auto full = make_bank(MeasureVariant::kPM, 16000, 77);
  BankConfig cfg;
  cfg.max_size = 10;
  const auto thin = make_bank(MeasureVariant::kPM, 16000, 77, cfg);
  ASSERT_EQ(thin.size(), 10u);
  EXPECT_EQ(thin.specs.front().seed, full.specs.front().seed);
  EXPECT_EQ(thin.specs.back().seed, full.specs.back().seed);
}

TEST(Bank, JsonRoundTrip) {
  for (auto v : {MeasureVariant::kPS, MeasureVariant::kPM}) {
    for (const auto& s : enumerate_grid(v, 16000)) {
      const DistortionSpec back = spec_from_json(spec_to_json(s), v);
      EXPECT_EQ(back.describe(), s.describe());
    }
  }
  const auto cfg = bank_config_from_json(
      nlohmann::json::parse(R"({"families": ["echo"], "max_size": 2,
                                "specs": [{"family": "echo", "delay_ms": 50, "gain": 0.4}]})"),
      MeasureVariant::kPM);
  EXPECT_EQ(cfg.specs.size(), 1u);
  EXPECT_EQ(cfg.max_size, 2u);
  EXPECT_THROW(bank_config_from_json(nlohmann::json::parse(R"({"specs": [{"family": "warble"}]})"),
                                     MeasureVariant::kPM),
               Error);
}
