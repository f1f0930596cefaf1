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

#include "distortions/bank.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace mapss {
namespace {

std::vector<double> linspace4(double lo, double hi) {
  std::vector<double> v(4);
  for (int i = 0; i < 4; ++i) v[i] = lo + (hi - lo) * i / 3.0;
  return v;
}

double num(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) fail(ErrorCode::kConfigError, std::string("bank field '") + key + "' must be a number");
  return j.at(key).get<double>();
}

}  // namespace

std::vector<DistortionSpec> enumerate_grid(MeasureVariant v, int fs) {
  const bool ps = v == MeasureVariant::kPS;
  std::vector<DistortionSpec> out;
  auto add = [&](Family f, DistortionParams p) {
    DistortionSpec s{f, v, std::move(p), 0};
    try {
      validate_spec(s, fs);
    } catch (const Error&) {
      return;
    }
    out.push_back(std::move(s));
  };

  if (ps) {
    for (double c : {500.0, 1000.0, 2000.0, 4000.0, 8000.0}) add(Family::kNotch, NotchParams{{c}, 0, 60.0});
    for (double d : linspace4(2.5, 15.0))
      for (double g : linspace4(0.4, 0.9)) add(Family::kComb, CombParams{d, g});
    for (double r : {1.0, 2.0, 4.0, 6.0})
      for (double d : linspace4(0.3, 1.0)) add(Family::kTremolo, TremoloParams{r, d});
  } else {
    for (int n : {1, 5, 10, 20}) add(Family::kNotch, NotchParams{{}, n, 60.0});
    for (auto [d, g] : {std::pair{2.5, 0.4}, {5.0, 0.5}, {7.5, 0.6}, {10.0, 0.7}, {12.5, 0.9}})
      add(Family::kComb, CombParams{d, g});
    for (double r : {1.0, 2.0, 4.0, 6.0}) add(Family::kTremolo, TremoloParams{r, 1.0});
  }
  for (double snr : {-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0})
    for (NoiseColor c : {NoiseColor::kWhite, NoiseColor::kPink, NoiseColor::kBrown})
      add(Family::kAdditiveNoise, NoiseParams{snr, c});
  for (double f : {100.0, 500.0, 1000.0, 4000.0}) {
    const std::vector<double> amps = ps ? linspace4(0.02, 0.08) : std::vector<double>{0.4, 0.6, 0.8, 1.0};
    for (double a : amps) add(Family::kHarmonicTone, ToneParams{f, a});
  }
  if (ps) {
    for (double rt : linspace4(0.3, 1.1))
      for (double e : {5.0, 10.0, 15.0, 20.0}) add(Family::kReverberation, ReverbParams{rt, e, 100.0, 0.5});
  } else {
    for (double t : {50.0, 100.0, 200.0, 400.0})
      for (double d : {0.3, 0.5, 0.7, 0.9}) add(Family::kReverberation, ReverbParams{0.5, 10.0, t, d});
  }
  for (double t : ps ? std::vector<double>{0.005, 0.01, 0.02, 0.04} : std::vector<double>{0.05, 0.1, 0.2, 0.4})
    add(Family::kNoiseGate, GateParams{t});
  for (double s : {-4.0, -2.0, 2.0, 4.0}) add(Family::kPitchShift, PitchParams{s});
  if (ps) {
    for (double c : {2000.0, 3000.0, 4000.0, 6000.0}) add(Family::kLowPass, FilterParams{c, 0.0});
    for (double c : {100.0, 300.0, 500.0, 800.0}) add(Family::kHighPass, FilterParams{c, 0.0});
    for (double d : linspace4(5.0, 20.0))
      for (double g : linspace4(0.3, 0.7)) add(Family::kEcho, EchoParams{d, g});
  } else {
    for (double q : {50.0, 70.0, 85.0, 95.0}) add(Family::kLowPass, FilterParams{0.0, q});
    for (double q : {5.0, 15.0, 30.0, 50.0}) add(Family::kHighPass, FilterParams{0.0, q});
    for (double d : {50.0, 100.0, 150.0})
      for (double g : {0.4, 0.5, 0.7}) add(Family::kEcho, EchoParams{d, g});
  }
  for (double t : {0.3, 0.5, 0.7}) add(Family::kHardClip, ClipParams{t});
  for (double r : {3.0, 5.0, 7.0}) {
    if (ps) {
      for (double d : linspace4(0.001, 0.003)) add(Family::kVibrato, VibratoParams{r, d});
    } else {
      add(Family::kVibrato, VibratoParams{r, 0.0});
    }
  }
  return out;
}

DistortionBank make_bank(MeasureVariant variant, int fs, std::uint64_t seed, const BankConfig& config) {
  DistortionBank bank;
  bank.variant = variant;
  bank.seed = seed;
  std::vector<DistortionSpec> all = config.specs.empty() ? enumerate_grid(variant, fs) : config.specs;

  // Seeds follow the position in the unfiltered list so thinning a bank does
  // not change the realization of the entries it keeps.
  const CounterRng root(seed);
  for (std::size_t i = 0; i < all.size(); ++i) {
    all[i].variant = variant;
    all[i].seed = root.split(i)();
    validate_spec(all[i], fs);
  }
  if (!config.families.empty()) {
    std::erase_if(all, [&](const DistortionSpec& s) {
      return std::find(config.families.begin(), config.families.end(), s.family) == config.families.end();
    });
  }
  if (config.max_size > 0 && all.size() > config.max_size) {
    std::vector<DistortionSpec> thin;
    const std::size_t m = config.max_size;
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t idx = m == 1 ? 0
                                     : static_cast<std::size_t>(std::llround(
                                           static_cast<double>(k) * static_cast<double>(all.size() - 1) /
                                           static_cast<double>(m - 1)));
      thin.push_back(all[idx]);
    }
    all = std::move(thin);
  }
  require(!all.empty(), ErrorCode::kConfigError, "distortion bank is empty");
  bank.specs = std::move(all);
  return bank;
}

std::vector<Utterance> generate_bank(const Utterance& y, const DistortionBank& bank) {
  std::vector<Utterance> out;
  out.reserve(bank.size());
  for (const auto& spec : bank.specs) out.push_back(apply_distortion(y, spec));
  return out;
}

std::vector<Utterance> generate_bank(const Utterance& y, MeasureVariant variant, std::uint64_t seed) {
  return generate_bank(y, make_bank(variant, y.sample_rate, seed));
}

nlohmann::json spec_to_json(const DistortionSpec& spec) {
  nlohmann::json j;
  j["family"] = std::string(family_name(spec.family));
  j["variant"] = std::string(variant_name(spec.variant));
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, NotchParams>) {
          if (p.centers_hz.empty()) {
            j["count"] = p.count;
          } else {
            j["centers_hz"] = p.centers_hz;
          }
          j["half_bandwidth_hz"] = p.half_bandwidth_hz;
        } else if constexpr (std::is_same_v<T, CombParams>) {
          j["delay_ms"] = p.delay_ms;
          j["feedback"] = p.feedback;
        } else if constexpr (std::is_same_v<T, TremoloParams>) {
          j["rate_hz"] = p.rate_hz;
          j["depth"] = p.depth;
        } else if constexpr (std::is_same_v<T, NoiseParams>) {
          j["snr_db"] = p.snr_db;
          j["color"] = std::string(color_name(p.color));
        } else if constexpr (std::is_same_v<T, ToneParams>) {
          j["freq_hz"] = p.freq_hz;
          j["amplitude"] = p.amplitude;
        } else if constexpr (std::is_same_v<T, ReverbParams>) {
          if (spec.variant == MeasureVariant::kPS) {
            j["rt60_s"] = p.rt60_s;
            j["early_ms"] = p.early_ms;
          } else {
            j["tail_ms"] = p.tail_ms;
            j["decay_scale"] = p.decay_scale;
          }
        } else if constexpr (std::is_same_v<T, GateParams> || std::is_same_v<T, ClipParams>) {
          j["threshold"] = p.threshold;
        } else if constexpr (std::is_same_v<T, PitchParams>) {
          j["semitones"] = p.semitones;
        } else if constexpr (std::is_same_v<T, FilterParams>) {
          if (spec.variant == MeasureVariant::kPS) {
            j["cutoff_hz"] = p.cutoff_hz;
          } else {
            j["energy_percent"] = p.energy_percent;
          }
        } else if constexpr (std::is_same_v<T, EchoParams>) {
          j["delay_ms"] = p.delay_ms;
          j["gain"] = p.gain;
        } else if constexpr (std::is_same_v<T, VibratoParams>) {
          j["rate_hz"] = p.rate_hz;
          if (spec.variant == MeasureVariant::kPS) j["depth"] = p.depth;
        }
      },
      spec.params);
  return j;
}

DistortionSpec spec_from_json(const nlohmann::json& j, MeasureVariant variant) {
  if (!j.is_object() || !j.contains("family") || !j.at("family").is_string()) {
    fail(ErrorCode::kConfigError, "bank spec needs a string 'family'");
  }
  DistortionSpec s;
  s.family = parse_family(j.at("family").get<std::string>());
  s.variant = variant;
  switch (s.family) {
    case Family::kNotch: {
      NotchParams p;
      if (j.contains("centers_hz")) p.centers_hz = j.at("centers_hz").get<std::vector<double>>();
      p.count = static_cast<int>(num(j, "count", 0));
      p.half_bandwidth_hz = num(j, "half_bandwidth_hz", 60.0);
      s.params = p;
      break;
    }
    case Family::kComb: s.params = CombParams{num(j, "delay_ms", 5.0), num(j, "feedback", 0.5)}; break;
    case Family::kTremolo: s.params = TremoloParams{num(j, "rate_hz", 4.0), num(j, "depth", 1.0)}; break;
    case Family::kAdditiveNoise:
      s.params = NoiseParams{num(j, "snr_db", 0.0), parse_color(j.value("color", std::string("white")))};
      break;
    case Family::kHarmonicTone: s.params = ToneParams{num(j, "freq_hz", 1000.0), num(j, "amplitude", 0.05)}; break;
    case Family::kReverberation:
      s.params = ReverbParams{num(j, "rt60_s", 0.5), num(j, "early_ms", 10.0), num(j, "tail_ms", 100.0),
                              num(j, "decay_scale", 0.5)};
      break;
    case Family::kNoiseGate: s.params = GateParams{num(j, "threshold", 0.01)}; break;
    case Family::kPitchShift: s.params = PitchParams{num(j, "semitones", 2.0)}; break;
    case Family::kLowPass:
    case Family::kHighPass: s.params = FilterParams{num(j, "cutoff_hz", 0.0), num(j, "energy_percent", 0.0)}; break;
    case Family::kEcho: s.params = EchoParams{num(j, "delay_ms", 10.0), num(j, "gain", 0.5)}; break;
    case Family::kHardClip: s.params = ClipParams{num(j, "threshold", 0.5)}; break;
    case Family::kVibrato: s.params = VibratoParams{num(j, "rate_hz", 5.0), num(j, "depth", 0.002)}; break;
  }
  return s;
}

BankConfig bank_config_from_json(const nlohmann::json& j, MeasureVariant variant) {
  BankConfig cfg;
  if (j.is_null()) return cfg;
  if (!j.is_object()) fail(ErrorCode::kConfigError, "bank configuration must be an object");
  if (j.contains("families")) {
    for (const auto& f : j.at("families")) cfg.families.push_back(parse_family(f.get<std::string>()));
  }
  if (j.contains("max_size")) cfg.max_size = j.at("max_size").get<std::size_t>();
  if (j.contains("specs")) {
    for (const auto& s : j.at("specs")) cfg.specs.push_back(spec_from_json(s, variant));
  }
  return cfg;
}

}  // namespace mapss
