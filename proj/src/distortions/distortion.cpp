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

#include "distortions/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "common/error.hpp"
#include "common/fft.hpp"
#include "common/rng.hpp"

namespace mapss {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTol = 1e-9;

struct Biquad {
  double b0, b1, b2, a1, a2;

  void run(std::vector<double>& x) const {
    double z1 = 0.0, z2 = 0.0;
    for (double& v : x) {
      const double y = b0 * v + z1;
      z1 = b1 * v - a1 * y + z2;
      z2 = b2 * v - a2 * y;
      v = y;
    }
  }
};

Biquad normalized(double b0, double b1, double b2, double a0, double a1, double a2) {
  return {b0 / a0, b1 / a0, b2 / a0, a1 / a0, a2 / a0};
}

Biquad notch(double f0, double bandwidth, int fs) {
  const double w0 = 2.0 * kPi * f0 / fs;
  const double q = f0 / bandwidth;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double c = std::cos(w0);
  return normalized(1.0, -2.0 * c, 1.0, 1.0 + alpha, -2.0 * c, 1.0 - alpha);
}

Biquad lowpass(double fc, double q, int fs) {
  const double w0 = 2.0 * kPi * fc / fs;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double c = std::cos(w0);
  return normalized((1.0 - c) / 2.0, 1.0 - c, (1.0 - c) / 2.0, 1.0 + alpha, -2.0 * c, 1.0 - alpha);
}

Biquad highpass(double fc, double q, int fs) {
  const double w0 = 2.0 * kPi * fc / fs;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double c = std::cos(w0);
  return normalized((1.0 + c) / 2.0, -(1.0 + c), (1.0 + c) / 2.0, 1.0 + alpha, -2.0 * c, 1.0 - alpha);
}

// Fourth-order Butterworth as two cascaded sections.
constexpr double kButterQ[2] = {0.54119610014619698, 1.3065629648763766};

void check_range(double v, double lo, double hi, const char* what) {
  if (!std::isfinite(v) || v < lo - kTol || v > hi + kTol) {
    std::ostringstream os;
    os << what << " = " << v << " outside [" << lo << ", " << hi << "]";
    fail(ErrorCode::kInvalidParams, os.str());
  }
}

std::size_t ms_to_samples(double ms, int fs) {
  return static_cast<std::size_t>(std::llround(ms * fs / 1000.0));
}

double interp(const std::vector<double>& x, double pos) {
  if (pos < 0.0) return 0.0;
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= x.size()) return i < x.size() ? x[i] : 0.0;
  const double frac = pos - static_cast<double>(i);
  return x[i] + frac * (x[i + 1] - x[i]);
}

std::vector<double> pm_notch_centers(const NotchParams& p, int fs) {
  if (!p.centers_hz.empty()) return p.centers_hz;
  const double lo = 80.0, hi = 0.45 * fs;
  std::vector<double> centers;
  for (int k = 0; k < p.count; ++k) centers.push_back(lo + (k + 1) * (hi - lo) / (p.count + 1));
  return centers;
}

std::vector<double> colored_noise(std::size_t n, NoiseColor color, CounterRng& rng) {
  std::vector<double> w(n);
  for (double& v : w) v = rng.normal();
  if (color == NoiseColor::kPink) {
    double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
    for (double& v : w) {
      const double white = v;
      b0 = 0.99886 * b0 + white * 0.0555179;
      b1 = 0.99332 * b1 + white * 0.0750759;
      b2 = 0.96900 * b2 + white * 0.1538520;
      b3 = 0.86650 * b3 + white * 0.3104856;
      b4 = 0.55000 * b4 + white * 0.5329522;
      b5 = -0.7616 * b5 - white * 0.0168980;
      v = b0 + b1 + b2 + b3 + b4 + b5 + b6 + white * 0.5362;
      b6 = white * 0.115926;
    }
  } else if (color == NoiseColor::kBrown) {
    double acc = 0.0;
    for (double& v : w) {
      acc = 0.998 * acc + v;
      v = acc;
    }
  }
  double mean = 0.0;
  for (double v : w) mean += v;
  mean /= static_cast<double>(std::max<std::size_t>(n, 1));
  for (double& v : w) v -= mean;
  return w;
}

std::vector<double> reverb_ir(const ReverbParams& p, MeasureVariant variant, int fs, CounterRng& rng) {
  std::vector<double> h;
  if (variant == MeasureVariant::kPS) {
    const std::size_t onset = std::max<std::size_t>(1, ms_to_samples(p.early_ms, fs));
    const std::size_t tail = static_cast<std::size_t>(std::llround(p.rt60_s * fs));
    h.assign(onset + tail, 0.0);
    double energy = 0.0;
    for (std::size_t n = 0; n < tail; ++n) {
      const double t = static_cast<double>(n) / fs;
      const double v = rng.normal() * std::pow(10.0, -3.0 * t / p.rt60_s);
      h[onset + n] = v;
      energy += v * v;
    }
    // Diffuse tail at half the direct-path energy.
    const double g = std::sqrt(0.5 / energy);
    for (std::size_t n = onset; n < h.size(); ++n) h[n] *= g;
  } else {
    const std::size_t tail = std::max<std::size_t>(2, ms_to_samples(p.tail_ms, fs));
    h.assign(tail, 0.0);
    double energy = 0.0;
    for (std::size_t n = 1; n < tail; ++n) {
      const double v = rng.normal() * std::exp(-6.907755 * static_cast<double>(n) / tail);
      h[n] = v;
      energy += v * v;
    }
    const double g = p.decay_scale / std::sqrt(energy);
    for (std::size_t n = 1; n < tail; ++n) h[n] *= g;
  }
  h[0] = 1.0;
  return h;
}

std::vector<double> moving_rms(const std::vector<double>& x, std::size_t window) {
  std::vector<double> prefix(x.size() + 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) prefix[i + 1] = prefix[i] + x[i] * x[i];
  std::vector<double> env(x.size());
  const std::size_t half = window / 2;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(x.size(), i + half + 1);
    env[i] = std::sqrt((prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo));
  }
  return env;
}

std::size_t pitch_window(int fs) { return ms_to_samples(40.0, fs); }

std::vector<double> pitch_shift(const std::vector<double>& x, double semitones, int fs) {
  const double r = std::pow(2.0, semitones / 12.0);
  const std::size_t len = x.size();
  const auto m = static_cast<std::size_t>(std::floor(static_cast<double>(len - 1) / r)) + 1;
  std::vector<double> z(m);
  for (std::size_t n = 0; n < m; ++n) z[n] = interp(x, static_cast<double>(n) * r);

  // WSOLA stretch of z by r back to len samples: each analysis frame is
  // nudged within +-tol samples to best continue the previous one.
  const std::size_t win = pitch_window(fs);
  const std::size_t hs = std::max<std::size_t>(1, win / 4);
  const double ha = static_cast<double>(hs) / r;
  const long long tol = static_cast<long long>(ms_to_samples(5.0, fs));
  std::vector<double> w(win);
  for (std::size_t j = 0; j < win; ++j) w[j] = 0.5 - 0.5 * std::cos(2.0 * kPi * j / win);
  auto at = [&](long long i) { return (i >= 0 && i < static_cast<long long>(m)) ? z[static_cast<std::size_t>(i)] : 0.0; };

  std::vector<double> out(len, 0.0), norm(len, 0.0);
  const auto first = -static_cast<long long>(win / hs);
  long long prev = 0;
  for (long long k = first;; ++k) {
    const long long s = k * static_cast<long long>(hs);
    if (s >= static_cast<long long>(len)) break;
    long long a = std::llround(static_cast<double>(k) * ha);
    if (k > first) {
      const long long natural = prev + static_cast<long long>(hs);
      double best = -std::numeric_limits<double>::infinity();
      long long best_a = a;
      for (long long dlt = -tol; dlt <= tol; ++dlt) {
        double c = 0.0;
        for (std::size_t j = 0; j < win; j += 2) c += at(a + dlt + static_cast<long long>(j)) * at(natural + static_cast<long long>(j));
        if (c > best) {
          best = c;
          best_a = a + dlt;
        }
      }
      a = best_a;
    }
    prev = a;
    for (std::size_t j = 0; j < win; ++j) {
      const long long o = s + static_cast<long long>(j);
      if (o < 0 || o >= static_cast<long long>(len)) continue;
      out[static_cast<std::size_t>(o)] += w[j] * at(a + static_cast<long long>(j));
      norm[static_cast<std::size_t>(o)] += w[j];
    }
  }
  for (std::size_t i = 0; i < len; ++i) {
    if (norm[i] > 1e-9) out[i] /= norm[i];
  }
  return out;
}

std::vector<double> vibrato(const std::vector<double>& x, double rate, double depth, int fs) {
  std::vector<double> out(x.size());
  const double amp = depth * fs / (2.0 * kPi * rate);
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double d = amp * (1.0 - std::cos(2.0 * kPi * rate * n / fs));
    out[n] = interp(x, static_cast<double>(n) - d);
  }
  return out;
}

template <class T>
const T& params_as(const DistortionSpec& spec) {
  const T* p = std::get_if<T>(&spec.params);
  if (!p) fail(ErrorCode::kInvalidParams, "parameter record does not match family " + std::string(family_name(spec.family)));
  return *p;
}

}  // namespace

std::string_view family_name(Family f) {
  switch (f) {
    case Family::kNotch: return "notch";
    case Family::kComb: return "comb";
    case Family::kTremolo: return "tremolo";
    case Family::kAdditiveNoise: return "additive_noise";
    case Family::kHarmonicTone: return "harmonic_tone";
    case Family::kReverberation: return "reverberation";
    case Family::kNoiseGate: return "noise_gate";
    case Family::kPitchShift: return "pitch_shift";
    case Family::kLowPass: return "low_pass";
    case Family::kHighPass: return "high_pass";
    case Family::kEcho: return "echo";
    case Family::kHardClip: return "hard_clip";
    case Family::kVibrato: return "vibrato";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(Family::kVibrato); ++i) {
    if (family_name(static_cast<Family>(i)) == name) return static_cast<Family>(i);
  }
  fail(ErrorCode::kInvalidParams, "unknown distortion family '" + std::string(name) + "'");
}

std::string_view variant_name(MeasureVariant v) { return v == MeasureVariant::kPS ? "PS" : "PM"; }

MeasureVariant parse_variant(std::string_view name) {
  if (name == "PS" || name == "ps") return MeasureVariant::kPS;
  if (name == "PM" || name == "pm") return MeasureVariant::kPM;
  fail(ErrorCode::kInvalidParams, "unknown measure variant '" + std::string(name) + "'");
}

std::string_view color_name(NoiseColor c) {
  switch (c) {
    case NoiseColor::kWhite: return "white";
    case NoiseColor::kPink: return "pink";
    case NoiseColor::kBrown: return "brown";
  }
  return "white";
}

NoiseColor parse_color(std::string_view name) {
  if (name == "white") return NoiseColor::kWhite;
  if (name == "pink") return NoiseColor::kPink;
  if (name == "brown") return NoiseColor::kBrown;
  fail(ErrorCode::kInvalidParams, "unknown noise color '" + std::string(name) + "'");
}

std::string DistortionSpec::describe() const {
  std::ostringstream os;
  os << family_name(family) << '[' << variant_name(variant) << "](";
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, NotchParams>) {
          if (p.centers_hz.empty()) {
            os << "count=" << p.count;
          } else {
            os << "centers=";
            for (std::size_t i = 0; i < p.centers_hz.size(); ++i) os << (i ? "/" : "") << p.centers_hz[i];
          }
        } else if constexpr (std::is_same_v<T, CombParams>) {
          os << "delay_ms=" << p.delay_ms << ",feedback=" << p.feedback;
        } else if constexpr (std::is_same_v<T, TremoloParams>) {
          os << "rate_hz=" << p.rate_hz << ",depth=" << p.depth;
        } else if constexpr (std::is_same_v<T, NoiseParams>) {
          os << "snr_db=" << p.snr_db << ",color=" << color_name(p.color);
        } else if constexpr (std::is_same_v<T, ToneParams>) {
          os << "freq_hz=" << p.freq_hz << ",amplitude=" << p.amplitude;
        } else if constexpr (std::is_same_v<T, ReverbParams>) {
          if (variant == MeasureVariant::kPS) {
            os << "rt60_s=" << p.rt60_s << ",early_ms=" << p.early_ms;
          } else {
            os << "tail_ms=" << p.tail_ms << ",decay_scale=" << p.decay_scale;
          }
        } else if constexpr (std::is_same_v<T, GateParams> || std::is_same_v<T, ClipParams>) {
          os << "threshold=" << p.threshold;
        } else if constexpr (std::is_same_v<T, PitchParams>) {
          os << "semitones=" << p.semitones;
        } else if constexpr (std::is_same_v<T, FilterParams>) {
          if (variant == MeasureVariant::kPS) {
            os << "cutoff_hz=" << p.cutoff_hz;
          } else {
            os << "energy_percent=" << p.energy_percent;
          }
        } else if constexpr (std::is_same_v<T, EchoParams>) {
          os << "delay_ms=" << p.delay_ms << ",gain=" << p.gain;
        } else if constexpr (std::is_same_v<T, VibratoParams>) {
          os << "rate_hz=" << p.rate_hz;
          if (variant == MeasureVariant::kPS) os << ",depth=" << p.depth;
        }
      },
      params);
  os << ')';
  return os.str();
}

void validate_spec(const DistortionSpec& spec, int fs) {
  require(fs > 0, ErrorCode::kInvalidArgument, "sample_rate must be positive");
  const bool ps = spec.variant == MeasureVariant::kPS;
  const double nyquist = fs / 2.0;
  switch (spec.family) {
    case Family::kNotch: {
      const auto& p = params_as<NotchParams>(spec);
      check_range(p.half_bandwidth_hz, 60.0, 60.0, "notch half-bandwidth");
      if (ps) {
        require(p.centers_hz.size() == 1, ErrorCode::kInvalidParams, "PS notch takes exactly one center");
        check_range(p.centers_hz[0], 500.0, 8000.0, "notch center");
        if (p.centers_hz[0] + p.half_bandwidth_hz >= nyquist) {
          fail(ErrorCode::kInvalidParams, "notch center too close to Nyquist");
        }
      } else {
        if (p.centers_hz.empty()) check_range(p.count, 1, 20, "notch count");
        const auto centers = pm_notch_centers(p, fs);
        require(!centers.empty() && centers.size() <= 20, ErrorCode::kInvalidParams, "PM notch count must be 1..20");
        for (std::size_t i = 0; i < centers.size(); ++i) {
          check_range(centers[i], 80.0, 0.45 * fs, "notch center");
          if (i > 0 && centers[i] - centers[i - 1] < 300.0 - kTol) {
            fail(ErrorCode::kInvalidParams, "notch spacing below 300 Hz");
          }
        }
      }
      break;
    }
    case Family::kComb: {
      const auto& p = params_as<CombParams>(spec);
      if (ps) {
        check_range(p.delay_ms, 2.5, 15.0, "comb delay_ms");
        check_range(p.feedback, 0.4, 0.9, "comb feedback");
      } else {
        static constexpr double kPairs[5][2] = {{2.5, 0.4}, {5, 0.5}, {7.5, 0.6}, {10, 0.7}, {12.5, 0.9}};
        const bool ok = std::any_of(std::begin(kPairs), std::end(kPairs), [&](const double* pr) {
          return std::abs(pr[0] - p.delay_ms) < kTol && std::abs(pr[1] - p.feedback) < kTol;
        });
        require(ok, ErrorCode::kInvalidParams, "PM comb must use one of the tabulated delay-gain pairs");
      }
      break;
    }
    case Family::kTremolo: {
      const auto& p = params_as<TremoloParams>(spec);
      check_range(p.rate_hz, 1.0, 6.0, "tremolo rate_hz");
      check_range(p.depth, ps ? 0.3 : 1.0, 1.0, "tremolo depth");
      break;
    }
    case Family::kAdditiveNoise:
      check_range(params_as<NoiseParams>(spec).snr_db, -15.0, 15.0, "noise snr_db");
      break;
    case Family::kHarmonicTone: {
      const auto& p = params_as<ToneParams>(spec);
      check_range(p.freq_hz, 100.0, std::min(4000.0, nyquist - 1.0), "tone freq_hz");
      check_range(p.amplitude, ps ? 0.02 : 0.4, ps ? 0.08 : 1.0, "tone amplitude");
      break;
    }
    case Family::kReverberation: {
      const auto& p = params_as<ReverbParams>(spec);
      if (ps) {
        check_range(p.rt60_s, 0.3, 1.1, "reverb rt60_s");
        check_range(p.early_ms, 5.0, 20.0, "reverb early_ms");
      } else {
        check_range(p.tail_ms, 50.0, 400.0, "reverb tail_ms");
        check_range(p.decay_scale, 0.3, 0.9, "reverb decay_scale");
      }
      break;
    }
    case Family::kNoiseGate:
      check_range(params_as<GateParams>(spec).threshold, ps ? 0.005 : 0.05, ps ? 0.04 : 0.4, "gate threshold");
      break;
    case Family::kPitchShift: {
      const double s = params_as<PitchParams>(spec).semitones;
      check_range(s, -4.0, 4.0, "pitch semitones");
      break;
    }
    case Family::kLowPass:
    case Family::kHighPass: {
      const auto& p = params_as<FilterParams>(spec);
      const bool low = spec.family == Family::kLowPass;
      if (ps) {
        check_range(p.cutoff_hz, low ? 2000.0 : 100.0, low ? 6000.0 : 800.0, "filter cutoff_hz");
        require(p.cutoff_hz < nyquist, ErrorCode::kInvalidParams, "filter cutoff at or above Nyquist");
      } else {
        check_range(p.energy_percent, low ? 50.0 : 5.0, low ? 95.0 : 50.0, "filter energy_percent");
      }
      break;
    }
    case Family::kEcho: {
      const auto& p = params_as<EchoParams>(spec);
      check_range(p.delay_ms, ps ? 5.0 : 50.0, ps ? 20.0 : 150.0, "echo delay_ms");
      check_range(p.gain, ps ? 0.3 : 0.4, 0.7, "echo gain");
      break;
    }
    case Family::kHardClip:
      check_range(params_as<ClipParams>(spec).threshold, 0.3, 0.7, "clip threshold");
      break;
    case Family::kVibrato: {
      const auto& p = params_as<VibratoParams>(spec);
      check_range(p.rate_hz, 3.0, 7.0, "vibrato rate_hz");
      if (ps) check_range(p.depth, 0.001, 0.003, "vibrato depth");
      break;
    }
  }
}

double amplitude_percentile(std::span<const double> x, double percentile) {
  if (x.empty()) return 0.0;
  std::vector<double> a(x.size());
  std::transform(x.begin(), x.end(), a.begin(), [](double v) { return std::abs(v); });
  std::sort(a.begin(), a.end());
  const double pos = percentile / 100.0 * static_cast<double>(a.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= a.size()) return a.back();
  return a[i] + (pos - static_cast<double>(i)) * (a[i + 1] - a[i]);
}

double spectral_energy_cutoff(std::span<const double> x, int fs, double percent) {
  const std::vector<double> p = power_spectrum(x, next_pow2(std::max<std::size_t>(x.size(), 2)));
  double total = 0.0;
  for (double v : p) total += v;
  require(total > 0.0, ErrorCode::kInvalidParams, "spectral cutoff rule needs a non-silent signal");
  const double bin_hz = static_cast<double>(fs) / (2.0 * static_cast<double>(p.size() - 1));
  double acc = 0.0;
  double f = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    acc += p[k];
    if (acc >= percent / 100.0 * total) {
      f = static_cast<double>(k) * bin_hz;
      break;
    }
  }
  const double top = std::floor(0.45 * fs / 100.0) * 100.0;
  return std::clamp(std::round(f / 100.0) * 100.0, 100.0, top);
}

double adaptive_vibrato_depth(std::span<const double> x) {
  const double a95 = amplitude_percentile(x, 95.0);
  if (a95 <= 0.0) return 0.01;
  return std::clamp(0.05 * rms(x) / a95, 0.01, 0.05);
}

Utterance apply_distortion(const Utterance& y, const DistortionSpec& spec) {
  check_utterance(y);
  validate_spec(spec, y.sample_rate);
  const int fs = y.sample_rate;
  const bool ps = spec.variant == MeasureVariant::kPS;
  const std::size_t len = y.size();
  require(len >= 2, ErrorCode::kTooShort, "utterance too short to distort");

  Utterance out = y;
  std::vector<double>& s = out.samples;
  CounterRng rng(spec.seed);

  switch (spec.family) {
    case Family::kNotch: {
      const auto& p = std::get<NotchParams>(spec.params);
      for (double c : pm_notch_centers(p, fs)) notch(c, 2.0 * p.half_bandwidth_hz, fs).run(s);
      break;
    }
    case Family::kComb: {
      const auto& p = std::get<CombParams>(spec.params);
      const std::size_t d = ms_to_samples(p.delay_ms, fs);
      if (len <= d) fail(ErrorCode::kTooShort, "utterance shorter than comb delay");
      for (std::size_t n = d; n < len; ++n) s[n] += p.feedback * s[n - d];
      break;
    }
    case Family::kTremolo: {
      const auto& p = std::get<TremoloParams>(spec.params);
      for (std::size_t n = 0; n < len; ++n) {
        s[n] *= 1.0 - 0.5 * p.depth * (1.0 - std::cos(2.0 * kPi * p.rate_hz * n / fs));
      }
      break;
    }
    case Family::kAdditiveNoise: {
      const auto& p = std::get<NoiseParams>(spec.params);
      std::vector<double> noise = colored_noise(len, p.color, rng);
      const double nr = rms(noise);
      const double target = rms(y.samples) / std::pow(10.0, p.snr_db / 20.0);
      const double g = nr > 0.0 ? target / nr : 0.0;
      for (std::size_t n = 0; n < len; ++n) s[n] += g * noise[n];
      break;
    }
    case Family::kHarmonicTone: {
      const auto& p = std::get<ToneParams>(spec.params);
      const double a = ps ? p.amplitude : p.amplitude * rms(y.samples);
      for (std::size_t n = 0; n < len; ++n) s[n] += a * std::sin(2.0 * kPi * p.freq_hz * n / fs);
      break;
    }
    case Family::kReverberation: {
      const std::vector<double> h = reverb_ir(std::get<ReverbParams>(spec.params), spec.variant, fs, rng);
      s = convolve_same(y.samples, h);
      break;
    }
    case Family::kNoiseGate: {
      const double thr = std::get<GateParams>(spec.params).threshold *
                         (ps ? 1.0 : amplitude_percentile(y.samples, 95.0));
      const std::vector<double> env = moving_rms(y.samples, std::max<std::size_t>(1, ms_to_samples(10.0, fs)));
      for (std::size_t n = 0; n < len; ++n) {
        if (env[n] < thr) s[n] = 0.0;
      }
      break;
    }
    case Family::kPitchShift: {
      if (len < pitch_window(fs)) fail(ErrorCode::kTooShort, "utterance shorter than the pitch-shift window");
      s = pitch_shift(y.samples, std::get<PitchParams>(spec.params).semitones, fs);
      break;
    }
    case Family::kLowPass:
    case Family::kHighPass: {
      const auto& p = std::get<FilterParams>(spec.params);
      const bool low = spec.family == Family::kLowPass;
      const double fc = ps ? p.cutoff_hz : spectral_energy_cutoff(y.samples, fs, p.energy_percent);
      for (double q : kButterQ) (low ? lowpass(fc, q, fs) : highpass(fc, q, fs)).run(s);
      break;
    }
    case Family::kEcho: {
      const auto& p = std::get<EchoParams>(spec.params);
      const std::size_t d = ms_to_samples(p.delay_ms, fs);
      if (len <= d) fail(ErrorCode::kTooShort, "utterance shorter than echo delay");
      for (std::size_t n = d; n < len; ++n) s[n] = y.samples[n] + p.gain * y.samples[n - d];
      break;
    }
    case Family::kHardClip: {
      const double thr = std::get<ClipParams>(spec.params).threshold *
                         (ps ? 1.0 : amplitude_percentile(y.samples, 95.0));
      for (double& v : s) v = std::clamp(v, -thr, thr);
      break;
    }
    case Family::kVibrato: {
      const auto& p = std::get<VibratoParams>(spec.params);
      const double depth = ps ? p.depth : adaptive_vibrato_depth(y.samples);
      s = vibrato(y.samples, p.rate_hz, depth, fs);
      break;
    }
  }
  s.resize(len, 0.0);
  return out;
}

}  // namespace mapss
