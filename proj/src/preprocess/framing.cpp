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

#include "preprocess/framing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "common/error.hpp"

namespace mapss {

void check_utterance(const Utterance& u) {
  require(u.sample_rate > 0, ErrorCode::kInvalidArgument, "sample_rate must be positive");
  for (double v : u.samples) {
    if (!std::isfinite(v)) fail(ErrorCode::kInvalidArgument, "utterance contains non-finite samples");
  }
}

double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

double peak_abs(std::span<const double> x) {
  double p = 0.0;
  for (double v : x) p = std::max(p, std::abs(v));
  return p;
}

std::size_t frame_count(std::size_t length, std::size_t frame_length, std::size_t hop) {
  if (frame_length == 0 || hop == 0 || length < frame_length) return 0;
  return (length - frame_length) / hop + 1;
}

FramePlan detect_overlap_frames(const std::vector<Utterance>& refs, const PlanParams& params) {
  require(refs.size() >= 2, ErrorCode::kInvalidArgument, "overlap detection needs at least two references");
  const int fs = refs.front().sample_rate;
  const std::size_t length = refs.front().size();
  for (const auto& r : refs) {
    check_utterance(r);
    if (r.sample_rate != fs || r.size() != length) {
      fail(ErrorCode::kLengthMismatch, "references must share sample rate and length");
    }
  }

  FramePlan plan;
  plan.frame_length = static_cast<std::size_t>(std::lround(params.frame_ms * fs / 1000.0));
  plan.hop = static_cast<std::size_t>(std::lround(params.hop_ms * fs / 1000.0));
  require(plan.frame_length > 0 && plan.hop > 0 && plan.hop <= plan.frame_length,
          ErrorCode::kInvalidArgument, "frame geometry requires 0 < hop <= frame length");
  plan.frames_per_second = static_cast<double>(fs) / static_cast<double>(plan.hop);
  plan.total_frames = frame_count(length, plan.frame_length, plan.hop);

  const double ratio = std::pow(10.0, params.activity_db / 20.0);
  std::vector<double> thresholds;
  for (const auto& r : refs) thresholds.push_back(rms(r.samples) * ratio);

  for (std::size_t f = 0; f < plan.total_frames; ++f) {
    std::vector<int> active;
    for (std::size_t s = 0; s < refs.size(); ++s) {
      const std::span<const double> frame(refs[s].samples.data() + plan.frame_start(f), plan.frame_length);
      const double level = rms(frame);
      if (level > 0.0 && level >= thresholds[s]) active.push_back(refs[s].source_id);
    }
    if (active.size() >= 2) {
      std::sort(active.begin(), active.end());
      plan.active_frames.push_back(f);
      plan.active_sources.push_back(std::move(active));
    }
  }
  return plan;
}

Utterance inject_delay(const Utterance& u, double delay_ms) {
  require(delay_ms >= 0.0 && std::isfinite(delay_ms), ErrorCode::kInvalidArgument, "delay must be >= 0");
  const auto shift = static_cast<std::size_t>(std::llround(delay_ms * u.sample_rate / 1000.0));
  if (shift > 0 && shift >= u.size()) {
    fail(ErrorCode::kDelayTooLong, "delay of " + std::to_string(shift) + " samples exceeds utterance length");
  }
  Utterance out = u;
  std::fill(out.samples.begin(), out.samples.end(), 0.0);
  std::copy(u.samples.begin(), u.samples.end() - static_cast<std::ptrdiff_t>(shift),
            out.samples.begin() + static_cast<std::ptrdiff_t>(shift));
  return out;
}

std::vector<double> slice_frame(const Utterance& u, std::size_t start, std::size_t length) {
  std::vector<double> out(length, 0.0);
  if (start < u.size()) {
    const std::size_t n = std::min(length, u.size() - start);
    std::copy_n(u.samples.begin() + static_cast<std::ptrdiff_t>(start), n, out.begin());
  }
  return out;
}

}  // namespace mapss
