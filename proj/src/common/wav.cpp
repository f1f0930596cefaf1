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

#include "common/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "common/error.hpp"

namespace mapss {
namespace {

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
}

}  // namespace

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open wav file: " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    fail(ErrorCode::kFormatError, "not a RIFF/WAVE file: " + path.string());
  }

  int format = 0, channels = 0, bits = 0;
  WavData wav;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const unsigned char* chunk = buf.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > buf.size()) {
      // Tolerate a truncated trailing data chunk by clamping it.
      if (std::memcmp(chunk, "data", 4) != 0) fail(ErrorCode::kFormatError, "truncated wav chunk");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) fail(ErrorCode::kFormatError, "short fmt chunk");
      format = le16(chunk + 8);
      channels = le16(chunk + 10);
      wav.sample_rate = static_cast<int>(le32(chunk + 12));
      bits = le16(chunk + 22);
      if (format == 0xFFFE && size >= 40) format = le16(chunk + 32);  // WAVE_FORMAT_EXTENSIBLE
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = std::min<std::size_t>(size, buf.size() - body);
    }
    pos = body + size + (size & 1u);
  }
  if (!data || wav.sample_rate <= 0) fail(ErrorCode::kFormatError, "wav missing fmt or data chunk");
  if (channels != 1) fail(ErrorCode::kFormatError, "only mono wav is supported");

  if (format == 1 && bits == 16) {
    const std::size_t n = data_size / 2;
    wav.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      wav.samples[i] = static_cast<std::int16_t>(le16(data + 2 * i)) / 32768.0;
    }
  } else if (format == 1 && bits == 24) {
    const std::size_t n = data_size / 3;
    wav.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned char* p = data + 3 * i;
      std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
      if (v & 0x800000) v |= ~0xFFFFFF;
      wav.samples[i] = v / 8388608.0;
    }
  } else if (format == 3 && bits == 32) {
    const std::size_t n = data_size / 4;
    wav.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t bitsv = le32(data + 4 * i);
      float f;
      std::memcpy(&f, &bitsv, sizeof f);
      wav.samples[i] = f;
    }
  } else {
    fail(ErrorCode::kFormatError, "unsupported wav encoding (format " + std::to_string(format) +
                                      ", " + std::to_string(bits) + " bits)");
  }
  return wav;
}

void write_wav(const std::filesystem::path& path, const std::vector<double>& samples,
               int sample_rate, WavEncoding encoding) {
  const std::uint16_t bits = encoding == WavEncoding::kPcm16 ? 16 : encoding == WavEncoding::kPcm24 ? 24 : 32;
  const std::uint16_t format = encoding == WavEncoding::kFloat32 ? 3 : 1;
  const std::uint32_t bytes_per_sample = bits / 8;
  const std::uint32_t data_size = static_cast<std::uint32_t>(samples.size() * bytes_per_sample);

  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(out, 36 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(out, 16);
  put16(out, format);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(sample_rate));
  put32(out, static_cast<std::uint32_t>(sample_rate) * bytes_per_sample);
  put16(out, static_cast<std::uint16_t>(bytes_per_sample));
  put16(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(out, data_size);

  for (double s : samples) {
    const double c = std::clamp(s, -1.0, 1.0);
    if (encoding == WavEncoding::kFloat32) {
      const float f = static_cast<float>(s);
      std::uint32_t v;
      std::memcpy(&v, &f, sizeof v);
      put32(out, v);
    } else if (encoding == WavEncoding::kPcm16) {
      const auto v = static_cast<std::int16_t>(std::lround(std::clamp(c * 32768.0, -32768.0, 32767.0)));
      put16(out, static_cast<std::uint16_t>(v));
    } else {
      const auto v = static_cast<std::int32_t>(std::lround(std::clamp(c * 8388608.0, -8388608.0, 8388607.0)));
      out.push_back(static_cast<unsigned char>(v & 0xFF));
      out.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
      out.push_back(static_cast<unsigned char>((v >> 16) & 0xFF));
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::kIoError, "cannot write wav file: " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

}  // namespace mapss
