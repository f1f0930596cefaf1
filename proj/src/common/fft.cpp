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

#include "common/fft.hpp"

#include <cmath>
#include <numbers>

#include "common/error.hpp"

namespace mapss {

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft_inplace(std::vector<std::complex<double>>& x, bool inverse) {
  const std::size_t n = x.size();
  if (n <= 1) return;
  if ((n & (n - 1)) != 0) fail(ErrorCode::kInvalidArgument, "fft size must be a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = x[i + k];
        const auto v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    for (auto& v : x) v /= static_cast<double>(n);
  }
}

std::vector<double> power_spectrum(std::span<const double> x, std::size_t nfft) {
  std::vector<std::complex<double>> buf(nfft);
  for (std::size_t i = 0; i < std::min(nfft, x.size()); ++i) buf[i] = x[i];
  fft_inplace(buf);
  std::vector<double> p(nfft / 2 + 1);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::norm(buf[k]);
  return p;
}

std::vector<double> convolve_same(std::span<const double> x, std::span<const double> h) {
  if (x.empty() || h.empty()) return std::vector<double>(x.size(), 0.0);
  if (h.size() <= 64) {
    std::vector<double> y(x.size(), 0.0);
    for (std::size_t n = 0; n < x.size(); ++n) {
      double acc = 0.0;
      const std::size_t kmax = std::min(h.size() - 1, n);
      for (std::size_t k = 0; k <= kmax; ++k) acc += h[k] * x[n - k];
      y[n] = acc;
    }
    return y;
  }
  const std::size_t nfft = next_pow2(x.size() + h.size() - 1);
  std::vector<std::complex<double>> a(nfft), b(nfft);
  for (std::size_t i = 0; i < x.size(); ++i) a[i] = x[i];
  for (std::size_t i = 0; i < h.size(); ++i) b[i] = h[i];
  fft_inplace(a);
  fft_inplace(b);
  for (std::size_t i = 0; i < nfft; ++i) a[i] *= b[i];
  fft_inplace(a, true);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = a[i].real();
  return y;
}

}  // namespace mapss
