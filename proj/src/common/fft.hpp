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

#include <complex>
#include <span>
#include <vector>

namespace mapss {

/// In-place radix-2 FFT; size must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& x, bool inverse = false);

std::size_t next_pow2(std::size_t n);

/// |X_k|^2 for k = 0..nfft/2 of the zero-padded signal.
std::vector<double> power_spectrum(std::span<const double> x, std::size_t nfft);

/// Linear convolution truncated to x.size() samples (causal, same length as x).
std::vector<double> convolve_same(std::span<const double> x, std::span<const double> h);

}  // namespace mapss
