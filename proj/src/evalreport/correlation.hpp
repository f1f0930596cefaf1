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

#include <span>
#include <vector>

namespace mapss {

/// 1-based ranks with ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> x);

/// Pearson correlation. Throws ZeroVariance for a constant argument.
double pcc(std::span<const double> x, std::span<const double> y);

/// Spearman correlation: Pearson on average ranks.
double srcc(std::span<const double> x, std::span<const double> y);

/// d pcc(v, m) / dv at v.
std::vector<double> pcc_gradient(std::span<const double> v, std::span<const double> m);

}  // namespace mapss
