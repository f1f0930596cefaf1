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

namespace mapss {

/// Regularized upper incomplete gamma Q(k, x) = Gamma(k, x) / Gamma(k).
/// Series branch for x <= k + 1, Lentz continued fraction otherwise; both
/// terminate at relative increment 1e-14. Requires k > 0, x >= 0.
double gamma_q(double k, double x);

/// Regularized lower incomplete gamma P(k, x) = 1 - Q(k, x).
double gamma_p(double k, double x);

/// Gamma(shape k, scale theta) cumulative distribution at x.
double gamma_cdf(double x, double k, double theta);

/// Standard normal quantile.
double normal_quantile(double p);

/// Asymptotic Kolmogorov survival function P(K > lambda).
double kolmogorov_sf(double lambda);

}  // namespace mapss
