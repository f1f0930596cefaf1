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

#include "common/special.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "common/error.hpp"

namespace mapss {
namespace {

constexpr double kEps = 1e-14;
constexpr int kMaxIter = 200000;
constexpr double kTiny = 1e-300;

// log of x^k e^-x / Gamma(k)
double log_prefactor(double k, double x) {
  return -x + k * std::log(x) - std::lgamma(k);
}

// P(k, x) by the power series, valid and fast for x <= k + 1.
double lower_series(double k, double x) {
  double ap = k;
  double term = 1.0 / k;
  double sum = term;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(log_prefactor(k, x));
}

// Q(k, x) by the modified Lentz continued fraction, for x > k + 1.
double upper_fraction(double k, double x) {
  double b = x + 1.0 - k;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - k);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(log_prefactor(k, x)) * h;
}

}  // namespace

double gamma_q(double k, double x) {
  if (!(k > 0.0) || !(x >= 0.0) || std::isnan(x)) {
    fail(ErrorCode::kInvalidArgument, "gamma_q requires k > 0 and x >= 0");
  }
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x <= k + 1.0) return 1.0 - lower_series(k, x);
  return upper_fraction(k, x);
}

double gamma_p(double k, double x) {
  if (!(k > 0.0) || !(x >= 0.0) || std::isnan(x)) {
    fail(ErrorCode::kInvalidArgument, "gamma_p requires k > 0 and x >= 0");
  }
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x <= k + 1.0) return lower_series(k, x);
  return 1.0 - upper_fraction(k, x);
}

double gamma_cdf(double x, double k, double theta) {
  if (x <= 0.0) return 0.0;
  return gamma_p(k, x / theta);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorCode::kInvalidArgument, "normal_quantile requires p in (0,1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = sign * std::exp(-2.0 * j * j * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16) break;
    sign = -sign;
  }
  const double sf = 2.0 * sum;
  return sf < 0.0 ? 0.0 : (sf > 1.0 ? 1.0 : sf);
}

}  // namespace mapss
