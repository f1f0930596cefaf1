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

#include "evalreport/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/error.hpp"

namespace mapss {
namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), ErrorCode::kDimensionMismatch, "correlation vectors differ in length");
  require(x.size() >= 2, ErrorCode::kInvalidArgument, "correlation needs at least two points");
}

std::vector<double> centered(std::span<const double> x) {
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  std::vector<double> c(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) c[k] = x[k] - m;
  return c;
}

double norm(const std::vector<double>& v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

}  // namespace

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  std::size_t s = 0;
  while (s < idx.size()) {
    std::size_t e = s + 1;
    while (e < idx.size() && x[idx[e]] == x[idx[s]]) ++e;
    const double avg = 0.5 * static_cast<double>(s + e + 1);
    for (std::size_t k = s; k < e; ++k) r[idx[k]] = avg;
    s = e;
  }
  return r;
}

double pcc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const auto cx = centered(x), cy = centered(y);
  const double nx = norm(cx), ny = norm(cy);
  const double sx = std::abs(*std::max_element(x.begin(), x.end(), [](double a, double b) { return std::abs(a) < std::abs(b); }));
  const double sy = std::abs(*std::max_element(y.begin(), y.end(), [](double a, double b) { return std::abs(a) < std::abs(b); }));
  if (nx <= 1e-14 * std::max(sx, 1e-300) || ny <= 1e-14 * std::max(sy, 1e-300))
    fail(ErrorCode::kZeroVariance, "correlation of a constant vector");
  const double r = std::inner_product(cx.begin(), cx.end(), cy.begin(), 0.0) / (nx * ny);
  return std::clamp(r, -1.0, 1.0);
}

double srcc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const auto rx = average_ranks(x), ry = average_ranks(y);
  return pcc(rx, ry);
}

std::vector<double> pcc_gradient(std::span<const double> v, std::span<const double> m) {
  const double r = pcc(v, m);
  const auto cv = centered(v), cm = centered(m);
  const double nv = norm(cv), nm = norm(cm);
  std::vector<double> g(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) g[k] = cm[k] / (nv * nm) - r * cv[k] / (nv * nv);
  return g;
}

}  // namespace mapss
