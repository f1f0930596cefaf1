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

#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "bounds/bounds.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"
#include "common/special.hpp"
#include "support/worlds.hpp"

using namespace mapss;

namespace {

Eigen::MatrixXd random_spd(Eigen::Index n, std::uint64_t seed) {
  CounterRng r(seed);
  Eigen::MatrixXd a(n, n + 3);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = r.normal();
  return a * a.transpose() / static_cast<double>(n);
}

Eigen::VectorXd random_vec(Eigen::Index n, std::uint64_t seed) {
  CounterRng r(seed);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = r.normal();
  return v;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kOk;
}

}  // namespace

TEST(Truncation, ClosedForm) {
  SpectralEmbedding se;
  se.eigenvalues = Eigen::Vector3d(0.9, 0.5, 0.1);
  se.eigenvectors = Eigen::MatrixXd::Identity(4, 3);
  se.stationary = Eigen::Vector4d(0.1, 0.2, 0.3, 0.4);
  se.t = 1;
  const TruncationBound tb = truncation_stats(se, 1);
  EXPECT_NEAR(tb.expected_error, std::sqrt(0.26), 1e-15);
  EXPECT_EQ(tb.m, 2u);
  EXPECT_DOUBLE_EQ(truncation_stats(se, 3).expected_error, 0.0);
  EXPECT_DOUBLE_EQ(truncation_stats(se, 3).tail(0.05), 0.0);
  const double k = 1.0 / std::sqrt(0.1) / std::sqrt(std::log(2.0));
  EXPECT_NEAR(tb.tail(0.05), 0.5 * k * (2.0 + std::sqrt(2.0 * std::log(20.0))), 1e-12);
  EXPECT_GE(truncation_stats(se, 1).expected_error, truncation_stats(se, 2).expected_error);
  se.t = 2;
  EXPECT_NEAR(truncation_stats(se, 1).expected_error, std::sqrt(0.0625 + 0.0001), 1e-15);
}

TEST(Truncation, MonteCarloUnderStationary) {
  CounterRng r(11);
  Eigen::MatrixXd x(30, 5);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = r.normal();
  const DiffusionGraph g = build_graph(x, 1.0);
  const SpectralEmbedding se = decompose(g, 1, 0.8);
  const std::size_t d = se.d;
  const TruncationBound tb = truncation_stats(se, d);
  std::vector<double> cdf(se.size());
  std::partial_sum(se.stationary.data(), se.stationary.data() + se.size(), cdf.begin());
  const int draws = 20000;
  double s = 0.0, s2 = 0.0;
  for (int k = 0; k < draws; ++k) {
    const double u = r.uniform() * cdf.back();
    const auto i = static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    const double v = truncation_residual_sq(se, d, i);
    s += v;
    s2 += v * v;
  }
  const double mean = s / draws;
  const double se_mean = std::sqrt((s2 / draws - mean * mean) / draws);
  const double want = tb.expected_error * tb.expected_error;
  EXPECT_LT(std::abs(mean - want), 3.0 * se_mean + 1e-15);
}

TEST(Schur, IdentityOnRandomSplits) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Eigen::MatrixXd s = random_spd(8, seed);
    const Eigen::VectorXd delta = random_vec(8, 100 + seed);
    const SchurResidual res = schur_residual(delta, s, 5);
    const double full = mahalanobis_sq(delta, Eigen::VectorXd::Zero(8), s);
    EXPECT_NEAR(res.truncated_sq + res.energy, full, 1e-8 * full);
    EXPECT_NEAR(res.truncated_sq, mahalanobis_sq(delta.head(5), Eigen::VectorXd::Zero(5), s.topLeftCorner(5, 5)),
                1e-10 * full);
    EXPECT_GE(res.energy, 0.0);
  }
}

TEST(Schur, BlockDiagonalAndZero) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(5, 5);
  s.topLeftCorner(3, 3) = random_spd(3, 1);
  s.bottomRightCorner(2, 2) = random_spd(2, 2);
  Eigen::VectorXd delta = random_vec(5, 3);
  const SchurSplit split(s, 3, 1e-6);
  const SchurResidual res = split.residual(delta);
  EXPECT_LT((res.r - delta.tail(2)).norm(), 1e-15);
  Eigen::MatrixXd want = s.bottomRightCorner(2, 2);
  want.diagonal().array() += 1e-6;
  EXPECT_LT((split.complement() - want).norm(), 1e-14);
  delta.tail(2).setZero();
  EXPECT_DOUBLE_EQ(split.residual(delta).energy, 0.0);
  EXPECT_EQ(code_of([&] { SchurSplit(s, 6); }), ErrorCode::kIndexOutOfRange);
}

TEST(Schur, FullSplitHasNoResidual) {
  const Eigen::MatrixXd s = random_spd(4, 9);
  const SchurResidual res = schur_residual(random_vec(4, 1), s, 4);
  EXPECT_EQ(res.r.size(), 0);
  EXPECT_DOUBLE_EQ(res.energy, 0.0);
}

TEST(PsBound, SymmetricResidualRadius) {
  // Identical clusters at mirrored centroids: both residuals equal rho.
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(3, 3);
  std::vector<ClusterStatsPS> full(2);
  full[0] = {Eigen::Vector3d(-1, 0, 0), cov, 11};
  full[1] = {Eigen::Vector3d(1, 0, 0), cov, 11};
  const Eigen::Vector3d y(0, 0, 0.5);
  PsResult s;
  s.a = s.b = 1.0 / std::sqrt(1 + 1e-6);
  s.ps = 0.5;
  s.j_star = 1;
  const std::vector<double> n_eff = {7.7, 7.7};
  const PsBound b = ps_frame_bound(y, full, 0, s, 2, n_eff, BoundConfig{});
  const double rho = std::sqrt(b.residual_a);
  EXPECT_NEAR(b.residual_a, b.residual_b, 1e-15);
  EXPECT_NEAR(rho, 0.5 / std::sqrt(1 + 1e-6), 1e-12);
  EXPECT_NEAR(b.radius, rho / (s.a + s.b), 1e-12);
  EXPECT_GT(b.half_width, 0.0);
}

TEST(PsBound, ZeroResidualWhenUntruncated) {
  Eigen::MatrixXd cov = random_spd(3, 4);
  std::vector<ClusterStatsPS> full = {{Eigen::Vector3d(0, 0, 0), cov, 9}, {Eigen::Vector3d(2, 0, 0), cov, 9}};
  const Eigen::Vector3d y(0.2, 0.1, 0.0);
  const PsResult s = compute_ps(y, full, 0);
  const std::vector<double> n_eff = {6.3, 6.3};
  EXPECT_DOUBLE_EQ(ps_frame_bound(y, full, 0, s, 3, n_eff, BoundConfig{}).radius, 0.0);
}

TEST(PsBound, HalfWidthFormula) {
  ClusterSpread sp{4.0, 1.0, 6.0};
  BoundConfig cfg;
  const auto [dmu, dsig] = ps_cluster_widths(sp, 7.0, cfg);
  EXPECT_NEAR(dmu, std::sqrt(2 * 4.0 * std::log(2 / 0.025) / 7.0), 1e-14);
  EXPECT_NEAR(dsig, 4.0 * (1.5 / 7.0 + (1.5 + std::log(2 / 0.025)) / 7.0), 1e-14);
  const double e = ps_distance_error(2.0, sp, dmu, dsig, 0.05);
  EXPECT_NEAR(e, 2 * std::sqrt(2.0) * dmu * std::sqrt(4.0 / 1.2) + 2.0 * dsig / 4.0, 1e-12);
}

TEST(PsBound, EffectiveSampleSize) {
  BoundConfig cfg;
  const Eigen::MatrixXd m = random_spd(10, 1);
  EXPECT_DOUBLE_EQ(effective_sample_size(m, cfg), 7.0);
  cfg.bartlett_neff = true;
  CounterRng r(5);
  Eigen::MatrixXd iid(200, 3), walk(200, 3);
  for (Eigen::Index i = 0; i < 200; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) {
      iid(i, j) = r.normal();
      walk(i, j) = (i ? 0.9 * walk(i - 1, j) : 0.0) + r.normal();
    }
  EXPECT_GT(effective_sample_size(iid, cfg), 120.0);
  EXPECT_LT(effective_sample_size(walk, cfg), 60.0);
  EXPECT_GE(effective_sample_size(walk, cfg), 1.0);
}

TEST(PmBound, CornerClosedForm) {
  PmBox box{1.0, 1.0, std::log(2.0), 0.0, 0.0, 0.5 * std::log(2.0)};
  const double want = std::max(std::abs(std::pow(2.0, -1.5) - 0.5), std::abs(std::pow(2.0, -0.5) - 0.5));
  EXPECT_NEAR(box_corner_max(box), want, 1e-12);
  EXPECT_NEAR(want, 0.2071, 1e-4);
  box.da = 0.0;
  EXPECT_DOUBLE_EQ(box_corner_max(box), 0.0);
}

TEST(PmBound, CornersDominateGridScan) {
  CounterRng r(21);
  for (int n = 0; n < 20; ++n) {
    PmBox box{r.uniform(0.5, 5.0), r.uniform(0.3, 3.0), r.uniform(0.1, 8.0), 0, 0, 0};
    box.dk = r.uniform(0.0, 0.5) * box.k;
    box.dtheta = r.uniform(0.0, 0.5) * box.theta;
    box.da = r.uniform(0.0, 0.5) * box.a;
    const double corner = box_corner_max(box);
    const double center = gamma_q(box.k, box.a / box.theta);
    double grid = 0.0;
    for (int u = 0; u <= 9; ++u)
      for (int v = 0; v <= 9; ++v)
        for (int w = 0; w <= 9; ++w) {
          const double k = box.k - box.dk + 2 * box.dk * u / 9.0;
          const double t = box.theta - box.dtheta + 2 * box.dtheta * v / 9.0;
          const double a = box.a - box.da + 2 * box.da * w / 9.0;
          grid = std::max(grid, std::abs(gamma_q(k, a / t) - center));
        }
    EXPECT_GE(corner, grid - 1e-9);
  }
}

TEST(PmBound, LocalBoxClamps) {
  GammaFit f;
  f.mean = 4.0;
  f.variance = 2.0;
  f.k = 8.0;
  f.theta = 0.5;
  const PmBox b = pm_local_box(f, 3.0, 10.0, 20, 0.05);
  EXPECT_DOUBLE_EQ(b.dk, 4.0);
  EXPECT_DOUBLE_EQ(b.dtheta, 0.25);
  EXPECT_DOUBLE_EQ(b.da, 1.5);
  const PmBox z = pm_local_box(f, 0.0, 10.0, 20, 0.05);
  EXPECT_DOUBLE_EQ(z.da, 0.0);
}

TEST(PmBound, UntruncatedRadiusZero) {
  CounterRng r(2);
  Eigen::MatrixXd dist(12, 3);
  for (Eigen::Index i = 0; i < 12; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) dist(i, j) = r.normal();
  const Eigen::Vector3d ref = Eigen::Vector3d::Zero(), y(0.3, -0.2, 0.1);
  const ClusterStatsPM c = cluster_stats_pm(ref, dist);
  const GammaFit fit = fit_gamma(c, dist);
  const double a = mahalanobis_sq(y, ref, c.covariance);
  const PmBound b = pm_frame_bound(ref, dist, y, 3, fit, a, BoundConfig{});
  EXPECT_DOUBLE_EQ(b.radius, 0.0);
  EXPECT_TRUE(b.valid);
  EXPECT_FALSE(b.gradient_fallback);
  EXPECT_GT(b.half_width, 0.0);
  EXPECT_LE(b.half_width, 1.0);
}

TEST(PmBound, TruncatedDistancesMatchFit) {
  CounterRng r(3);
  Eigen::MatrixXd dist(15, 5);
  for (Eigen::Index i = 0; i < 15; ++i)
    for (Eigen::Index j = 0; j < 5; ++j) dist(i, j) = r.normal() * (j < 3 ? 1.0 : 0.1);
  const Eigen::VectorXd ref = Eigen::VectorXd::Zero(5);
  const Eigen::VectorXd y = dist.row(0).transpose() * 0.5;
  const ClusterStatsPM cut = cluster_stats_pm(ref.head(3), dist.leftCols(3));
  const GammaFit fit = fit_gamma(cut, dist.leftCols(3));
  const double a = mahalanobis_sq(y.head(3), ref.head(3), cut.covariance);
  const PmBound b = pm_frame_bound(ref, dist, y, 3, fit, a, BoundConfig{});
  EXPECT_GT(b.delta_max, 0.0);
  EXPECT_GT(b.truncation_box.dk, 0.0);
  EXPECT_GE(b.radius, 0.0);
  EXPECT_GE(b.r_max, *std::max_element(fit.distances.begin(), fit.distances.end()) - 1e-9);
}

TEST(Coverage, PsIntervals) {
  const auto c = worlds::ps_coverage(300, 30, 7, 0.05);
  EXPECT_GE(c.rate(), 0.93) << c.covered << "/" << c.trials;
}

TEST(Coverage, PmIntervals) {
  const auto c = worlds::pm_coverage(300, 40, 8, 0.05);
  EXPECT_GE(c.rate(), 0.93) << c.covered << "/" << c.trials;
}

TEST(Coverage, HalfWidthShrinksWithClusterSize) {
  const auto small = worlds::ps_coverage(150, 15, 9, 0.05);
  const auto large = worlds::ps_coverage(150, 120, 9, 0.05);
  EXPECT_LT(large.mean_half_width, small.mean_half_width);
  const auto pm_small = worlds::pm_coverage(150, 15, 10, 0.05);
  const auto pm_large = worlds::pm_coverage(150, 120, 10, 0.05);
  EXPECT_LE(pm_large.mean_half_width, pm_small.mean_half_width);
}

TEST(Propagate, AverageAndPesq) {
  const std::vector<double> r(20, 0.03), h(20, 0.1);
  const UtteranceBound u = propagate_average(r, h, 0.95);
  EXPECT_NEAR(u.b, 0.03, 1e-15);
  EXPECT_NEAR(u.h, std::sqrt(5.0) / std::sqrt(20.0) * 0.1, 1e-15);
  EXPECT_NEAR(std::sqrt(5.0), 2.236, 1e-3);

  AggregationConfig agg;
  agg.method = AggregationMethod::kPesq;
  agg.window = 4;
  agg.hop = 4;
  EXPECT_EQ(overlap_factor(agg), 1u);
  const double level = 3.8224 / 1.3669;
  const UtteranceBound p = propagate_pesq(r, h, 0.95, agg, level);
  const double m = static_cast<double>(pesq_window_count(20, agg));
  EXPECT_EQ(m, 4.0);
  EXPECT_NEAR(p.b, 0.03 / 2.0 * 1.3669, 1e-12);
  EXPECT_NEAR(p.h, 0.1 / 2.0 * 1.3669, 1e-12);
  EXPECT_LE(pesq_logistic_slope(0.3), 1.3669);

  const std::vector<double> none;
  EXPECT_EQ(code_of([&] { propagate_average(none, none, 0.95); }), ErrorCode::kEmptySet);
}

TEST(CorrelationBounds, ZeroInputsGiveZero) {
  const std::vector<double> v = {0.2, 0.5, 0.4, 0.9}, mos = {1.5, 3.0, 2.5, 4.5}, zero(4, 0.0);
  const auto p = pcc_bound(v, mos, zero, zero, 0.95);
  EXPECT_DOUBLE_EQ(p.b, 0.0);
  EXPECT_DOUBLE_EQ(p.h, 0.0);
  const auto s = srcc_bound(v, mos, zero, zero, 0.95, 1000, 1);
  EXPECT_DOUBLE_EQ(s.b, 0.0);
  EXPECT_DOUBLE_EQ(s.h, 0.0);
  EXPECT_DOUBLE_EQ(s.value, 1.0);
}

TEST(CorrelationBounds, SrccJitterBelowRankGaps) {
  const std::vector<double> v = {0.1, 0.3, 0.5, 0.7, 0.9}, mos = {1, 3, 2, 5, 4};
  const std::vector<double> b(5, 0.0), h(5, 1e-6);
  EXPECT_DOUBLE_EQ(srcc_bound(v, mos, b, h, 0.95, 10000, 3).h, 0.0);
  const std::vector<double> big(5, 0.5);
  EXPECT_GT(srcc_bound(v, mos, b, big, 0.95, 2000, 3).h, 0.0);
}

TEST(CorrelationBounds, PccDeltaMethod) {
  const std::vector<double> v = {0.2, 0.5, 0.4, 0.9}, mos = {1.5, 3.0, 2.5, 4.5};
  const std::vector<double> b = {0.01, 0.02, 0.0, 0.03}, h = {0.05, 0.05, 0.05, 0.05};
  const auto p = pcc_bound(v, mos, b, h, 0.95);
  EXPECT_GT(p.b, 0.0);
  EXPECT_GT(p.h, 0.0);
  // Shifting every system by the same bias leaves PCC unchanged.
  const std::vector<double> flat(4, 0.2);
  EXPECT_NEAR(pcc_bound(v, mos, flat, h, 0.95).b, 0.0, 1e-15);
  EXPECT_EQ(code_of([&] { pcc_bound(std::vector<double>{1, 2}, std::vector<double>{1, 2}, b, h, 0.95); }),
            ErrorCode::kDimensionMismatch);
}

TEST(CorrelationBounds, ScenarioCombine) {
  std::vector<std::vector<CorrelationBound>> trials = {{{0.8, 0.1, 0.2}, {0.6, 0.3, 0.2}}};
  const std::vector<double> rho0 = {0.0}, rho1 = {1.0};
  const auto c0 = combine_scenario(trials, rho0, 0.95);
  EXPECT_NEAR(c0.value, 0.7, 1e-15);
  EXPECT_NEAR(c0.b, 0.2, 1e-15);
  EXPECT_NEAR(c0.h, std::sqrt(0.04 + 0.04) / 2.0, 1e-12);
  EXPECT_NEAR(combine_scenario(trials, rho1, 0.95).h, 0.2, 1e-12);
  // Trial order does not matter.
  std::vector<std::vector<CorrelationBound>> two = {{{0.5, 0.1, 0.1}}, {{0.9, 0.2, 0.3}}};
  std::vector<std::vector<CorrelationBound>> swapped = {two[1], two[0]};
  EXPECT_DOUBLE_EQ(combine_scenario(two, {}, 0.95).h, combine_scenario(swapped, {}, 0.95).h);
}
