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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "manifold/manifold.hpp"

using namespace mapss;

namespace {

Eigen::MatrixXd random_points(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  CounterRng r(seed);
  Eigen::MatrixXd x(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) x(i, j) = r.normal();
  return x;
}

}  // namespace

TEST(Graph, TwoPoints) {
  Eigen::MatrixXd x(2, 3);
  x << 0, 0, 0, 1, 2, 2;
  const DiffusionGraph g = build_graph(x, 1.0);
  EXPECT_DOUBLE_EQ(g.sigma2, 9.0);
  EXPECT_DOUBLE_EQ(g.kernel(0, 0), 1.0);
  EXPECT_NEAR(g.kernel(0, 1), std::exp(-1.0), 1e-15);
}

TEST(Graph, TwoPointSpectrum) {
  Eigen::MatrixXd x(2, 1);
  x << 0, 1;
  const DiffusionGraph g = build_graph(x, 0.0);
  const SpectralEmbedding se = decompose(g, 1, 0.99);
  const double e = std::exp(-1.0);
  ASSERT_EQ(se.full_dim(), 1u);
  EXPECT_NEAR(se.eigenvalues(0), (1 - e) / (1 + e), 1e-14);
}

TEST(Graph, AlphaZeroKeepsKernel) {
  const DiffusionGraph g = build_graph(random_points(9, 4, 1), 0.0);
  EXPECT_TRUE(g.kernel_alpha == g.kernel);
}

TEST(Graph, StochasticAndStationary) {
  const DiffusionGraph g = build_graph(random_points(12, 8, 2), 1.0);
  EXPECT_TRUE(g.kernel.isApprox(g.kernel.transpose(), 0.0));
  EXPECT_GE(g.kernel.minCoeff(), 0.0);
  EXPECT_LE(g.kernel.maxCoeff(), 1.0);
  for (Eigen::Index i = 0; i < 12; ++i) {
    EXPECT_NEAR(g.transition.row(i).sum(), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(g.kernel(i, i), 1.0);
  }
  EXPECT_GE(g.transition.minCoeff(), 0.0);
  const Eigen::RowVectorXd pit = g.stationary.transpose() * g.transition;
  EXPECT_LT((pit - g.stationary.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(g.stationary.sum(), 1.0, 1e-14);
  EXPECT_GT(g.stationary.minCoeff(), 0.0);

  // Oracle: the median of the 66 distinct pair distances.
  std::vector<double> d;
  const Eigen::MatrixXd x = random_points(12, 8, 2);
  for (int i = 0; i < 12; ++i)
    for (int j = i + 1; j < 12; ++j) d.push_back((x.row(i) - x.row(j)).squaredNorm());
  std::sort(d.begin(), d.end());
  EXPECT_NEAR(g.sigma2, 0.5 * (d[32] + d[33]), 1e-12);
}

TEST(Graph, DegenerateWhenAllRowsCoincide) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(5, 3);
  try {
    build_graph(x, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateGraph);
  }
}

TEST(Spectrum, OrderedAndPiOrthonormal) {
  const DiffusionGraph g = build_graph(random_points(15, 6, 3), 1.0);
  const SpectralEmbedding se = decompose(g, 1, 0.99);
  EXPECT_EQ(se.full_dim(), 14u);
  for (Eigen::Index l = 0; l < se.eigenvalues.size(); ++l) {
    EXPECT_LT(se.eigenvalues(l), 1.0);
    EXPECT_GT(se.eigenvalues(l), 0.0);
    if (l > 0) EXPECT_LE(se.eigenvalues(l), se.eigenvalues(l - 1));
  }
  const Eigen::MatrixXd gram = se.eigenvectors.transpose() * g.stationary.asDiagonal() * se.eigenvectors;
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(14, 14)).cwiseAbs().maxCoeff(), 1e-10);
  // Right eigenvectors of P.
  const Eigen::MatrixXd pu = g.transition * se.eigenvectors;
  const Eigen::MatrixXd lu = se.eigenvectors * se.eigenvalues.asDiagonal();
  EXPECT_LT((pu - lu).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Spectrum, TruncationRule) {
  const DiffusionGraph g = build_graph(random_points(10, 4, 4), 1.0);
  EXPECT_EQ(decompose(g, 1, 1.0).d, 9u);
  EXPECT_EQ(decompose(g, 1, 0.0).d, 1u);
  std::size_t last = 0;
  for (double tau = 0.0; tau <= 1.0; tau += 0.05) {
    const std::size_t d = decompose(g, 1, tau).d;
    EXPECT_GE(d, last);
    last = d;
  }
  Eigen::VectorXd lam(3);
  lam << 0.9, 0.5, 0.1;
  EXPECT_EQ(truncation_dimension(lam, 0.6), 1u);
  EXPECT_EQ(truncation_dimension(lam, 0.93), 2u);
  EXPECT_EQ(truncation_dimension(lam, 0.94), 3u);
}

TEST(Embedding, CoordinatesFollowPowerLaw) {
  const DiffusionGraph g = build_graph(random_points(10, 4, 5), 1.0);
  SpectralEmbedding se = decompose(g, 1, 0.99);
  se.d = 2;
  const Eigen::VectorXd y = embed(se, 3);
  EXPECT_NEAR(y(0), se.eigenvalues(0) * se.eigenvectors(3, 0), 1e-15);
  EXPECT_NEAR(y(1), se.eigenvalues(1) * se.eigenvectors(3, 1), 1e-15);
  SpectralEmbedding se2 = decompose(g, 2, 0.99);
  se2.d = 2;
  const Eigen::VectorXd y2 = embed(se2, 3);
  EXPECT_NEAR(y2(1), se.eigenvalues(1) * y(1), 1e-15);
  EXPECT_THROW(embed(se, 10), Error);
}

TEST(Embedding, IdenticalRowsEmbedTogether) {
  Eigen::MatrixXd x = random_points(8, 3, 6);
  x.row(5) = x.row(2);
  const DiffusionGraph g = build_graph(x, 1.0);
  const SpectralEmbedding se = decompose(g, 1, 1.0);
  const Eigen::MatrixXd y = embed_all(se, se.full_dim());
  EXPECT_LT((y.row(5) - y.row(2)).norm(), 1e-8);
}

TEST(DiffusionDistance, EqualsFullEmbeddingDistance) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto n = static_cast<Eigen::Index>(5 + seed % 16);
    const DiffusionGraph g = build_graph(random_points(n, 4, 100 + seed), seed % 2 ? 1.0 : 0.5);
    for (int t : {1, 2, 3}) {
      const SpectralEmbedding se = decompose(g, t, 1.0);
      const Eigen::MatrixXd y = embed_all(se, se.full_dim());
      const Eigen::MatrixXd pt = transition_power(g, t);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          const double dt = diffusion_distance(pt, g.stationary, static_cast<std::size_t>(i), static_cast<std::size_t>(j));
          EXPECT_NEAR(dt, (y.row(i) - y.row(j)).norm(), 1e-8 * std::max(1.0, dt));
        }
      }
    }
  }
}

TEST(DiffusionDistance, SelfZeroAndMixing) {
  const DiffusionGraph g = build_graph(random_points(10, 3, 7), 1.0);
  EXPECT_DOUBLE_EQ(diffusion_distance(g, 4, 4, 1), 0.0);
  EXPECT_LT(diffusion_distance(g, 0, 1, 200), 1e-6 * std::max(1e-300, diffusion_distance(g, 0, 1, 1)) + 1e-10);
}

TEST(Embedding, PermutationInvariantDistances) {
  const Eigen::MatrixXd x = random_points(11, 5, 8);
  std::vector<int> perm(11);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[2], perm[7]);
  Eigen::MatrixXd xp(11, 5);
  for (int i = 0; i < 11; ++i) xp.row(i) = x.row(perm[i]);
  const auto se = decompose(build_graph(x, 1.0), 1, 0.99);
  const auto sp = decompose(build_graph(xp, 1.0), 1, 0.99);
  ASSERT_EQ(se.d, sp.d);
  const Eigen::MatrixXd y = embed_all(se, se.d), yp = embed_all(sp, sp.d);
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j)
      EXPECT_NEAR((yp.row(i) - yp.row(j)).norm(), (y.row(perm[i]) - y.row(perm[j])).norm(), 1e-8);
}
