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

#include "manifold/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "common/error.hpp"

namespace mapss {
namespace {

constexpr double kEigFloor = 1e-12;

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace

DiffusionGraph build_graph(const Eigen::MatrixXd& x, double alpha) {
  const Eigen::Index n = x.rows();
  require(n >= 2, ErrorCode::kInvalidArgument, "graph needs at least two items");
  require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::kInvalidArgument, "alpha must lie in [0, 1]");
  require(x.allFinite(), ErrorCode::kInvalidArgument, "embedding contains non-finite values");

  const Eigen::MatrixXd xt = x.transpose();
  Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> pairs;
  pairs.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = (xt.col(i) - xt.col(j)).squaredNorm();
      d2(i, j) = d2(j, i) = v;
      if (v > 0.0) pairs.push_back(v);
    }
  }
  if (pairs.empty()) fail(ErrorCode::kDegenerateGraph, "all items coincide; kernel bandwidth is zero");

  DiffusionGraph g;
  g.alpha = alpha;
  g.sigma2 = median(std::move(pairs));
  g.kernel = (-d2 / g.sigma2).array().exp().matrix();
  g.kernel.diagonal().setOnes();
  g.density = g.kernel.rowwise().sum();

  if (alpha == 0.0) {
    g.kernel_alpha = g.kernel;
  } else {
    const Eigen::ArrayXd va = g.density.array().pow(alpha);
    g.kernel_alpha = (g.kernel.array().colwise() / va).rowwise() / va.transpose();
  }
  g.degrees = g.kernel_alpha.rowwise().sum();
  g.transition = g.degrees.cwiseInverse().asDiagonal() * g.kernel_alpha;
  g.stationary = g.degrees / g.degrees.sum();
  return g;
}

std::size_t truncation_dimension(const Eigen::VectorXd& lambda, double tau) {
  require(tau >= 0.0 && tau <= 1.0, ErrorCode::kInvalidArgument, "tau must lie in [0, 1]");
  const auto n = static_cast<std::size_t>(lambda.size());
  require(n >= 1, ErrorCode::kNonPositiveSpectrum, "no positive non-trivial eigenvalue");
  const double total = lambda.sum();
  double acc = 0.0;
  for (std::size_t d = 1; d <= n; ++d) {
    acc += lambda(static_cast<Eigen::Index>(d - 1));
    if (acc >= tau * total - 1e-14 * total) return d;
  }
  return n;
}

SpectralEmbedding decompose(const DiffusionGraph& g, int t, double tau) {
  require(t >= 1, ErrorCode::kInvalidArgument, "diffusion time must be a positive integer");
  const Eigen::Index n = static_cast<Eigen::Index>(g.size());
  const Eigen::VectorXd dis = g.degrees.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd a = dis.asDiagonal() * g.kernel_alpha * dis.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()));
  if (es.info() != Eigen::Success) fail(ErrorCode::kEigSolverFailure, "symmetric eigensolver did not converge");

  // Ascending order: the last pair is the trivial one (lambda = 1).
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = n - 2; k >= 0; --k) {
    if (es.eigenvalues()(k) > kEigFloor) keep.push_back(k);
  }
  if (keep.empty()) fail(ErrorCode::kNonPositiveSpectrum, "no positive non-trivial eigenvalue");

  SpectralEmbedding se;
  se.t = t;
  se.tau = tau;
  se.stationary = g.stationary;
  se.eigenvalues.resize(static_cast<Eigen::Index>(keep.size()));
  se.eigenvectors.resize(n, static_cast<Eigen::Index>(keep.size()));
  const double scale = std::sqrt(g.degrees.sum());
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    se.eigenvalues(col) = std::min(es.eigenvalues()(keep[c]), 1.0);
    Eigen::VectorXd u = scale * dis.cwiseProduct(es.eigenvectors().col(keep[c]));
    const double mag = u.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(u(i)) > 1e-10 * mag) {
        if (u(i) < 0.0) u = -u;
        break;
      }
    }
    se.eigenvectors.col(col) = u;
  }
  se.d = truncation_dimension(se.eigenvalues, tau);
  return se;
}

Eigen::MatrixXd embed_all(const SpectralEmbedding& se, std::size_t dims) {
  require(dims >= 1 && dims <= se.full_dim(), ErrorCode::kIndexOutOfRange, "embedding dimension out of range");
  const auto k = static_cast<Eigen::Index>(dims);
  const Eigen::ArrayXd scale = se.eigenvalues.head(k).array().pow(se.t);
  return se.eigenvectors.leftCols(k).array().rowwise() * scale.transpose();
}

Eigen::VectorXd embed(const SpectralEmbedding& se, std::size_t k) {
  if (k >= se.size()) fail(ErrorCode::kIndexOutOfRange, "item index out of range");
  const auto d = static_cast<Eigen::Index>(se.d);
  Eigen::VectorXd out(d);
  for (Eigen::Index l = 0; l < d; ++l) {
    out(l) = std::pow(se.eigenvalues(l), se.t) * se.eigenvectors(static_cast<Eigen::Index>(k), l);
  }
  return out;
}

Eigen::MatrixXd transition_power(const DiffusionGraph& g, int t) {
  require(t >= 1, ErrorCode::kInvalidArgument, "diffusion time must be a positive integer");
  Eigen::MatrixXd pt = g.transition;
  for (int s = 1; s < t; ++s) pt = pt * g.transition;
  return pt;
}

double diffusion_distance(const Eigen::MatrixXd& pt, const Eigen::VectorXd& pi, std::size_t i, std::size_t j) {
  const auto n = static_cast<std::size_t>(pt.rows());
  if (i >= n || j >= n) fail(ErrorCode::kIndexOutOfRange, "item index out of range");
  const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
  return std::sqrt(((pt.row(ii) - pt.row(jj)).array().square() / pi.transpose().array()).sum());
}

double diffusion_distance(const DiffusionGraph& g, std::size_t i, std::size_t j, int t) {
  return diffusion_distance(transition_power(g, t), g.stationary, i, j);
}

nlohmann::json spectrum_json(const DiffusionGraph& g, const SpectralEmbedding& se) {
  nlohmann::json j;
  j["n"] = g.size();
  j["sigma2"] = g.sigma2;
  j["alpha"] = g.alpha;
  j["t"] = se.t;
  j["tau"] = se.tau;
  j["d"] = se.d;
  j["eigenvalues"] = std::vector<double>(se.eigenvalues.data(), se.eigenvalues.data() + se.eigenvalues.size());
  j["pi_min"] = g.stationary.minCoeff();
  return j;
}

}  // namespace mapss
