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

#include "measures/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "common/error.hpp"
#include "common/special.hpp"

namespace mapss {

RegularizedCovariance::RegularizedCovariance(const Eigen::MatrixXd& sigma, double eps) {
  require(sigma.rows() == sigma.cols(), ErrorCode::kDimensionMismatch, "covariance must be square");
  require(eps > 0.0, ErrorCode::kInvalidArgument, "regularization must be positive");
  Eigen::MatrixXd m = 0.5 * (sigma + sigma.transpose());
  m.diagonal().array() += eps;
  llt_.compute(m);
  if (llt_.info() != Eigen::Success || !llt_.matrixLLT().allFinite())
    fail(ErrorCode::kSolveFailure, "regularized covariance is not positive definite");
}

double RegularizedCovariance::distance_sq(const Eigen::VectorXd& delta) const {
  require(delta.size() == llt_.rows(), ErrorCode::kDimensionMismatch, "vector and covariance disagree");
  const Eigen::VectorXd w = llt_.matrixL().solve(delta);
  return w.squaredNorm();
}

Eigen::MatrixXd RegularizedCovariance::solve(const Eigen::MatrixXd& rhs) const { return llt_.solve(rhs); }

double mahalanobis_sq(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma, double eps) {
  require(x.size() == mu.size() && x.size() == sigma.rows(), ErrorCode::kDimensionMismatch,
          "vector and covariance disagree");
  return RegularizedCovariance(sigma, eps).distance_sq(x - mu);
}

double mahalanobis(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma, double eps) {
  return std::sqrt(mahalanobis_sq(x, mu, sigma, eps));
}

ClusterStatsPS cluster_stats_ps(const Eigen::MatrixXd& members) {
  require(members.rows() >= 2, ErrorCode::kInvalidArgument, "cluster needs at least two members");
  ClusterStatsPS s;
  s.count = static_cast<std::size_t>(members.rows());
  s.centroid = members.colwise().mean().transpose();
  const Eigen::MatrixXd c = members.rowwise() - s.centroid.transpose();
  s.covariance = c.transpose() * c / static_cast<double>(members.rows() - 1);
  return s;
}

ClusterStatsPM cluster_stats_pm(const Eigen::VectorXd& reference, const Eigen::MatrixXd& distortions) {
  require(distortions.rows() >= 2, ErrorCode::kInvalidArgument, "need at least two distortions");
  require(distortions.cols() == reference.size(), ErrorCode::kDimensionMismatch, "cluster dimensions disagree");
  ClusterStatsPM s;
  s.count = static_cast<std::size_t>(distortions.rows());
  s.reference = reference;
  const Eigen::MatrixXd c = distortions.rowwise() - reference.transpose();
  s.covariance = c.transpose() * c / static_cast<double>(distortions.rows() - 1);
  return s;
}

double ps_from_distances(double a, double b) {
  require(a >= 0.0 && b >= 0.0, ErrorCode::kInvalidArgument, "distances must be nonnegative");
  if (a + b == 0.0) return 0.5;
  return 1.0 - a / (a + b);
}

PsResult compute_ps(const Eigen::VectorXd& output, const std::vector<ClusterStatsPS>& clusters, std::size_t i,
                    double eps) {
  if (clusters.size() < 2) fail(ErrorCode::kSingleSource, "PS needs at least two clusters");
  require(i < clusters.size(), ErrorCode::kIndexOutOfRange, "attributed cluster out of range");
  PsResult r;
  r.a = mahalanobis(output, clusters[i].centroid, clusters[i].covariance, eps);
  r.b = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < clusters.size(); ++j) {
    if (j == i) continue;
    const double dj = mahalanobis(output, clusters[j].centroid, clusters[j].covariance, eps);
    if (dj < r.b) {
      r.b = dj;
      r.j_star = j;
    }
  }
  r.ps = ps_from_distances(r.a, r.b);
  return r;
}

GammaFit fit_gamma_moments(std::span<const double> distances) {
  require(distances.size() >= 2, ErrorCode::kDegenerateMoments, "need at least two distances");
  GammaFit f;
  f.distances.assign(distances.begin(), distances.end());
  const double n = static_cast<double>(distances.size());
  double sum = 0.0;
  for (double g : distances) sum += g;
  f.mean = sum / n;
  double ss = 0.0;
  for (double g : distances) ss += (g - f.mean) * (g - f.mean);
  f.variance = ss / (n - 1.0);
  if (!(f.mean > 0.0) || !(f.variance > 1e-24 * f.mean * f.mean))
    fail(ErrorCode::kDegenerateMoments, "squared distances have zero mean or zero variance");
  f.k = f.mean * f.mean / f.variance;
  f.theta = f.variance / f.mean;
  return f;
}

GammaFit fit_gamma(const ClusterStatsPM& cluster, const Eigen::MatrixXd& distortions, double eps) {
  const RegularizedCovariance cov(cluster.covariance, eps);
  std::vector<double> g(static_cast<std::size_t>(distortions.rows()));
  for (Eigen::Index p = 0; p < distortions.rows(); ++p)
    g[static_cast<std::size_t>(p)] = cov.distance_sq(distortions.row(p).transpose() - cluster.reference);
  return fit_gamma_moments(g);
}

double compute_pm(double k, double theta, double a_hat) {
  require(a_hat >= 0.0, ErrorCode::kInvalidArgument, "distance must be nonnegative");
  require(k > 0.0 && theta > 0.0, ErrorCode::kInvalidArgument, "gamma parameters must be positive");
  return gamma_q(k, a_hat / theta);
}

double compute_pm(const GammaFit& fit, double a_hat) { return compute_pm(fit.k, fit.theta, a_hat); }

KsResult ks_gamma_diagnostic(const GammaFit& fit, std::span<const double> distances, double level) {
  KsResult r;
  r.n = distances.size();
  if (r.n == 0) return r;
  std::vector<double> x(distances.begin(), distances.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(r.n);
  double d = 0.0;
  for (std::size_t m = 0; m < x.size(); ++m) {
    const double f = gamma_cdf(x[m], fit.k, fit.theta);
    d = std::max({d, (static_cast<double>(m) + 1.0) / n - f, f - static_cast<double>(m) / n});
  }
  r.statistic = d;
  const double sn = std::sqrt(n);
  r.p_value = kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
  r.pass = r.p_value >= level;
  r.low_power = r.n < 10;
  return r;
}

}  // namespace mapss
