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

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mapss {

constexpr double kMahalanobisEps = 1e-6;

/// Squared Mahalanobis distance (x - mu)^T (Sigma + eps I)^-1 (x - mu).
double mahalanobis_sq(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                      double eps = kMahalanobisEps);
double mahalanobis(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                   double eps = kMahalanobisEps);

// Cholesky factor of Sigma + eps I, reused across many distance queries.
class RegularizedCovariance {
 public:
  RegularizedCovariance(const Eigen::MatrixXd& sigma, double eps = kMahalanobisEps);
  double distance_sq(const Eigen::VectorXd& delta) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

struct ClusterStatsPS {
  Eigen::VectorXd centroid;
  Eigen::MatrixXd covariance;  // unbiased
  std::size_t count = 0;
};

/// Rows of `members` are the reference followed by its distortions.
ClusterStatsPS cluster_stats_ps(const Eigen::MatrixXd& members);

struct ClusterStatsPM {
  Eigen::VectorXd reference;
  Eigen::MatrixXd covariance;  // centered on the reference, divided by N_p - 1
  std::size_t count = 0;
};

ClusterStatsPM cluster_stats_pm(const Eigen::VectorXd& reference, const Eigen::MatrixXd& distortions);

struct PsResult {
  double ps = 0.0;
  double a = 0.0;
  double b = 0.0;
  std::size_t j_star = 0;
};

/// 1 - A / (A + B); both zero gives 0.5.
double ps_from_distances(double a, double b);

/// PS of `output` attributed to cluster i against every other cluster.
PsResult compute_ps(const Eigen::VectorXd& output, const std::vector<ClusterStatsPS>& clusters, std::size_t i,
                    double eps = kMahalanobisEps);

struct GammaFit {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double k = 0.0;
  double theta = 0.0;
  std::vector<double> distances;
};

GammaFit fit_gamma_moments(std::span<const double> distances);

/// Squared distances of each distortion to the reference cluster, then moments.
GammaFit fit_gamma(const ClusterStatsPM& cluster, const Eigen::MatrixXd& distortions, double eps = kMahalanobisEps);

double compute_pm(const GammaFit& fit, double a_hat);
double compute_pm(double k, double theta, double a_hat);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool pass = true;
  bool low_power = false;
  std::size_t n = 0;
};

KsResult ks_gamma_diagnostic(const GammaFit& fit, std::span<const double> distances, double level = 0.05);

}  // namespace mapss
