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
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "aggregate/aggregate.hpp"
#include "manifold/manifold.hpp"
#include "measures/measures.hpp"

namespace mapss {

struct BoundConfig {
  double delta = 0.05;
  double c_tail = 1.0;  // truncation tail constant
  double c_cov = 1.0;   // covariance concentration constant
  double c1 = 1.0;      // shape bias constant
  double c2 = 1.0;      // scale bias constant
  double eps_r = 0.05;  // eigenvalue floor fraction
  double neff_factor = 0.7;
  bool bartlett_neff = false;
  double eps = kMahalanobisEps;

  void validate() const;
};

nlohmann::json bound_config_json(const BoundConfig& c);
BoundConfig bound_config_from_json(const nlohmann::json& j);

struct TruncationBound {
  double expected_error = 0.0;
  double tail_coefficient = 0.0;  // C lambda_{d+1}^t K
  double pi_min = 0.0;
  std::size_t m = 0;

  double tail(double delta) const;
};

TruncationBound truncation_stats(const SpectralEmbedding& se, std::size_t d, double c = 1.0);

/// Squared norm of the discarded diffusion coordinates of item k.
double truncation_residual_sq(const SpectralEmbedding& se, std::size_t d, std::size_t k);

struct SchurResidual {
  Eigen::VectorXd r;
  double truncated_sq = 0.0;  // kept-block squared distance
  double energy = 0.0;        // r^T S^-1 r
};

// Block split of a regularized covariance at dimension d.
class SchurSplit {
 public:
  SchurSplit(const Eigen::MatrixXd& sigma, std::size_t d, double eps = kMahalanobisEps);

  SchurResidual residual(const Eigen::VectorXd& delta) const;
  const Eigen::MatrixXd& complement() const { return s_; }
  std::size_t kept() const { return d_; }
  std::size_t dropped() const { return m_; }

 private:
  std::size_t d_ = 0;
  std::size_t m_ = 0;
  Eigen::LLT<Eigen::MatrixXd> kept_;
  Eigen::LLT<Eigen::MatrixXd> comp_;
  Eigen::MatrixXd c_;
  Eigen::MatrixXd s_;
};

SchurResidual schur_residual(const Eigen::VectorXd& delta, const Eigen::MatrixXd& sigma, std::size_t d,
                             double eps = kMahalanobisEps);

/// 0.7 n by default, or n / (1 + 2 sum rho) from lagged coordinate correlations.
double effective_sample_size(const Eigen::MatrixXd& members, const BoundConfig& cfg);

struct PsBound {
  double radius = 0.0;
  double half_width = 0.0;
  double residual_a = 0.0;  // r^T S^-1 r for the attributed cluster
  double residual_b = 0.0;  // and for the nearest foreign cluster
  double delta_mu_a = 0.0, delta_sigma_a = 0.0;
  double delta_mu_b = 0.0, delta_sigma_b = 0.0;
  double eps_a = 0.0, eps_b = 0.0;
  double lipschitz = 0.0;
};

struct ClusterSpread {
  double lambda_max = 0.0;
  double lambda_min = 0.0;
  double trace = 0.0;
};

ClusterSpread cluster_spread(const Eigen::MatrixXd& covariance);

/// Finite-sample widths of one cluster: (Delta_mu, Delta_Sigma).
std::pair<double, double> ps_cluster_widths(const ClusterSpread& s, double n_eff, const BoundConfig& cfg);

/// Finite-sample deviation of a distance to a cluster with the given spread.
double ps_distance_error(double dist, const ClusterSpread& s, double delta_mu, double delta_sigma, double eps_r);

/// `full` holds each cluster in every retained diffusion dimension; the first
/// d coordinates form the truncated view used for `scores`.
PsBound ps_frame_bound(const Eigen::VectorXd& output, const std::vector<ClusterStatsPS>& full, std::size_t i,
                       const PsResult& scores, std::size_t d, std::span<const double> n_eff, const BoundConfig& cfg);

struct PmBox {
  double k = 0.0, theta = 0.0, a = 0.0;
  double dk = 0.0, dtheta = 0.0, da = 0.0;
};

/// max over the eight corners of |Q(k_c, a_c / theta_c) - Q(k, a / theta)|.
double box_corner_max(const PmBox& box);

struct PmBound {
  double radius = 0.0;
  double half_width = 0.0;
  bool valid = true;
  bool gradient_fallback = false;
  PmBox truncation_box;
  PmBox local_box;
  double delta_max = 0.0;
  double r_max = 0.0;
  double delta_mu = 0.0, delta_sigma = 0.0;
};

/// `reference`, `distortions` and `output` are in every retained dimension.
PmBound pm_frame_bound(const Eigen::VectorXd& reference, const Eigen::MatrixXd& distortions,
                       const Eigen::VectorXd& output, std::size_t d, const GammaFit& fit, double a_hat,
                       const BoundConfig& cfg);

/// Local box widths from finite-sample moments alone.
PmBox pm_local_box(const GammaFit& fit, double a_hat, double r_max, std::size_t n_p, double delta);

struct UtteranceBound {
  double b = 0.0;
  double h = 0.0;
};

UtteranceBound propagate_average(std::span<const double> radii, std::span<const double> half_widths,
                                 double confidence, int gap = 4);

/// `level` is the pooled value fed to the logistic map.
UtteranceBound propagate_pesq(std::span<const double> radii, std::span<const double> half_widths,
                              double confidence, const AggregationConfig& agg, double level);

UtteranceBound propagate_utterance(std::span<const double> radii, std::span<const double> half_widths,
                                   double confidence, const AggregationConfig& agg, double level, int gap = 4);

struct CorrelationBound {
  double value = 0.0;
  double b = 0.0;
  double h = 0.0;
};

CorrelationBound pcc_bound(std::span<const double> v, std::span<const double> mos, std::span<const double> b,
                           std::span<const double> h, double confidence);

CorrelationBound srcc_bound(std::span<const double> v, std::span<const double> mos, std::span<const double> b,
                            std::span<const double> h, double confidence, std::size_t draws, std::uint64_t seed);

/// Scenario mean over trials; trials[l] lists per-source bounds of trial l.
CorrelationBound combine_scenario(const std::vector<std::vector<CorrelationBound>>& trials,
                                  std::span<const double> rho, double confidence);

}  // namespace mapss
