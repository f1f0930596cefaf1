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

#include <Eigen/Dense>
#include <json.hpp>

namespace mapss {

struct DiffusionGraph {
  Eigen::MatrixXd kernel;        // K, Gaussian affinities
  Eigen::MatrixXd kernel_alpha;  // K^(alpha) = K_ij / (v_i v_j)^alpha
  Eigen::VectorXd density;       // v_i = sum_j K_ij
  Eigen::VectorXd degrees;       // D_ii = sum_j K^(alpha)_ij
  Eigen::MatrixXd transition;    // P = D^-1 K^(alpha)
  Eigen::VectorXd stationary;    // pi_i = D_ii / sum D
  double sigma2 = 0.0;
  double alpha = 1.0;

  std::size_t size() const { return static_cast<std::size_t>(kernel.rows()); }
};

/// Gaussian kernel on the rows of X with bandwidth set to the median squared
/// distance over distinct pairs. Throws DegenerateGraph when all rows coincide.
DiffusionGraph build_graph(const Eigen::MatrixXd& x, double alpha);

struct SpectralEmbedding {
  Eigen::VectorXd eigenvalues;   // non-trivial, descending, all > 1e-12
  Eigen::MatrixXd eigenvectors;  // N x n, pi-orthonormal right eigenvectors of P
  Eigen::VectorXd stationary;
  int t = 1;
  double tau = 0.99;
  std::size_t d = 1;

  std::size_t full_dim() const { return static_cast<std::size_t>(eigenvalues.size()); }
  std::size_t size() const { return static_cast<std::size_t>(eigenvectors.rows()); }
};

/// Smallest d whose leading eigenvalue mass reaches tau.
std::size_t truncation_dimension(const Eigen::VectorXd& eigenvalues, double tau);

SpectralEmbedding decompose(const DiffusionGraph& g, int t, double tau);

/// Truncated diffusion coordinates of item k (0-based): lambda_l^t u_l(k), l < d.
Eigen::VectorXd embed(const SpectralEmbedding& se, std::size_t k);

/// Coordinates of every item in the first `dims` diffusion dimensions (N x dims).
Eigen::MatrixXd embed_all(const SpectralEmbedding& se, std::size_t dims);

/// P^t by repeated multiplication.
Eigen::MatrixXd transition_power(const DiffusionGraph& g, int t);

/// Diffusion distance from powered transition rows weighted by 1/pi.
double diffusion_distance(const DiffusionGraph& g, std::size_t i, std::size_t j, int t);
double diffusion_distance(const Eigen::MatrixXd& pt, const Eigen::VectorXd& pi, std::size_t i, std::size_t j);

nlohmann::json spectrum_json(const DiffusionGraph& g, const SpectralEmbedding& se);

}  // namespace mapss
