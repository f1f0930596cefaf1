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

#include "bounds/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "common/special.hpp"
#include "evalreport/correlation.hpp"

namespace mapss {

void BoundConfig::validate() const {
  require(delta > 0.0 && delta < 1.0, ErrorCode::kConfigError, "delta must lie in (0, 1)");
  require(c_tail > 0.0 && c_cov > 0.0 && c1 > 0.0 && c2 > 0.0, ErrorCode::kConfigError,
          "bound constants must be positive");
  require(eps_r >= 0.0, ErrorCode::kConfigError, "eps_r must be nonnegative");
  require(neff_factor > 0.0 && neff_factor <= 1.0, ErrorCode::kConfigError, "n_eff factor must lie in (0, 1]");
  require(eps > 0.0, ErrorCode::kConfigError, "regularization must be positive");
}

nlohmann::json bound_config_json(const BoundConfig& c) {
  return {{"delta", c.delta}, {"C", c.c_tail},         {"C_cov", c.c_cov},
          {"C1", c.c1},       {"C2", c.c2},            {"eps_r", c.eps_r},
          {"neff_factor", c.neff_factor}, {"bartlett_neff", c.bartlett_neff}, {"eps", c.eps}};
}

BoundConfig bound_config_from_json(const nlohmann::json& j) {
  BoundConfig c;
  if (!j.is_object()) fail(ErrorCode::kConfigError, "bound constants must be an object");
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      if (k == "delta") c.delta = it->get<double>();
      else if (k == "C") c.c_tail = it->get<double>();
      else if (k == "C_cov") c.c_cov = it->get<double>();
      else if (k == "C1") c.c1 = it->get<double>();
      else if (k == "C2") c.c2 = it->get<double>();
      else if (k == "eps_r") c.eps_r = it->get<double>();
      else if (k == "neff_factor") c.neff_factor = it->get<double>();
      else if (k == "bartlett_neff") c.bartlett_neff = it->get<bool>();
      else if (k == "eps") c.eps = it->get<double>();
      else fail(ErrorCode::kConfigError, "unknown bound key '" + k + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfigError, std::string("bad bound constant: ") + e.what());
  }
  c.validate();
  return c;
}

double TruncationBound::tail(double delta) const {
  require(delta > 0.0 && delta < 1.0, ErrorCode::kInvalidArgument, "delta must lie in (0, 1)");
  const double m_d = static_cast<double>(m);
  return tail_coefficient * (m_d + std::sqrt(m_d * std::log(1.0 / delta)));
}

TruncationBound truncation_stats(const SpectralEmbedding& se, std::size_t d, double c) {
  const std::size_t n = se.full_dim();
  require(d >= 1 && d <= n, ErrorCode::kIndexOutOfRange, "truncation dimension out of range");
  TruncationBound tb;
  double s = 0.0;
  for (std::size_t l = d; l < n; ++l) s += std::pow(se.eigenvalues(static_cast<Eigen::Index>(l)), 2.0 * se.t);
  tb.expected_error = std::sqrt(s);
  tb.pi_min = se.stationary.minCoeff();
  tb.m = se.size() - 1 - d;
  if (d < n) {
    const double k = 1.0 / std::sqrt(tb.pi_min) / std::sqrt(std::log(2.0));
    tb.tail_coefficient = c * std::pow(se.eigenvalues(static_cast<Eigen::Index>(d)), se.t) * k;
  }
  return tb;
}

double truncation_residual_sq(const SpectralEmbedding& se, std::size_t d, std::size_t k) {
  require(k < se.size(), ErrorCode::kIndexOutOfRange, "item index out of range");
  double s = 0.0;
  for (std::size_t l = d; l < se.full_dim(); ++l) {
    const auto li = static_cast<Eigen::Index>(l);
    const double v = std::pow(se.eigenvalues(li), se.t) * se.eigenvectors(static_cast<Eigen::Index>(k), li);
    s += v * v;
  }
  return s;
}

SchurSplit::SchurSplit(const Eigen::MatrixXd& sigma, std::size_t d, double eps) {
  require(sigma.rows() == sigma.cols(), ErrorCode::kDimensionMismatch, "covariance must be square");
  const auto n = static_cast<std::size_t>(sigma.rows());
  require(d >= 1 && d <= n, ErrorCode::kIndexOutOfRange, "split dimension out of range");
  d_ = d;
  m_ = n - d;
  const auto di = static_cast<Eigen::Index>(d), mi = static_cast<Eigen::Index>(m_);
  Eigen::MatrixXd kept = sigma.topLeftCorner(di, di);
  kept.diagonal().array() += eps;
  kept_.compute(kept);
  if (kept_.info() != Eigen::Success) fail(ErrorCode::kSolveFailure, "kept covariance block is singular");
  if (m_ == 0) return;
  c_ = sigma.topRightCorner(di, mi);
  s_ = sigma.bottomRightCorner(mi, mi) - c_.transpose() * kept_.solve(c_);
  s_.diagonal().array() += eps;
  s_ = 0.5 * (s_ + s_.transpose());
  comp_.compute(s_);
  if (comp_.info() != Eigen::Success || !comp_.matrixLLT().allFinite())
    fail(ErrorCode::kComplementNotPD, "Schur complement is not positive definite");
}

SchurResidual SchurSplit::residual(const Eigen::VectorXd& delta) const {
  require(static_cast<std::size_t>(delta.size()) == d_ + m_, ErrorCode::kDimensionMismatch,
          "vector and covariance disagree");
  SchurResidual out;
  const Eigen::VectorXd head = delta.head(static_cast<Eigen::Index>(d_));
  const Eigen::VectorXd w = kept_.solve(head);
  out.truncated_sq = head.dot(w);
  if (m_ == 0) return out;
  out.r = delta.tail(static_cast<Eigen::Index>(m_)) - c_.transpose() * w;
  out.energy = comp_.matrixL().solve(out.r).squaredNorm();
  return out;
}

SchurResidual schur_residual(const Eigen::VectorXd& delta, const Eigen::MatrixXd& sigma, std::size_t d, double eps) {
  return SchurSplit(sigma, d, eps).residual(delta);
}

double effective_sample_size(const Eigen::MatrixXd& members, const BoundConfig& cfg) {
  const double n = static_cast<double>(members.rows());
  if (!cfg.bartlett_neff) return std::clamp(cfg.neff_factor * n, 1.0, n);
  const Eigen::MatrixXd c = members.rowwise() - members.colwise().mean();
  const Eigen::Index rows = members.rows();
  const double z = normal_quantile(0.975);
  double sum = 0.0;
  for (Eigen::Index lag = 1; lag < rows - 1; ++lag) {
    double rho = 0.0;
    int used = 0;
    for (Eigen::Index col = 0; col < c.cols(); ++col) {
      const double den = c.col(col).squaredNorm();
      if (den <= 0.0) continue;
      rho += c.col(col).head(rows - lag).dot(c.col(col).tail(rows - lag)) / den;
      ++used;
    }
    if (used == 0) break;
    rho /= used;
    sum += rho;
    if (std::abs(rho) < z / std::sqrt(static_cast<double>(rows - lag))) break;
  }
  return std::clamp(n / (1.0 + 2.0 * sum), 1.0, n);
}

ClusterSpread cluster_spread(const Eigen::MatrixXd& covariance) {
  ClusterSpread s;
  if (covariance.rows() == 0) return s;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (covariance + covariance.transpose()),
                                                    Eigen::EigenvaluesOnly);
  s.lambda_max = std::max(0.0, es.eigenvalues().maxCoeff());
  s.lambda_min = std::max(0.0, es.eigenvalues().minCoeff());
  s.trace = covariance.trace();
  return s;
}

std::pair<double, double> ps_cluster_widths(const ClusterSpread& s, double n_eff, const BoundConfig& cfg) {
  if (s.lambda_max <= 0.0) return {0.0, 0.0};
  const double dmu = 0.5 * cfg.delta, dsig = 0.5 * cfg.delta;
  const double w_mu = std::sqrt(2.0 * s.lambda_max * std::log(2.0 / dmu) / n_eff);
  const double r = s.trace / s.lambda_max;
  const double w_sig = cfg.c_cov * s.lambda_max * (r / n_eff + (r + std::log(2.0 / dsig)) / n_eff);
  return {w_mu, w_sig};
}

double ps_distance_error(double dist, const ClusterSpread& s, double delta_mu, double delta_sigma, double eps_r) {
  if (s.lambda_max <= 0.0) return 0.0;
  const double floor_min = s.lambda_min + eps_r * s.lambda_max;
  return 2.0 * std::sqrt(dist) * delta_mu * std::sqrt(s.lambda_max / floor_min) + dist * delta_sigma / s.lambda_max;
}

PsBound ps_frame_bound(const Eigen::VectorXd& output, const std::vector<ClusterStatsPS>& full, std::size_t i,
                       const PsResult& scores, std::size_t d, std::span<const double> n_eff, const BoundConfig& cfg) {
  require(i < full.size() && scores.j_star < full.size() && n_eff.size() == full.size(),
          ErrorCode::kIndexOutOfRange, "cluster index out of range");
  PsBound pb;
  const std::size_t j = scores.j_star;
  const double a = scores.a, b = scores.b;
  pb.residual_a = SchurSplit(full[i].covariance, d, cfg.eps).residual(output - full[i].centroid).energy;
  pb.residual_b = SchurSplit(full[j].covariance, d, cfg.eps).residual(output - full[j].centroid).energy;

  const auto di = static_cast<Eigen::Index>(d);
  const ClusterSpread si = cluster_spread(full[i].covariance.topLeftCorner(di, di));
  const ClusterSpread sj = cluster_spread(full[j].covariance.topLeftCorner(di, di));
  std::tie(pb.delta_mu_a, pb.delta_sigma_a) = ps_cluster_widths(si, n_eff[i], cfg);
  std::tie(pb.delta_mu_b, pb.delta_sigma_b) = ps_cluster_widths(sj, n_eff[j], cfg);
  pb.eps_a = ps_distance_error(a, si, pb.delta_mu_a, pb.delta_sigma_a, cfg.eps_r);
  pb.eps_b = ps_distance_error(b, sj, pb.delta_mu_b, pb.delta_sigma_b, cfg.eps_r);

  const double sum = a + b;
  if (sum <= 0.0) {
    pb.radius = pb.half_width = 1.0;
    return pb;
  }
  pb.radius = (b * std::sqrt(pb.residual_a) + a * std::sqrt(pb.residual_b)) / (sum * sum);
  pb.lipschitz = std::sqrt(a * a + b * b) / (sum * sum);
  pb.half_width = pb.lipschitz * std::sqrt(pb.eps_a + pb.eps_b);
  return pb;
}

namespace {

constexpr double kPositiveFloor = 1e-12;

double q_at(double k, double theta, double a) {
  k = std::max(k, kPositiveFloor);
  theta = std::max(theta, kPositiveFloor);
  a = std::max(a, 0.0);
  return gamma_q(k, a / theta);
}

template <class Fn>
void for_corners(const PmBox& box, Fn&& fn) {
  for (int c = 0; c < 8; ++c) {
    fn(box.k + ((c & 1) ? box.dk : -box.dk), box.theta + ((c & 2) ? box.dtheta : -box.dtheta),
       box.a + ((c & 4) ? box.da : -box.da));
  }
}

double dq_dk(double k, double theta, double a) {
  k = std::max(k, kPositiveFloor);
  const double h = 1e-6 * std::max(k, 1e-3);
  return (q_at(k + h, theta, a) - q_at(std::max(k - h, kPositiveFloor), theta, a)) / (2.0 * h);
}

double gradient_norm(double k, double theta, double a) {
  k = std::max(k, kPositiveFloor);
  theta = std::max(theta, kPositiveFloor);
  a = std::max(a, 0.0);
  const double x = a / theta;
  double dens = 0.0;
  if (x > 0.0) dens = std::exp((k - 1.0) * std::log(x) - x - std::lgamma(k));
  const double gk = dq_dk(k, theta, a);
  const double gt = a / (theta * theta) * dens;
  const double ga = -dens / theta;
  return std::sqrt(gk * gk + gt * gt + ga * ga);
}

}  // namespace

double box_corner_max(const PmBox& box) {
  const double center = q_at(box.k, box.theta, box.a);
  double best = 0.0;
  for_corners(box, [&](double k, double t, double a) { best = std::max(best, std::abs(q_at(k, t, a) - center)); });
  return best;
}

PmBox pm_local_box(const GammaFit& fit, double a_hat, double r_max, std::size_t n_p, double delta) {
  PmBox box{fit.k, fit.theta, a_hat, 0.0, 0.0, 0.0};
  const double n = static_cast<double>(n_p);
  const double l = std::log(2.0 / (delta / 3.0));
  const double var = fit.variance, sd = std::sqrt(var), mu = fit.mean;
  const double w_mu = std::sqrt(2.0 * var * l / n) + 3.0 * r_max * l / n;
  const double w_sig = std::sqrt(2.0 * r_max * r_max * l / n) + 3.0 * r_max * r_max * l / n;
  const double w_a = r_max * std::sqrt(l / n);
  box.dk = std::min(2.0 * mu / var * w_mu + 2.0 * mu * mu / (var * sd) * w_sig, 0.5 * box.k);
  box.dtheta = std::min(var / (mu * mu) * w_mu + 2.0 * sd / mu * w_sig, 0.5 * box.theta);
  box.da = std::min(w_a, 0.5 * box.a);
  return box;
}

PmBound pm_frame_bound(const Eigen::VectorXd& reference, const Eigen::MatrixXd& distortions,
                       const Eigen::VectorXd& output, std::size_t d, const GammaFit& fit, double a_hat,
                       const BoundConfig& cfg) {
  const Eigen::Index n_p = distortions.rows();
  require(n_p >= 2, ErrorCode::kDegenerateMoments, "need at least two distortions");
  require(distortions.cols() == reference.size() && output.size() == reference.size(),
          ErrorCode::kDimensionMismatch, "cluster dimensions disagree");
  PmBound pb;
  const ClusterStatsPM full = cluster_stats_pm(reference, distortions);
  const SchurSplit split(full.covariance, d, cfg.eps);

  std::vector<double> g_full(static_cast<std::size_t>(n_p));
  double dmax = 0.0;
  for (Eigen::Index p = 0; p < n_p; ++p) {
    const SchurResidual res = split.residual(distortions.row(p).transpose() - reference);
    g_full[static_cast<std::size_t>(p)] = res.truncated_sq + res.energy;
    dmax = std::max(dmax, res.energy);
  }
  double mu_full = 0.0;
  for (double g : g_full) mu_full += g;
  mu_full /= static_cast<double>(n_p);
  double var_full = 0.0;
  for (double g : g_full) var_full += (g - mu_full) * (g - mu_full);
  var_full /= static_cast<double>(n_p - 1);

  const double ratio = static_cast<double>(n_p) / static_cast<double>(n_p - 1);
  pb.delta_max = dmax;
  pb.truncation_box.k = fit.k;
  pb.truncation_box.theta = fit.theta;
  pb.truncation_box.a = a_hat;
  pb.truncation_box.dk = cfg.c1 * dmax * ratio * (mu_full + fit.mean) / fit.variance;
  pb.truncation_box.dtheta = cfg.c2 * dmax * ratio * (var_full + fit.variance) / (fit.mean * fit.mean);
  pb.truncation_box.da = split.residual(output - reference).energy;

  // Q rises with k; if the numeric slope flips sign anywhere on the box use the gradient bound.
  int pos = 0, neg = 0;
  for_corners(pb.truncation_box, [&](double k, double t, double a) {
    const double s = dq_dk(k, t, a);
    if (s > 1e-12) ++pos;
    if (s < -1e-12) ++neg;
  });
  if (pos > 0 && neg > 0) {
    pb.gradient_fallback = true;
    const PmBox& bx = pb.truncation_box;
    double lb = 0.0;
    for (int u = -1; u <= 1; ++u)
      for (int v = -1; v <= 1; ++v)
        for (int w = -1; w <= 1; ++w)
          lb = std::max(lb, gradient_norm(bx.k + u * bx.dk, bx.theta + v * bx.dtheta, bx.a + w * bx.da));
    pb.radius = lb * std::sqrt(bx.dk * bx.dk + bx.dtheta * bx.dtheta + bx.da * bx.da);
  } else {
    pb.radius = box_corner_max(pb.truncation_box);
  }

  pb.r_max = *std::max_element(g_full.begin(), g_full.end());
  pb.local_box = pm_local_box(fit, a_hat, pb.r_max, static_cast<std::size_t>(n_p), cfg.delta);
  const double l = std::log(2.0 / (cfg.delta / 3.0));
  const double n = static_cast<double>(n_p);
  pb.delta_mu = std::sqrt(2.0 * fit.variance * l / n) + 3.0 * pb.r_max * l / n;
  pb.delta_sigma = std::sqrt(2.0 * pb.r_max * pb.r_max * l / n) + 3.0 * pb.r_max * pb.r_max * l / n;
  pb.half_width = box_corner_max(pb.local_box);
  pb.valid = pb.radius <= 1.0;
  return pb;
}

namespace {

double rms(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / static_cast<double>(v.size()));
}

double z_star(double confidence) {
  require(confidence > 0.0 && confidence < 1.0, ErrorCode::kInvalidArgument, "confidence must lie in (0, 1)");
  return normal_quantile(0.5 * (1.0 + confidence));
}

void check_frames(std::span<const double> radii, std::span<const double> half_widths) {
  if (radii.empty()) fail(ErrorCode::kEmptySet, "no frame bounds to propagate");
  require(radii.size() == half_widths.size(), ErrorCode::kDimensionMismatch, "radius and width counts differ");
}

}  // namespace

UtteranceBound propagate_average(std::span<const double> radii, std::span<const double> half_widths,
                                 double confidence, int gap) {
  check_frames(radii, half_widths);
  const double z = z_star(confidence);
  const double f = static_cast<double>(radii.size());
  UtteranceBound u;
  for (double r : radii) u.b += r;
  u.b /= f;
  u.h = z * std::sqrt(gap + 1.0) / std::sqrt(f) * (rms(half_widths) / z);
  return u;
}

UtteranceBound propagate_pesq(std::span<const double> radii, std::span<const double> half_widths,
                              double confidence, const AggregationConfig& agg, double level) {
  check_frames(radii, half_widths);
  const double z = z_star(confidence);
  const double m = static_cast<double>(pesq_window_count(radii.size(), agg));
  const double scale = static_cast<double>(overlap_factor(agg)) / std::sqrt(m) * pesq_logistic_slope(level, agg);
  return {scale * rms(radii), z * scale * (rms(half_widths) / z)};
}

UtteranceBound propagate_utterance(std::span<const double> radii, std::span<const double> half_widths,
                                   double confidence, const AggregationConfig& agg, double level, int gap) {
  if (agg.method == AggregationMethod::kPesq) return propagate_pesq(radii, half_widths, confidence, agg, level);
  return propagate_average(radii, half_widths, confidence, gap);
}

namespace {

void check_vectors(std::span<const double> v, std::span<const double> mos, std::span<const double> b,
                   std::span<const double> h) {
  require(v.size() == mos.size() && v.size() == b.size() && v.size() == h.size(), ErrorCode::kDimensionMismatch,
          "correlation inputs differ in length");
  if (v.size() < 3) fail(ErrorCode::kInsufficientSystems, "correlation bounds need at least three systems");
}

double srcc_or_zero(std::span<const double> x, std::span<const double> y) {
  try {
    return srcc(x, y);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kZeroVariance) return 0.0;
    throw;
  }
}

}  // namespace

CorrelationBound pcc_bound(std::span<const double> v, std::span<const double> mos, std::span<const double> b,
                           std::span<const double> h, double confidence) {
  check_vectors(v, mos, b, h);
  const double z = z_star(confidence);
  CorrelationBound out;
  out.value = pcc(v, mos);
  const std::vector<double> g = pcc_gradient(v, mos);
  double bm = 0.0;
  for (double x : b) bm += x;
  bm /= static_cast<double>(b.size());
  double gn = 0.0, bn = 0.0, var = 0.0;
  for (std::size_t q = 0; q < v.size(); ++q) {
    gn += g[q] * g[q];
    bn += (b[q] - bm) * (b[q] - bm);
    const double s = h[q] / z;
    var += g[q] * g[q] * s * s;
  }
  out.b = std::sqrt(gn) * std::sqrt(bn);
  out.h = z * std::sqrt(var);
  return out;
}

CorrelationBound srcc_bound(std::span<const double> v, std::span<const double> mos, std::span<const double> b,
                            std::span<const double> h, double confidence, std::size_t draws, std::uint64_t seed) {
  check_vectors(v, mos, b, h);
  const double z = z_star(confidence);
  CorrelationBound out;
  out.value = srcc(v, mos);
  std::vector<double> w(v.size());
  for (std::size_t q = 0; q < v.size(); ++q) w[q] = v[q] + b[q];
  const double up = std::abs(srcc_or_zero(w, mos) - out.value);
  for (std::size_t q = 0; q < v.size(); ++q) w[q] = v[q] - b[q];
  const double down = std::abs(srcc_or_zero(w, mos) - out.value);
  out.b = std::max(up, down);

  if (draws == 0 || std::all_of(h.begin(), h.end(), [](double x) { return x == 0.0; })) return out;
  CounterRng rng(seed);
  std::vector<double> dev(draws);
  for (std::size_t k = 0; k < draws; ++k) {
    for (std::size_t q = 0; q < v.size(); ++q) w[q] = v[q] + rng.normal() * h[q] / z;
    dev[k] = std::abs(srcc_or_zero(w, mos) - out.value);
  }
  const double cstar = 0.5 * (1.0 + confidence);
  const auto idx = static_cast<std::size_t>(std::ceil(cstar * static_cast<double>(draws))) - 1;
  std::nth_element(dev.begin(), dev.begin() + static_cast<std::ptrdiff_t>(idx), dev.end());
  out.h = dev[idx];
  return out;
}

CorrelationBound combine_scenario(const std::vector<std::vector<CorrelationBound>>& trials,
                                  std::span<const double> rho, double confidence) {
  require(rho.empty() || rho.size() == trials.size(), ErrorCode::kDimensionMismatch,
          "one jitter correlation per trial");
  const double z = z_star(confidence);
  std::size_t total = 0;
  CorrelationBound out;
  double var = 0.0;
  for (std::size_t l = 0; l < trials.size(); ++l) {
    const double r = rho.empty() ? 0.0 : rho[l];
    double own = 0.0, cross = 0.0, run = 0.0;
    for (const auto& c : trials[l]) {
      const double s = c.h / z;
      own += s * s;
      cross += s * run;
      run += s;
      out.value += c.value;
      out.b += c.b;
      ++total;
    }
    var += own + 2.0 * r * cross;
  }
  if (total == 0) fail(ErrorCode::kEmptySet, "scenario has no scored sources");
  const double t = static_cast<double>(total);
  out.value /= t;
  out.b /= t;
  out.h = z * std::sqrt(std::max(0.0, var)) / t;
  return out;
}

}  // namespace mapss
