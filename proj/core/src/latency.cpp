// Copyright 2026 The fcache Authors.
// SPDX-License-Identifier: Apache-2.0

#include "fcache/latency.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fcache {

namespace {

// Iterates sitting exactly on the projected stability boundary are accepted.
constexpr double kBoundarySlack = 1e-9;

std::string unstable_message(int node, double rho) {
  std::ostringstream os;
  os << "node " << node << " is unstable (rho = " << rho << ")";
  return os.str();
}

double check_rho(const ServiceMoments& m, double lambda, double margin, int node = -1) {
  const double rho = lambda * m.mean;
  if (!(rho <= 1.0 - margin + kBoundarySlack)) throw UnstableError(node, rho);
  return rho;
}

// (E[Q] - z) / sqrt((E[Q] - z)² + Var), with the 0/0 case read as 0.
double slope_ratio(double x, double root) { return root > 0.0 ? x / root : 0.0; }

}  // namespace

UnstableError::UnstableError(int node, double rho)
    : std::runtime_error(unstable_message(node, rho)), node_(node), rho_(rho) {}

double queue_mean(const ServiceMoments& m, double lambda, double margin) {
  const double rho = check_rho(m, lambda, margin);
  return m.mean + lambda * m.second_moment / (2.0 * (1.0 - rho));
}

double queue_var(const ServiceMoments& m, double lambda, double margin) {
  const double rho = check_rho(m, lambda, margin);
  const double gap = 1.0 - rho;
  return m.variance + lambda * m.third_moment / (3.0 * gap) +
         lambda * lambda * m.second_moment * m.second_moment / (4.0 * gap * gap);
}

QueueStats queue_stats(const ServiceMoments& m, double lambda, double margin) {
  return {queue_mean(m, lambda, margin), queue_var(m, lambda, margin)};
}

double file_bound_given_z(double z, std::span<const double> pi_row, std::span<const QueueStats> stats) {
  double total = z;
  for (std::size_t j = 0; j < pi_row.size(); ++j) {
    const double p = pi_row[j];
    if (p == 0.0) continue;
    const double x = stats[j].mean_wait - z;
    total += 0.5 * p * (x + std::sqrt(x * x + stats[j].var_wait));
  }
  return total;
}

namespace {

double bound_slope(double z, std::span<const double> pi_row, std::span<const QueueStats> stats) {
  double slope = 1.0;
  for (std::size_t j = 0; j < pi_row.size(); ++j) {
    const double p = pi_row[j];
    if (p == 0.0) continue;
    const double x = stats[j].mean_wait - z;
    slope -= 0.5 * p * (1.0 + slope_ratio(x, std::sqrt(x * x + stats[j].var_wait)));
  }
  return slope;
}

}  // namespace

ZSolution optimal_z(std::span<const double> pi_row, std::span<const QueueStats> stats) {
  constexpr double kSlopeTol = 1e-9;
  if (bound_slope(0.0, pi_row, stats) >= 0.0) return {0.0, file_bound_given_z(0.0, pi_row, stats)};

  double max_mean = 0.0, max_var = 0.0;
  for (std::size_t j = 0; j < pi_row.size(); ++j) {
    if (pi_row[j] == 0.0) continue;
    max_mean = std::max(max_mean, stats[j].mean_wait);
    max_var = std::max(max_var, stats[j].var_wait);
  }
  double lo = 0.0;
  double hi = max_mean + std::sqrt(max_var);
  if (hi <= 0.0) hi = 1.0;
  // The slope tends to 1 as z grows, so doubling terminates.
  while (bound_slope(hi, pi_row, stats) < 0.0) {
    lo = hi;
    hi *= 2.0;
  }
  const double width_tol = 1e-12 * std::max(1.0, max_mean);
  while (hi - lo > width_tol) {
    const double mid = 0.5 * (lo + hi);
    const double g = bound_slope(mid, pi_row, stats);
    if (std::abs(g) <= kSlopeTol) {
      lo = hi = mid;
      break;
    }
    (g < 0.0 ? lo : hi) = mid;
  }
  const double z = 0.5 * (lo + hi);
  return {z, file_bound_given_z(z, pi_row, stats)};
}

LatencyModel::LatencyModel(const ScenarioConfig& config, const WorkloadBin& bin)
    : bin_(bin), rates_(bin.arrival_rates), weights_(bin.arrival_rates.size(), 0.0), moments_(node_moments(config)) {
  const double total = bin.total_rate();
  if (total > 0.0) {
    for (std::size_t i = 0; i < rates_.size(); ++i) weights_[i] = rates_[i] / total;
  }
}

LoadProfile LatencyModel::load(const Matrix& pi) const { return load_profile(pi, bin_, moments_); }

std::vector<QueueStats> LatencyModel::node_stats(const Matrix& pi, double margin) const {
  const LoadProfile profile = load(pi);
  std::vector<QueueStats> stats(nodes());
  for (std::size_t j = 0; j < nodes(); ++j) {
    if (!(profile.rho[j] <= 1.0 - margin + kBoundarySlack)) {
      throw UnstableError(static_cast<int>(j), profile.rho[j]);
    }
    stats[j] = queue_stats(moments_[j], profile.lambda_node[j], margin);
  }
  return stats;
}

std::vector<double> LatencyModel::file_bounds(const Matrix& pi, std::span<const double> z) const {
  const auto stats = node_stats(pi);
  std::vector<double> out(files());
  for (std::size_t i = 0; i < files(); ++i) out[i] = file_bound_given_z(z[i], pi.row(i), stats);
  return out;
}

double LatencyModel::objective(const Matrix& pi, std::span<const double> z) const {
  const auto stats = node_stats(pi);
  double total = 0.0;
  for (std::size_t i = 0; i < files(); ++i) {
    if (weights_[i] == 0.0) continue;
    total += weights_[i] * file_bound_given_z(z[i], pi.row(i), stats);
  }
  return total;
}

std::vector<double> LatencyModel::optimal_z(const Matrix& pi) const {
  const auto stats = node_stats(pi);
  std::vector<double> z(files());
  for (std::size_t i = 0; i < files(); ++i) z[i] = fcache::optimal_z(pi.row(i), stats).z;
  return z;
}

Matrix LatencyModel::gradient_pi(const Matrix& pi, std::span<const double> z) const {
  const std::size_t r = files();
  const std::size_t m = nodes();
  const LoadProfile profile = load(pi);
  const auto stats = node_stats(pi);

  // dE/dΛ and dVar/dΛ per node.
  std::vector<double> dmean(m), dvar(m);
  for (std::size_t j = 0; j < m; ++j) {
    const auto& mo = moments_[j];
    const double lam = profile.lambda_node[j];
    const double gap = 1.0 - profile.rho[j];
    dmean[j] = mo.second_moment / (2.0 * gap * gap);
    dvar[j] = mo.third_moment / (3.0 * gap * gap) +
              lam * mo.second_moment * mo.second_moment / (2.0 * gap * gap * gap);
  }

  // Race-free reduction of each node's sensitivity to its own load.
  std::vector<double> via_mean(m, 0.0), via_var(m, 0.0);
  Matrix grad(r, m, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    const double w = weights_[i];
    for (std::size_t j = 0; j < m; ++j) {
      const double x = stats[j].mean_wait - z[i];
      const double root = std::sqrt(x * x + stats[j].var_wait);
      grad(i, j) = 0.5 * w * (x + root);
      const double p = pi(i, j);
      if (p == 0.0 || w == 0.0) continue;
      via_mean[j] += 0.5 * w * p * (1.0 + slope_ratio(x, root));
      if (root > 0.0) via_var[j] += 0.25 * w * p / root;
    }
  }
  std::vector<double> coupling(m);
  for (std::size_t j = 0; j < m; ++j) coupling[j] = via_mean[j] * dmean[j] + via_var[j] * dvar[j];
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < m; ++j) grad(i, j) += rates_[i] * coupling[j];
  }
  return grad;
}

double objective(const SchedulePlan& plan, const WorkloadBin& bin, const ScenarioConfig& config) {
  return LatencyModel(config, bin).objective(plan.pi, plan.z);
}

}  // namespace fcache
