// Copyright 2026 The fcache Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fcache/model.hpp"

namespace fcache {

/// Queue formulas are evaluated only while rho <= 1 - kStabilityMargin.
inline constexpr double kStabilityMargin = 1e-3;

class UnstableError : public std::runtime_error {
 public:
  UnstableError(int node, double rho);
  int node() const { return node_; }
  double rho() const { return rho_; }

 private:
  int node_;
  double rho_;
};

/// Mean and variance of the chunk sojourn time Q_j at one node.
struct QueueStats {
  double mean_wait = 0.0;
  double var_wait = 0.0;
};

/// Pollaczek-Khinchin mean sojourn time: 1/mu + Λ Γ² / (2 (1 - ρ)).
double queue_mean(const ServiceMoments& moments, double lambda_node, double margin = kStabilityMargin);

/// Sojourn variance: σ² + Λ Γ̂³ / (3 (1 - ρ)) + Λ² Γ⁴ / (4 (1 - ρ)²).
double queue_var(const ServiceMoments& moments, double lambda_node, double margin = kStabilityMargin);

QueueStats queue_stats(const ServiceMoments& moments, double lambda_node, double margin = kStabilityMargin);

/// z + Σ_j (π_j / 2) [(E[Q_j] - z) + sqrt((E[Q_j] - z)² + Var[Q_j])].
double file_bound_given_z(double z, std::span<const double> pi_row, std::span<const QueueStats> stats);

struct ZSolution {
  double z = 0.0;
  double bound = 0.0;
};

/// Minimizes file_bound_given_z over z >= 0 by bisection on its derivative,
/// which is nondecreasing in z.
ZSolution optimal_z(std::span<const double> pi_row, std::span<const QueueStats> stats);

/// Decision variables of one time bin.
struct SchedulePlan {
  Matrix pi;              // r x m
  std::vector<int> d;     // cached chunks per file
  std::vector<double> z;  // auxiliary variable per file
  double objective = 0.0;

  friend bool operator==(const SchedulePlan&, const SchedulePlan&) = default;
};

/// Latency bound of one bin with per-node moments cached. All evaluations are
/// pure; the object is safe to share between threads.
class LatencyModel {
 public:
  LatencyModel(const ScenarioConfig& config, const WorkloadBin& bin);

  std::size_t files() const { return rates_.size(); }
  std::size_t nodes() const { return moments_.size(); }
  const std::vector<double>& rates() const { return rates_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<ServiceMoments>& moments() const { return moments_; }
  const WorkloadBin& bin() const { return bin_; }

  LoadProfile load(const Matrix& pi) const;

  /// Throws UnstableError naming the first node with ρ > 1 - margin.
  std::vector<QueueStats> node_stats(const Matrix& pi, double margin = kStabilityMargin) const;

  /// Per-file Ū_i evaluated at the given z.
  std::vector<double> file_bounds(const Matrix& pi, std::span<const double> z) const;

  /// Σ_i (λ_i / λ̂) Ū_i(z_i).
  double objective(const Matrix& pi, std::span<const double> z) const;

  /// Optimal z_i for every file (the problem separates per file).
  std::vector<double> optimal_z(const Matrix& pi) const;

  /// ∂objective/∂π_ij including the coupling through Λ_j of every file on j.
  Matrix gradient_pi(const Matrix& pi, std::span<const double> z) const;

 private:
  WorkloadBin bin_;
  std::vector<double> rates_;
  std::vector<double> weights_;
  std::vector<ServiceMoments> moments_;
};

/// Objective of `plan` (with its stored z) in `bin`.
double objective(const SchedulePlan& plan, const WorkloadBin& bin, const ScenarioConfig& config);

}  // namespace fcache
