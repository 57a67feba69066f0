// Copyright 2026 The fcache Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "fcache/latency.hpp"
#include "fcache/model.hpp"
#include "fcache/projection.hpp"

namespace fcache {

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OptimizerOptions {
  double epsilon = 0.01;
  double batch_fraction = 0.1;
  int max_outer = 100;

  // Projected gradient descent for the relaxed scheduling problem.
  int pgd_max_iters = 500;
  double pgd_rel_tol = 1e-6;
  double armijo_slope = 1e-4;
  double armijo_shrink = 0.5;

  ProjectionOptions projection;
  double stability_margin = kStabilityMargin;
};

struct OptimizerTrace {
  std::vector<double> objective;       // B^(0), B^(1), ...
  std::vector<int> fractional_files;   // fractional rows after the first relaxed solve of each iteration
  int inner_rounding_passes = 0;
  bool converged = false;              // the epsilon stop test fired before max_outer
  double epsilon = 0.0;

  int iterations() const { return objective.empty() ? 0 : static_cast<int>(objective.size()) - 1; }
};

struct OptimizeResult {
  SchedulePlan plan;
  OptimizerTrace trace;
};

/// Uniform cache split with the remainder going to the busiest files and π
/// spread evenly over each placement. Throws InfeasibleError when some node
/// would exceed the stability margin.
SchedulePlan initial_plan(const ScenarioConfig& config, const WorkloadBin& bin,
                          double stability_margin = kStabilityMargin);

/// Optimal z per file for the plan's π.
std::vector<double> solve_prob_z(const LatencyModel& model, const Matrix& pi);

/// Projected gradient descent on π with z fixed, from a feasible start.
Matrix solve_prob_pi(const LatencyModel& model, const Matrix& start, std::span<const double> z,
                     const FeasibleRegion& region, const OptimizerOptions& options = {});

/// Row sums within this distance of an integer count as integral.
inline constexpr double kIntegralTol = 1e-9;

double fractional_part(double row_sum);

/// Pins the ceil(batch_fraction * count) most fractional files to the
/// ceiling of their row sums. Ties go to the lower file id.
RoundingBounds round_step(const Matrix& pi, const RoundingBounds& bounds, double batch_fraction);

/// Scales each row onto its nearest integer sum (exact) and derives d.
void snap_plan(SchedulePlan& plan, const ScenarioConfig& config);

/// Alternating minimization with fractional rounding. `warm_start` replaces
/// the uniform initial plan when given.
OptimizeResult optimize(const ScenarioConfig& config, const WorkloadBin& bin,
                        const OptimizerOptions& options = {},
                        const std::optional<SchedulePlan>& warm_start = std::nullopt);

}  // namespace fcache
