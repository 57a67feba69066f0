// Copyright 2026 The fcache Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fcache/model.hpp"

namespace fcache {

/// Per-file bounds on the number of chunks read from storage, Σ_j π_ij.
struct RoundingBounds {
  std::vector<int> lower;
  std::vector<int> upper;

  static RoundingBounds unpinned(const ScenarioConfig& config);
  bool pinned(std::size_t file) const { return lower[file] == upper[file]; }
};

/// The polytope Prob_Π optimizes over:
///   0 <= π_ij <= 1, π_ij = 0 off the placement,
///   lower_i <= Σ_j π_ij <= upper_i,
///   Σ_ij π_ij >= Σ_i k_i - C,
///   Σ_i λ_i π_ij <= node_capacity_j.
struct FeasibleRegion {
  std::size_t files = 0;
  std::size_t nodes = 0;
  std::vector<std::vector<int>> support;  // placement node ids per file
  std::vector<double> rates;
  std::vector<double> node_capacity;  // (1 - margin) μ_j
  double min_total = 0.0;             // Σ k_i - C
  RoundingBounds bounds;

  static FeasibleRegion build(const ScenarioConfig& config, const WorkloadBin& bin,
                              const RoundingBounds& bounds, double stability_margin);
};

class ProjectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProjectionOptions {
  int max_cycles = 10'000;
  double tolerance = 1e-9;     // max entry change between Dykstra cycles
  double feasibility_tol = 1e-7;
};

/// Euclidean projection of `values` onto {x in [0,1]^n : lower <= Σx <= upper}.
/// Clips, and if the sum leaves the band, water-fills a common shift τ with
/// Σ clip(v - τ, 0, 1) equal to the violated end.
void project_capped_band(std::span<double> values, double lower, double upper);

/// Largest constraint violation of `pi`; zero means feasible.
struct Violation {
  double amount = 0.0;
  std::string constraint;
};
Violation max_violation(const Matrix& pi, const FeasibleRegion& region);

/// Dykstra's alternating projections between two sets: rows (box + band)
/// intersected with the capacity half-space, projected exactly, and the
/// per-node stability half-spaces.
Matrix project_feasible(const Matrix& candidate, const FeasibleRegion& region,
                        const ProjectionOptions& options = {});

}  // namespace fcache
