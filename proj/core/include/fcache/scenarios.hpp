// Copyright 2026 The fcache Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "fcache/model.hpp"

namespace fcache::scenarios {

/// Inverse mean service times of the 12-server reference cluster. Only 11
/// measured values exist; server 12 repeats the last one.
const std::vector<double>& reference_service_rates();

/// Per-file arrival rates of the five request groups, cycled over file ids.
const std::vector<double>& reference_group_rates();

/// Aggregate rate the reference workload should add up to at r = 1000.
inline constexpr double kReferenceAggregateRate = 0.1416;

struct ClusterOptions {
  int files = 1000;
  int n = 7;
  int k = 4;
  long cache_capacity = 500;
  std::uint64_t placement_seed = 2017;
  double bin_duration = 1.0e6;
  std::uint64_t size_bytes = 100ull << 20;
};

/// 12 exponential servers, r files with (n, k) codes on random placements.
ScenarioConfig reference_cluster(const ClusterOptions& options = {});

/// Cache size and placement seed used for the bundled evolution scenario.
inline constexpr long kEvolutionCache = 14;
inline constexpr std::uint64_t kEvolutionSeed = 14;

/// Cache size used for the bundled placement scenario.
inline constexpr long kPlacementCache = 4;

/// Ten files over three bins with the rate changes of the cache-evolution
/// experiment.
ScenarioConfig evolution_scenario(long cache_capacity, std::uint64_t placement_seed, double bin_duration);

/// Ten files: files 0-2 on servers 0-6, files 3-9 on servers 5-11. Files 0
/// and 1 share `leading_rate`.
ScenarioConfig placement_scenario(double leading_rate, long cache_capacity);

/// The six leading rates swept in the placement experiment.
const std::vector<double>& placement_sweep_rates();

}  // namespace fcache::scenarios
