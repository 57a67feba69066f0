// Copyright 2026 The fcache Authors.
// SPDX-License-Identifier: Apache-2.0

#include "fcache/scenarios.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace fcache::scenarios {

const std::vector<double>& reference_service_rates() {
  static const std::vector<double> rates = {0.1,    0.1,    0.1,    0.0909, 0.0909, 0.0667,
                                            0.0667, 0.0769, 0.0769, 0.0588, 0.0588, 0.0588};
  return rates;
}

const std::vector<double>& reference_group_rates() {
  static const std::vector<double> rates = {0.000156, 0.000156, 0.000125, 0.000167, 0.000104};
  return rates;
}

namespace {

std::vector<NodeSpec> reference_nodes() {
  std::vector<NodeSpec> nodes;
  const auto& rates = reference_service_rates();
  for (std::size_t j = 0; j < rates.size(); ++j) {
    nodes.push_back({static_cast<int>(j), ServiceDistributionSpec::exponential(rates[j])});
  }
  return nodes;
}

std::vector<int> range(int first, int count) {
  std::vector<int> v(static_cast<std::size_t>(count));
  std::iota(v.begin(), v.end(), first);
  return v;
}

std::vector<int> random_placement(int nodes, int n, std::mt19937_64& rng) {
  std::vector<int> all = range(0, nodes);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(static_cast<std::size_t>(n));
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

ScenarioConfig reference_cluster(const ClusterOptions& options) {
  ScenarioConfig config;
  config.nodes = reference_nodes();
  config.cache_capacity = options.cache_capacity;
  std::mt19937_64 rng(options.placement_seed);
  WorkloadBin bin;
  bin.id = 0;
  bin.duration = options.bin_duration;
  const auto& groups = reference_group_rates();
  for (int i = 0; i < options.files; ++i) {
    FileSpec f;
    f.id = i;
    f.n = options.n;
    f.k = options.k;
    f.placement = random_placement(static_cast<int>(config.nodes.size()), options.n, rng);
    f.size_bytes = options.size_bytes;
    config.files.push_back(std::move(f));
    bin.arrival_rates.push_back(groups[static_cast<std::size_t>(i) % groups.size()]);
  }
  config.bins.push_back(std::move(bin));
  return config;
}

ScenarioConfig evolution_scenario(long cache_capacity, std::uint64_t placement_seed, double bin_duration) {
  static const std::vector<std::vector<double>> table = {
      {0.000156, 0.000156, 0.000125, 0.000167, 0.000104, 0.000156, 0.000156, 0.000125, 0.000167, 0.000104},
      {0.000156, 0.000156, 0.000125, 0.000125, 0.000125, 0.000156, 0.000156, 0.000125, 0.000125, 0.000125},
      {0.000125, 0.00025, 0.000125, 0.000167, 0.000104, 0.000125, 0.00025, 0.000125, 0.000167, 0.000104},
  };
  ClusterOptions options;
  options.files = 10;
  options.cache_capacity = cache_capacity;
  options.placement_seed = placement_seed;
  options.bin_duration = bin_duration;
  ScenarioConfig config = reference_cluster(options);
  config.bins.clear();
  for (std::size_t b = 0; b < table.size(); ++b) {
    config.bins.push_back({static_cast<int>(b), bin_duration, table[b]});
  }
  return config;
}

ScenarioConfig placement_scenario(double leading_rate, long cache_capacity) {
  ScenarioConfig config;
  config.nodes = reference_nodes();
  config.cache_capacity = cache_capacity;
  WorkloadBin bin;
  bin.id = 0;
  bin.duration = 1.0e6;
  for (int i = 0; i < 10; ++i) {
    FileSpec f;
    f.id = i;
    f.n = 7;
    f.k = 4;
    f.placement = i < 3 ? range(0, 7) : range(5, 7);
    f.size_bytes = 100ull << 20;
    config.files.push_back(std::move(f));
    double rate = 0.0001042;
    if (i < 2) {
      rate = leading_rate;
    } else if (i < 4) {
      rate = 0.0000962;
    }
    bin.arrival_rates.push_back(rate);
  }
  config.bins.push_back(std::move(bin));
  return config;
}

const std::vector<double>& placement_sweep_rates() {
  static const std::vector<double> rates = {0.0001250, 0.0001563, 0.0001786, 0.0002083, 0.0002500, 0.0002778};
  return rates;
}

}  // namespace fcache::scenarios
