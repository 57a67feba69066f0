// Copyright 2026 The fcache Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "fcache/latency.hpp"
#include "fcache/model.hpp"

namespace fixture {

using fcache::ScenarioConfig;
using fcache::ServiceDistributionSpec;

struct FileShape {
  int n = 1;
  int k = 1;
  std::vector<int> placement;
};

inline ScenarioConfig make_config(const std::vector<ServiceDistributionSpec>& services,
                                  const std::vector<FileShape>& files, const std::vector<double>& rates,
                                  long cache = 0, double duration = 1.0e6) {
  ScenarioConfig c;
  for (std::size_t j = 0; j < services.size(); ++j) c.nodes.push_back({static_cast<int>(j), services[j]});
  for (std::size_t i = 0; i < files.size(); ++i) {
    c.files.push_back({static_cast<int>(i), files[i].n, files[i].k, files[i].placement, 1024});
  }
  c.cache_capacity = cache;
  c.bins.push_back({0, duration, rates});
  return c;
}

// One file with k = n = 1 on a single node: an M/G/1 queue.
inline ScenarioConfig single_queue(const ServiceDistributionSpec& service, double lambda) {
  return make_config({service}, {{1, 1, {0}}}, {lambda});
}

inline fcache::SchedulePlan plan_from_rows(const std::vector<std::vector<double>>& rows,
                                           const ScenarioConfig& config) {
  fcache::SchedulePlan plan;
  plan.pi = fcache::Matrix(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      plan.pi(i, j) = rows[i][j];
      sum += rows[i][j];
    }
    plan.d.push_back(config.files[i].k - static_cast<int>(std::lround(sum)));
  }
  plan.z.assign(rows.size(), 0.0);
  return plan;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Fresh scratch directory under the build tree, removed and recreated.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fcache_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixture
