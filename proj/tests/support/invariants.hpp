// Copyright 2026 The fcache Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fcache/latency.hpp"
#include "fcache/model.hpp"

namespace invariants {

// Every broken SchedulePlan invariant, recomputed from scratch.
inline std::vector<std::string> plan_violations(const fcache::SchedulePlan& plan, const fcache::ScenarioConfig& c,
                                                const fcache::WorkloadBin& bin, double tol = 1e-9) {
  std::vector<std::string> out;
  const std::size_t r = c.files.size(), m = c.nodes.size();
  if (plan.pi.rows() != r || plan.pi.cols() != m || plan.d.size() != r || plan.z.size() != r) {
    out.push_back("dimensions");
    return out;
  }
  long cached = 0;
  std::vector<double> load(m, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    const auto& f = c.files[i];
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double v = plan.pi(i, j);
      const bool on = std::find(f.placement.begin(), f.placement.end(), static_cast<int>(j)) != f.placement.end();
      if (v < -tol || v > 1.0 + tol) out.push_back("pi out of [0,1] at file " + std::to_string(i));
      if (!on && v != 0.0) out.push_back("pi off placement at file " + std::to_string(i));
      sum += v;
      load[j] += bin.arrival_rates[i] * v;
    }
    if (plan.d[i] < 0 || plan.d[i] > f.k) out.push_back("d out of [0,k] at file " + std::to_string(i));
    if (std::abs(sum - (f.k - plan.d[i])) > tol) out.push_back("row sum != k - d at file " + std::to_string(i));
    if (plan.z[i] < 0.0) out.push_back("negative z at file " + std::to_string(i));
    cached += plan.d[i];
  }
  if (cached > c.cache_capacity) out.push_back("sum d exceeds C");
  for (std::size_t j = 0; j < m; ++j) {
    const double rho = load[j] * fcache::moments_of(c.nodes[j].service).mean;
    if (!(rho < 1.0)) out.push_back("node " + std::to_string(j) + " unstable");
  }
  return out;
}

}  // namespace invariants
