// Copyright 2026 The fcache Authors.
// SPDX-License-Identifier: Apache-2.0

#include "fcache/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace fcache {

RoundingBounds RoundingBounds::unpinned(const ScenarioConfig& config) {
  RoundingBounds b;
  b.lower.assign(config.files.size(), 0);
  b.upper.reserve(config.files.size());
  for (const auto& f : config.files) b.upper.push_back(f.k);
  return b;
}

FeasibleRegion FeasibleRegion::build(const ScenarioConfig& config, const WorkloadBin& bin,
                                     const RoundingBounds& bounds, double stability_margin) {
  FeasibleRegion region;
  region.files = config.files.size();
  region.nodes = config.nodes.size();
  region.support.reserve(region.files);
  for (const auto& f : config.files) {
    auto s = f.placement;
    std::sort(s.begin(), s.end());
    region.support.push_back(std::move(s));
  }
  region.rates = bin.arrival_rates;
  region.node_capacity.reserve(region.nodes);
  for (const auto& node : config.nodes) {
    region.node_capacity.push_back((1.0 - stability_margin) / moments_of(node.service).mean);
  }
  region.min_total = static_cast<double>(config.total_k() - config.cache_capacity);
  region.bounds = bounds;
  return region;
}

namespace {

double shifted_sum(std::span<const double> v, double tau) {
  double s = 0.0;
  for (double x : v) s += std::clamp(x - tau, 0.0, 1.0);
  return s;
}

void band_project(std::span<double> values, double lower, double upper, std::vector<double>& scratch) {
  double sum = 0.0;
  for (double v : values) sum += std::clamp(v, 0.0, 1.0);
  if (sum >= lower && sum <= upper) {
    for (double& v : values) v = std::clamp(v, 0.0, 1.0);
    return;
  }
  const auto n = static_cast<double>(values.size());
  const double target = std::clamp(sum < lower ? lower : upper, 0.0, n);

  // Σ clip(v_j - τ, 0, 1) is piecewise linear and non-increasing in τ with
  // breakpoints at v_j - 1 and v_j; it equals n at the first and 0 at the last.
  scratch.clear();
  for (double v : values) {
    scratch.push_back(v - 1.0);
    scratch.push_back(v);
  }
  std::sort(scratch.begin(), scratch.end());
  double tau = scratch.back();
  double prev_tau = scratch.front();
  double prev_sum = n;
  for (std::size_t b = 1; b < scratch.size(); ++b) {
    const double t = scratch[b];
    const double s = shifted_sum(values, t);
    if (s <= target) {
      tau = prev_sum == s ? t : prev_tau + (prev_sum - target) * (t - prev_tau) / (prev_sum - s);
      break;
    }
    prev_tau = t;
    prev_sum = s;
  }
  for (double& v : values) v = std::clamp(v - tau, 0.0, 1.0);
}

// Projection onto the rows: box, placement mask and per-file band.
void project_rows(Matrix& x, const FeasibleRegion& region, std::vector<double>& row, std::vector<double>& scratch) {
  for (std::size_t i = 0; i < region.files; ++i) {
    const auto& support = region.support[i];
    auto xr = x.row(i);
    row.clear();
    for (int j : support) row.push_back(xr[static_cast<std::size_t>(j)]);
    band_project(row, region.bounds.lower[i], region.bounds.upper[i], scratch);
    std::fill(xr.begin(), xr.end(), 0.0);
    for (std::size_t s = 0; s < support.size(); ++s) xr[static_cast<std::size_t>(support[s])] = row[s];
  }
}

double supported_total(const Matrix& x, const FeasibleRegion& region) {
  double sum = 0.0;
  for (std::size_t i = 0; i < region.files; ++i) {
    for (int j : region.support[i]) sum += x(i, static_cast<std::size_t>(j));
  }
  return sum;
}

// Exact projection onto rows ∩ {Σ x >= min_total}. The rows are separable, so
// the capacity multiplier ν >= 0 enters as a common shift of every supported
// entry and the row-projected total is non-decreasing in ν.
void project_rows_capacity(Matrix& x, const FeasibleRegion& region, std::vector<double>& row,
                           std::vector<double>& scratch, Matrix& work) {
  work = x;
  project_rows(work, region, row, scratch);
  if (supported_total(work, region) >= region.min_total) {
    x = work;
    return;
  }
  auto total_at = [&](double nu) {
    work = x;
    for (std::size_t i = 0; i < region.files; ++i) {
      for (int j : region.support[i]) work(i, static_cast<std::size_t>(j)) += nu;
    }
    project_rows(work, region, row, scratch);
    return supported_total(work, region);
  };
  double lo = 0.0, hi = 1.0;
  for (int grow = 0; total_at(hi) < region.min_total; ++grow) {
    if (grow > 200) throw ProjectionError("cache capacity cannot be met within the row bounds");
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (total_at(mid) < region.min_total ? lo : hi) = mid;
  }
  total_at(hi);
  x = work;
}

// One half-space per node; they touch disjoint columns, so projecting onto
// each in turn is the projection onto their intersection.
void project_stability(Matrix& x, const FeasibleRegion& region, const std::vector<std::vector<int>>& column_files) {
  for (std::size_t j = 0; j < region.nodes; ++j) {
    double load = 0.0, norm2 = 0.0;
    for (int i : column_files[j]) {
      const double lam = region.rates[static_cast<std::size_t>(i)];
      load += lam * x(static_cast<std::size_t>(i), j);
      norm2 += lam * lam;
    }
    if (load <= region.node_capacity[j] || norm2 == 0.0) continue;
    const double step = (load - region.node_capacity[j]) / norm2;
    for (int i : column_files[j]) {
      x(static_cast<std::size_t>(i), j) -= step * region.rates[static_cast<std::size_t>(i)];
    }
  }
}

std::vector<std::vector<int>> files_per_node(const FeasibleRegion& region) {
  std::vector<std::vector<int>> out(region.nodes);
  for (std::size_t i = 0; i < region.files; ++i) {
    for (int j : region.support[i]) out[static_cast<std::size_t>(j)].push_back(static_cast<int>(i));
  }
  return out;
}

}  // namespace

void project_capped_band(std::span<double> values, double lower, double upper) {
  std::vector<double> scratch;
  band_project(values, lower, upper, scratch);
}

Violation max_violation(const Matrix& pi, const FeasibleRegion& region) {
  Violation worst;
  auto note = [&](double amount, auto&& describe) {
    if (amount > worst.amount) {
      worst.amount = amount;
      worst.constraint = describe();
    }
  };
  double total = 0.0;
  for (std::size_t i = 0; i < region.files; ++i) {
    const auto& support = region.support[i];
    double sum = 0.0;
    for (std::size_t j = 0; j < region.nodes; ++j) {
      const double v = pi(i, j);
      const bool on = std::binary_search(support.begin(), support.end(), static_cast<int>(j));
      if (on) {
        note(-v, [&] { return "pi[" + std::to_string(i) + "][" + std::to_string(j) + "] >= 0"; });
        note(v - 1.0, [&] { return "pi[" + std::to_string(i) + "][" + std::to_string(j) + "] <= 1"; });
        sum += v;
      } else {
        note(std::abs(v), [&] { return "pi[" + std::to_string(i) + "][" + std::to_string(j) + "] off placement"; });
      }
    }
    total += sum;
    note(region.bounds.lower[i] - sum, [&] { return "file " + std::to_string(i) + " row sum >= lower bound"; });
    note(sum - region.bounds.upper[i], [&] { return "file " + std::to_string(i) + " row sum <= upper bound"; });
  }
  note(region.min_total - total, [] { return std::string("cache capacity (total row sum >= sum k - C)"); });
  for (std::size_t j = 0; j < region.nodes; ++j) {
    double load = 0.0;
    for (std::size_t i = 0; i < region.files; ++i) load += region.rates[i] * pi(i, j);
    const double excess = (load - region.node_capacity[j]) / std::max(region.node_capacity[j], 1e-300);
    note(excess, [&] { return "node " + std::to_string(j) + " stability"; });
  }
  return worst;
}

Matrix project_feasible(const Matrix& candidate, const FeasibleRegion& region, const ProjectionOptions& options) {
  const auto column_files = files_per_node(region);
  std::vector<double> row, scratch;

  Matrix x = candidate;
  Matrix inc_rows(x.rows(), x.cols(), 0.0);
  Matrix inc_stab(x.rows(), x.cols(), 0.0);
  Matrix y(x.rows(), x.cols(), 0.0);
  Matrix before(x.rows(), x.cols(), 0.0);
  Matrix work;

  auto dykstra_step = [&](Matrix& increment, auto&& project) {
    auto& xd = x.data();
    auto& yd = y.data();
    auto& id = increment.data();
    for (std::size_t e = 0; e < xd.size(); ++e) yd[e] = xd[e] + id[e];
    project(y);
    for (std::size_t e = 0; e < xd.size(); ++e) {
      id[e] = xd[e] + id[e] - yd[e];
      xd[e] = yd[e];
    }
  };

  bool converged = false;
  for (int cycle = 0; cycle < options.max_cycles; ++cycle) {
    before.data() = x.data();
    dykstra_step(inc_rows, [&](Matrix& m) { project_rows_capacity(m, region, row, scratch, work); });
    dykstra_step(inc_stab, [&](Matrix& m) { project_stability(m, region, column_files); });
    double change = 0.0;
    for (std::size_t e = 0; e < x.data().size(); ++e) {
      change = std::max(change, std::abs(x.data()[e] - before.data()[e]));
    }
    // Dykstra iterates can stall while the increments rebalance, so a small
    // step alone does not mean the intersection has been reached.
    if (change < options.tolerance && max_violation(x, region).amount <= options.feasibility_tol) {
      converged = true;
      break;
    }
  }

  const Violation v = max_violation(x, region);
  if (v.amount > options.feasibility_tol) {
    std::ostringstream os;
    os << "feasible region appears empty: " << v.constraint << " violated by " << v.amount
       << (converged ? "" : " (Dykstra did not converge)");
    throw ProjectionError(os.str());
  }
  return x;
}

}  // namespace fcache
