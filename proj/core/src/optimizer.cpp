// Copyright 2026 The fcache Authors.
// SPDX-License-Identifier: Apache-2.0

#include "fcache/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace fcache {

namespace {

// Pin targets tolerate Dykstra residue: 3.0000001 pins to 3, not 4.
constexpr double kPinTol = 1e-6;

double inner(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (std::size_t e = 0; e < a.data().size(); ++e) s += a.data()[e] * b.data()[e];
  return s;
}

double max_abs_on_support(const Matrix& g, const FeasibleRegion& region) {
  double m = 0.0;
  for (std::size_t i = 0; i < region.files; ++i) {
    for (int j : region.support[i]) m = std::max(m, std::abs(g(i, static_cast<std::size_t>(j))));
  }
  return m;
}

}  // namespace

SchedulePlan initial_plan(const ScenarioConfig& config, const WorkloadBin& bin, double stability_margin) {
  const std::size_t r = config.files.size();
  const std::size_t m = config.nodes.size();
  SchedulePlan plan;
  plan.d.assign(r, 0);
  plan.z.assign(r, 0.0);
  plan.pi = Matrix(r, m, 0.0);

  const long per_file = r == 0 ? 0 : config.cache_capacity / static_cast<long>(r);
  long used = 0;
  for (std::size_t i = 0; i < r; ++i) {
    plan.d[i] = static_cast<int>(std::min<long>(config.files[i].k, per_file));
    used += plan.d[i];
  }
  long leftover = config.cache_capacity - used;
  std::vector<std::size_t> order(r);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return bin.arrival_rates[a] > bin.arrival_rates[b];
  });
  bool progress = true;
  while (leftover > 0 && progress) {
    progress = false;
    for (std::size_t i : order) {
      if (leftover == 0) break;
      if (plan.d[i] < config.files[i].k) {
        ++plan.d[i];
        --leftover;
        progress = true;
      }
    }
  }

  for (std::size_t i = 0; i < r; ++i) {
    const auto& f = config.files[i];
    const double share = static_cast<double>(f.k - plan.d[i]) / f.n;
    for (int j : f.placement) plan.pi(i, static_cast<std::size_t>(j)) = share;
  }

  const auto moments = node_moments(config);
  const LoadProfile load = load_profile(plan.pi, bin, moments);
  if (!load.stable(stability_margin - 1e-12)) {
    std::ostringstream os;
    os << "no stable uniform plan:";
    for (std::size_t j = 0; j < m; ++j) {
      if (load.rho[j] > 1.0 - stability_margin) os << " node " << j << " rho=" << load.rho[j];
    }
    throw InfeasibleError(os.str());
  }
  plan.objective = LatencyModel(config, bin).objective(plan.pi, plan.z);
  return plan;
}

std::vector<double> solve_prob_z(const LatencyModel& model, const Matrix& pi) { return model.optimal_z(pi); }

Matrix solve_prob_pi(const LatencyModel& model, const Matrix& start, std::span<const double> z,
                     const FeasibleRegion& region, const OptimizerOptions& options) {
  Matrix x = project_feasible(start, region, options.projection);
  double f = model.objective(x, z);
  double step = -1.0;

  for (int iter = 0; iter < options.pgd_max_iters; ++iter) {
    if (f <= 0.0) break;
    const Matrix grad = model.gradient_pi(x, z);
    const double gmax = max_abs_on_support(grad, region);
    if (gmax == 0.0) break;
    if (step < 0.0) step = 0.5 / gmax;

    bool accepted = false;
    Matrix trial;
    double f_trial = f;
    for (int shrink = 0; shrink < 60; ++shrink) {
      trial = x;
      for (std::size_t e = 0; e < trial.data().size(); ++e) trial.data()[e] -= step * grad.data()[e];
      trial = project_feasible(trial, region, options.projection);
      Matrix delta = trial;
      for (std::size_t e = 0; e < delta.data().size(); ++e) delta.data()[e] -= x.data()[e];
      const double decrease = inner(grad, delta);
      try {
        f_trial = model.objective(trial, z);
      } catch (const UnstableError&) {
        step *= options.armijo_shrink;
        continue;
      }
      if (decrease >= 0.0) break;  // projected step is not a descent direction: stationary
      if (f_trial <= f + options.armijo_slope * decrease) {
        accepted = true;
        break;
      }
      step *= options.armijo_shrink;
    }
    if (!accepted) break;

    const double improvement = f - f_trial;
    x = std::move(trial);
    f = f_trial;
    step *= 2.0;
    if (improvement <= options.pgd_rel_tol * std::abs(f + improvement)) break;
  }
  return x;
}

double fractional_part(double row_sum) {
  const double frac = row_sum - std::floor(row_sum);
  if (frac < kIntegralTol || 1.0 - frac < kIntegralTol) return 0.0;
  return frac;
}

RoundingBounds round_step(const Matrix& pi, const RoundingBounds& bounds, double batch_fraction) {
  std::vector<std::pair<double, std::size_t>> fractional;
  for (std::size_t i = 0; i < pi.rows(); ++i) {
    if (bounds.pinned(i)) continue;
    const double frac = fractional_part(pi.row_sum(i));
    if (frac > 0.0) fractional.emplace_back(frac, i);
  }
  RoundingBounds out = bounds;
  if (fractional.empty()) return out;
  std::sort(fractional.begin(), fractional.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  const auto count = static_cast<std::size_t>(
      std::ceil(batch_fraction * static_cast<double>(fractional.size()) - 1e-12));
  const std::size_t pin = std::clamp<std::size_t>(count, 1, fractional.size());
  for (std::size_t p = 0; p < pin; ++p) {
    const std::size_t i = fractional[p].second;
    int target = static_cast<int>(std::ceil(pi.row_sum(i) - kPinTol));
    target = std::clamp(target, bounds.lower[i], bounds.upper[i]);
    out.lower[i] = out.upper[i] = target;
  }
  return out;
}

void snap_plan(SchedulePlan& plan, const ScenarioConfig& config) {
  const std::size_t r = config.files.size();
  plan.d.assign(r, 0);
  std::vector<double> row;
  for (std::size_t i = 0; i < r; ++i) {
    const auto& f = config.files[i];
    auto full = plan.pi.row(i);
    const double target = std::clamp<double>(std::round(plan.pi.row_sum(i)), 0.0, f.k);
    row.clear();
    for (int j : f.placement) row.push_back(full[static_cast<std::size_t>(j)]);
    project_capped_band(row, target, target);
    std::fill(full.begin(), full.end(), 0.0);
    for (std::size_t s = 0; s < row.size(); ++s) full[static_cast<std::size_t>(f.placement[s])] = row[s];
    plan.d[i] = f.k - static_cast<int>(target);
  }
}

namespace {

struct InnerResult {
  Matrix pi;
  int passes = 0;
  int first_fractional = 0;
};

int count_fractional(const Matrix& pi, const RoundingBounds& bounds) {
  int count = 0;
  for (std::size_t i = 0; i < pi.rows(); ++i) {
    if (!bounds.pinned(i) && fractional_part(pi.row_sum(i)) > 0.0) ++count;
  }
  return count;
}

InnerResult rounding_loop(const LatencyModel& model, const ScenarioConfig& config, const WorkloadBin& bin,
                          const Matrix& start, std::span<const double> z, const OptimizerOptions& options) {
  FeasibleRegion region =
      FeasibleRegion::build(config, bin, RoundingBounds::unpinned(config), options.stability_margin);
  InnerResult out;
  out.pi = start;
  while (true) {
    out.pi = solve_prob_pi(model, out.pi, z, region, options);
    const int fractional = count_fractional(out.pi, region.bounds);
    if (out.passes == 0) out.first_fractional = fractional;
    ++out.passes;
    if (fractional == 0) break;
    region.bounds = round_step(out.pi, region.bounds, options.batch_fraction);
  }
  return out;
}

SchedulePlan finish(const LatencyModel& model, const ScenarioConfig& config, Matrix pi) {
  SchedulePlan plan;
  plan.pi = std::move(pi);
  snap_plan(plan, config);
  plan.z = model.optimal_z(plan.pi);
  plan.objective = model.objective(plan.pi, plan.z);
  return plan;
}

}  // namespace

OptimizeResult optimize(const ScenarioConfig& config, const WorkloadBin& bin, const OptimizerOptions& options,
                        const std::optional<SchedulePlan>& warm_start) {
  const LatencyModel model(config, bin);

  Matrix start;
  if (warm_start) {
    const FeasibleRegion region =
        FeasibleRegion::build(config, bin, RoundingBounds::unpinned(config), options.stability_margin);
    try {
      start = project_feasible(warm_start->pi, region, options.projection);
    } catch (const ProjectionError&) {
      start = initial_plan(config, bin, options.stability_margin).pi;
    }
  } else {
    start = initial_plan(config, bin, options.stability_margin).pi;
  }

  OptimizeResult result;
  result.trace.epsilon = options.epsilon;
  SchedulePlan current = finish(model, config, std::move(start));
  result.trace.objective.push_back(current.objective);
  result.trace.fractional_files.push_back(0);
  SchedulePlan best = current;

  for (int outer = 0; outer < options.max_outer; ++outer) {
    const auto z = solve_prob_z(model, current.pi);
    InnerResult inner_result = rounding_loop(model, config, bin, current.pi, z, options);
    result.trace.inner_rounding_passes += inner_result.passes;
    result.trace.fractional_files.push_back(inner_result.first_fractional);

    SchedulePlan next = finish(model, config, std::move(inner_result.pi));
    result.trace.objective.push_back(next.objective);
    const double improvement = current.objective - next.objective;
    if (next.objective < best.objective) best = next;
    if (improvement <= options.epsilon) {
      result.trace.converged = true;
      break;
    }
    current = std::move(next);
  }

  result.plan = std::move(best);
  return result;
}

}  // namespace fcache
