// Copyright 2026 The fcache Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <numeric>
#include <random>

#include "fcache/optimizer.hpp"
#include "fcache/projection.hpp"
#include "fcache/scenarios.hpp"
#include "fixtures.hpp"
#include "invariants.hpp"

using namespace fcache;
using Svc = ServiceDistributionSpec;

namespace {

ScenarioConfig six_node_instance(long cache) {
  return fixture::make_config(
      {Svc::exponential(0.5), Svc::exponential(0.4), Svc::deterministic(2.0), Svc::lognormal(2.5, 4.0),
       Svc::exponential(0.3), Svc::shifted_exponential(0.5, 0.6)},
      {{4, 2, {0, 1, 2, 3}}, {3, 2, {2, 3, 4}}, {4, 3, {1, 3, 4, 5}}, {3, 1, {0, 4, 5}}, {5, 2, {0, 1, 2, 4, 5}}},
      {0.05, 0.08, 0.03, 0.06, 0.04}, cache);
}

double inner(const Matrix& a, const Matrix& b) {
  return std::inner_product(a.data().begin(), a.data().end(), b.data().begin(), 0.0);
}

Matrix random_region_point(const FeasibleRegion& region, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5, 1.5);
  Matrix x(region.files, region.nodes, 0.0);
  for (std::size_t i = 0; i < region.files; ++i)
    for (int j : region.support[i]) x(i, static_cast<std::size_t>(j)) = u(rng);
  return x;
}

}  // namespace

TEST_CASE("initial plan caches everything when C covers every chunk") {
  const auto c = six_node_instance(100);
  const auto plan = initial_plan(c, c.bins[0]);
  for (std::size_t i = 0; i < c.files.size(); ++i) {
    CHECK(plan.d[i] == c.files[i].k);
    CHECK(plan.pi.row_sum(i) == 0.0);
  }
  CHECK(invariants::plan_violations(plan, c, c.bins[0]).empty());
}

TEST_CASE("initial plan without cache spreads k over the placement") {
  const auto c = six_node_instance(0);
  const auto plan = initial_plan(c, c.bins[0]);
  for (std::size_t i = 0; i < c.files.size(); ++i) {
    CHECK(plan.d[i] == 0);
    for (int j : c.files[i].placement) {
      CHECK(plan.pi(i, static_cast<std::size_t>(j)) == doctest::Approx(double(c.files[i].k) / c.files[i].n));
    }
    CHECK(plan.z[i] == 0.0);
  }
}

TEST_CASE("initial plan gives leftover capacity to the busiest files") {
  const auto c = six_node_instance(7);  // floor(7/5) = 1 each; file 3 has k = 1, so files 1 and 0 get the rest
  const auto plan = initial_plan(c, c.bins[0]);
  CHECK(plan.d == std::vector<int>{2, 2, 1, 1, 1});
}

TEST_CASE("initial plan on the reference cluster at C = 500") {
  const auto c = scenarios::reference_cluster();
  const auto plan = initial_plan(c, c.bins[0]);
  long cached = 0;
  for (std::size_t i = 0; i < c.files.size(); ++i) {
    CHECK((plan.d[i] == 0 || plan.d[i] == 1));
    CHECK(plan.pi.row_sum(i) == doctest::Approx(4 - plan.d[i]));
    cached += plan.d[i];
  }
  CHECK(cached == 500);
  CHECK(load_profile(plan.pi, c.bins[0], c.nodes).max_rho() < 1.0 - kStabilityMargin);
}

TEST_CASE("initial plan reports the overloaded nodes") {
  const auto c = fixture::make_config({Svc::exponential(0.1), Svc::exponential(0.1)}, {{2, 2, {0, 1}}}, {0.2});
  CHECK_THROWS_AS(initial_plan(c, c.bins[0]), InfeasibleError);
}

TEST_CASE("Prob_Z examples") {
  const auto cached = fixture::single_queue(Svc::exponential(0.1), 0.05);
  const LatencyModel m0(cached, cached.bins[0]);
  CHECK(solve_prob_z(m0, Matrix(1, 1, 0.0)) == std::vector<double>{0.0});
  CHECK(solve_prob_z(m0, Matrix(1, 1, 1.0)) == std::vector<double>{0.0});

  const auto two = fixture::make_config({Svc::exponential(0.1), Svc::exponential(0.1)}, {{2, 2, {0, 1}}}, {0.05});
  const LatencyModel m2(two, two.bins[0]);
  const auto z = solve_prob_z(m2, Matrix(1, 2, 1.0));
  CHECK(z[0] == doctest::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("Prob_Z never increases the objective") {
  const auto c = six_node_instance(4);
  const LatencyModel model(c, c.bins[0]);
  auto plan = initial_plan(c, c.bins[0]);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 30.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> z(c.files.size());
    for (double& v : z) v = u(rng);
    CHECK(model.objective(plan.pi, solve_prob_z(model, plan.pi)) <= model.objective(plan.pi, z) + 1e-12);
  }
}

TEST_CASE("projection of the symmetric pair onto a unit band") {
  const auto c = fixture::make_config({Svc::exponential(1.0), Svc::exponential(1.0)}, {{2, 1, {0, 1}}}, {0.1});
  RoundingBounds b{{1}, {1}};
  const auto region = FeasibleRegion::build(c, c.bins[0], b, kStabilityMargin);
  Matrix x(1, 2, 0.9);
  const Matrix p = project_feasible(x, region);
  CHECK(p(0, 0) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(p(0, 1) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("projection leaves feasible points alone and clips box violations") {
  const auto c = six_node_instance(100);
  const auto region = FeasibleRegion::build(c, c.bins[0], RoundingBounds::unpinned(c), kStabilityMargin);
  const auto plan = initial_plan(six_node_instance(3), c.bins[0]);
  const Matrix same = project_feasible(plan.pi, region);
  for (std::size_t e = 0; e < same.data().size(); ++e) CHECK(same.data()[e] == doctest::Approx(plan.pi.data()[e]).epsilon(1e-10));

  Matrix boxed = plan.pi;
  boxed(0, 0) = -0.3;
  boxed(1, 2) = 1.4;
  const Matrix clipped = project_feasible(boxed, region);
  CHECK(clipped(0, 0) == doctest::Approx(0.0));
  CHECK(clipped(1, 2) == doctest::Approx(1.0));
  CHECK(clipped(2, 1) == doctest::Approx(plan.pi(2, 1)));
}

TEST_CASE("capped band projection water-fills a common shift") {
  std::vector<double> v = {0.2, 0.9, 1.7, -0.4};
  project_capped_band(v, 2.0, 2.0);
  CHECK(std::accumulate(v.begin(), v.end(), 0.0) == doctest::Approx(2.0));
  CHECK(v[2] == doctest::Approx(1.0));
  CHECK(v[3] == doctest::Approx(0.0));
  CHECK(v[1] - v[0] == doctest::Approx(0.7));
}

TEST_CASE("projection satisfies the variational inequality") {
  // x = P(c) iff <c - x, y - x> <= 0 for every feasible y.
  const auto c = six_node_instance(6);
  const auto region = FeasibleRegion::build(c, c.bins[0], RoundingBounds::unpinned(c), kStabilityMargin);
  std::mt19937_64 rng(2);
  std::vector<Matrix> feasible;
  for (int t = 0; t < 30; ++t) feasible.push_back(project_feasible(random_region_point(region, rng), region));
  for (int t = 0; t < 30; ++t) {
    const Matrix cand = random_region_point(region, rng);
    const Matrix x = project_feasible(cand, region);
    CHECK(max_violation(x, region).amount <= 1e-7);
    Matrix resid = cand;
    for (std::size_t e = 0; e < resid.data().size(); ++e) resid.data()[e] -= x.data()[e];
    for (const auto& y : feasible) {
      Matrix dir = y;
      for (std::size_t e = 0; e < dir.data().size(); ++e) dir.data()[e] -= x.data()[e];
      CHECK(inner(resid, dir) <= 1e-6);
    }
  }
}

TEST_CASE("projection binds the stability half-spaces") {
  const auto c = fixture::make_config({Svc::exponential(0.1), Svc::exponential(1.0)}, {{2, 1, {0, 1}}}, {0.2});
  const auto region = FeasibleRegion::build(c, c.bins[0], RoundingBounds{{1}, {1}}, kStabilityMargin);
  const Matrix x = project_feasible(Matrix(1, 2, 0.5), region);
  CHECK(0.2 * x(0, 0) <= 0.1 * (1 - kStabilityMargin) + 1e-9);
  CHECK(x(0, 0) + x(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("projection reports an empty region") {
  const auto c = fixture::make_config({Svc::exponential(0.1), Svc::exponential(0.1)}, {{2, 2, {0, 1}}}, {0.2});
  const auto region = FeasibleRegion::build(c, c.bins[0], RoundingBounds{{2}, {2}}, kStabilityMargin);
  CHECK_THROWS_AS(project_feasible(Matrix(1, 2, 1.0), region), ProjectionError);
}

TEST_CASE("Prob_Pi returns the only feasible point when pinned") {
  const auto c = fixture::make_config({Svc::exponential(0.5), Svc::exponential(0.5)}, {{2, 2, {0, 1}}}, {0.1});
  const LatencyModel model(c, c.bins[0]);
  const auto region = FeasibleRegion::build(c, c.bins[0], RoundingBounds{{2}, {2}}, kStabilityMargin);
  const Matrix x = solve_prob_pi(model, Matrix(1, 2, 0.3), std::vector<double>{0.0}, region);
  CHECK(x(0, 0) == doctest::Approx(1.0));
  CHECK(x(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("Prob_Pi with k = 2 on two identical nodes fills both") {
  const auto c = fixture::make_config({Svc::exponential(0.5), Svc::exponential(0.5)}, {{2, 2, {0, 1}}}, {0.1});
  const auto result = optimize(c, c.bins[0]);
  CHECK(result.plan.pi(0, 0) == doctest::Approx(1.0));
  CHECK(result.plan.pi(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("Prob_Pi sends a light load to the faster node") {
  const auto c = fixture::make_config({Svc::exponential(0.2), Svc::exponential(0.1)}, {{2, 1, {0, 1}}}, {1e-6});
  const LatencyModel model(c, c.bins[0]);
  const auto region = FeasibleRegion::build(c, c.bins[0], RoundingBounds::unpinned(c), kStabilityMargin);
  const Matrix start(1, 2, 0.5);
  const auto z = solve_prob_z(model, start);
  const Matrix x = solve_prob_pi(model, start, z, region);
  CHECK(x(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(x(0, 1) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(model.objective(x, z) <= model.objective(start, z));
}

TEST_CASE("Prob_Pi never increases the objective") {
  const auto c = six_node_instance(5);
  const LatencyModel model(c, c.bins[0]);
  const auto region = FeasibleRegion::build(c, c.bins[0], RoundingBounds::unpinned(c), kStabilityMargin);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const Matrix start = project_feasible(random_region_point(region, rng), region);
    const auto z = solve_prob_z(model, start);
    const Matrix x = solve_prob_pi(model, start, z, region);
    CHECK(model.objective(x, z) <= model.objective(start, z) + 1e-12);
    CHECK(max_violation(x, region).amount <= 1e-7);
  }
}

TEST_CASE("round_step pins the most fractional file") {
  Matrix pi(3, 1);
  pi(0, 0) = 3.2;
  pi(1, 0) = 2.7;
  pi(2, 0) = 1.0;
  RoundingBounds b{{0, 0, 0}, {4, 4, 4}};
  const auto out = round_step(pi, b, 0.3);  // ceil(0.3 * 2) = 1 file
  CHECK(out.lower == std::vector<int>{0, 3, 0});
  CHECK(out.upper == std::vector<int>{4, 3, 4});
}

TEST_CASE("round_step is a no-op on integral rows") {
  Matrix pi(2, 1);
  pi(0, 0) = 2.0;
  pi(1, 0) = 1.0 + 1e-12;
  RoundingBounds b{{0, 0}, {3, 3}};
  const auto out = round_step(pi, b, 0.5);
  CHECK(out.lower == b.lower);
  CHECK(out.upper == b.upper);
}

TEST_CASE("round_step breaks ties by the lower file id") {
  Matrix pi(2, 1);
  pi(0, 0) = 1.5;
  pi(1, 0) = 2.5;
  RoundingBounds b{{0, 0}, {3, 3}};
  const auto out = round_step(pi, b, 0.5);
  CHECK(out.lower == std::vector<int>{2, 0});
  CHECK(out.upper == std::vector<int>{2, 3});
}

TEST_CASE("rounding up never uses more cache") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  for (int t = 0; t < 200; ++t) {
    Matrix pi(8, 1);
    for (double& v : pi.data()) v = u(rng);
    RoundingBounds b{std::vector<int>(8, 0), std::vector<int>(8, 4)};
    double cache_before = 0.0;
    for (std::size_t i = 0; i < 8; ++i) cache_before += 4.0 - pi.row_sum(i);
    const auto out = round_step(pi, b, 0.25);
    double cache_after = 0.0;
    for (std::size_t i = 0; i < 8; ++i) cache_after += 4.0 - (out.pinned(i) ? out.lower[i] : pi.row_sum(i));
    CHECK(cache_after <= cache_before + 1e-12);
  }
}

TEST_CASE("optimize with room for everything converges to zero at once") {
  const auto c = six_node_instance(100);
  const auto result = optimize(c, c.bins[0]);
  CHECK(result.plan.objective == 0.0);
  CHECK(result.trace.iterations() == 1);
  CHECK(result.trace.converged);
  for (std::size_t i = 0; i < c.files.size(); ++i) CHECK(result.plan.d[i] == c.files[i].k);
}

TEST_CASE("optimized plans satisfy every invariant") {
  for (long cache : {0L, 1L, 3L, 5L, 8L, 11L}) {
    CAPTURE(cache);
    const auto c = six_node_instance(cache);
    const auto result = optimize(c, c.bins[0]);
    CHECK(invariants::plan_violations(result.plan, c, c.bins[0]).empty());
    CHECK(result.trace.converged);
    CHECK(result.trace.objective.front() >= result.plan.objective);
    const auto& t = result.trace.objective;
    for (std::size_t s = 1; s + 1 < t.size(); ++s) CHECK(t[s] <= t[s - 1] + result.trace.epsilon);
    CHECK(result.plan.objective == doctest::Approx(objective(result.plan, c.bins[0], c)).epsilon(1e-12));
  }
}

TEST_CASE("relaxed optimum does not increase as the cache grows") {
  const auto base = six_node_instance(0);
  const LatencyModel model(base, base.bins[0]);
  Matrix x = initial_plan(base, base.bins[0]).pi;
  double previous = 1e300;
  for (long cache : {0L, 2L, 4L, 7L, 11L}) {
    auto c = six_node_instance(cache);
    const auto region = FeasibleRegion::build(c, c.bins[0], RoundingBounds::unpinned(c), kStabilityMargin);
    for (int round = 0; round < 5; ++round) x = solve_prob_pi(model, x, solve_prob_z(model, x), region);
    const double value = model.objective(x, solve_prob_z(model, x));
    CHECK(value <= previous + 1e-12);
    previous = value;
  }
}

TEST_CASE("warm start keeps the previous plan's value") {
  const auto small = six_node_instance(2);
  const auto first = optimize(small, small.bins[0]);
  const auto large = six_node_instance(4);
  const auto warm = optimize(large, large.bins[0], {}, first.plan);
  CHECK(warm.trace.objective.front() == doctest::Approx(first.plan.objective).epsilon(1e-9));
  CHECK(warm.plan.objective <= first.plan.objective + 1e-9);
}

TEST_CASE("snap_plan rounds rows exactly") {
  const auto c = six_node_instance(3);
  auto plan = initial_plan(c, c.bins[0]);
  for (double& v : plan.pi.data()) v *= 1.0 + 1e-11;
  snap_plan(plan, c);
  for (std::size_t i = 0; i < c.files.size(); ++i) CHECK(plan.pi.row_sum(i) == doctest::Approx(c.files[i].k - plan.d[i]).epsilon(1e-14));
  CHECK(fractional_part(2.0 + 1e-10) == 0.0);
  CHECK(fractional_part(2.25) == doctest::Approx(0.25));
}
