// Copyright 2026 The fcache Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sstream>

#include "commands.hpp"
#include "fcache/scenarios.hpp"
#include "fixtures.hpp"
#include "io.hpp"

namespace fs = std::filesystem;
using fcache::cli::run;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fcache::ScenarioConfig small_cluster(long cache) {
  using S = fcache::ServiceDistributionSpec;
  auto c = fixture::make_config({S::exponential(1.0), S::exponential(0.7), S::exponential(1.4), S::exponential(0.9),
                                 S::exponential(1.1)},
                                {{4, 2, {0, 1, 2, 3}}, {3, 2, {1, 2, 4}}, {5, 3, {0, 1, 2, 3, 4}}},
                                {0.15, 0.1, 0.05}, cache, 2.0e4);
  c.bins.push_back({1, 2.0e4, {0.05, 0.2, 0.05}});
  return c;
}

fs::path write_cluster(const fs::path& dir, long cache = 2) {
  const auto path = dir / "scenario.json";
  fcache::io::save_scenario(small_cluster(cache), path);
  return path;
}

double value_after(const std::string& text, const std::string& key) {
  const auto at = text.find(key + "=");
  REQUIRE(at != std::string::npos);
  return std::stod(text.substr(at + key.size() + 1));
}

}  // namespace

TEST_CASE("scenario JSON round trips") {
  const auto dir = fixture::scratch_dir("cli_roundtrip");
  const auto original = small_cluster(3);
  fcache::io::save_scenario(original, dir / "a.json");
  const auto loaded = fcache::io::load_scenario(dir / "a.json");
  CHECK(loaded.cache_capacity == 3);
  CHECK(loaded.bins == original.bins);
  REQUIRE(loaded.files.size() == original.files.size());
  for (std::size_t i = 0; i < loaded.files.size(); ++i) CHECK(loaded.files[i].placement == original.files[i].placement);
  fcache::io::save_scenario(loaded, dir / "b.json");
  CHECK(fixture::read_file(dir / "a.json") == fixture::read_file(dir / "b.json"));
}

TEST_CASE("optimize writes a plan and a convergence trace") {
  const auto dir = fixture::scratch_dir("cli_optimize");
  const auto cfg = write_cluster(dir);
  const auto res = call({"optimize", "--config", cfg.string(), "--out", (dir / "plan.json").string()});
  REQUIRE(res.code == 0);
  CHECK(res.out.find("converged=") != std::string::npos);
  const auto plan = fcache::io::load_plan(dir / "plan.json");
  CHECK(plan.pi.rows() == 3);
  long cached = 0;
  for (int d : plan.d) cached += d;
  CHECK(cached <= 2);
  const auto trace = fixture::read_file(dir / "plan.convergence.csv");
  CHECK(trace.rfind("iteration,objective,fractional_files_remaining\r\n", 0) == 0);
}

TEST_CASE("bound aggregate matches the optimizer objective") {
  const auto dir = fixture::scratch_dir("cli_bound");
  const auto cfg = write_cluster(dir);
  const auto plan = (dir / "plan.json").string();
  const auto opt = call({"optimize", "--config", cfg.string(), "--out", plan});
  REQUIRE(opt.code == 0);
  const auto bnd = call({"bound", "--config", cfg.string(), "--plan", plan, "--out", (dir / "bound.csv").string()});
  REQUIRE(bnd.code == 0);
  CHECK(value_after(bnd.out, "aggregate") == doctest::Approx(value_after(opt.out, "objective")).epsilon(1e-6));
  const auto csv = fixture::read_file(dir / "bound.csv");
  CHECK(csv.rfind("file_id,U_i,z_i,d_i\r\n", 0) == 0);
  CHECK(csv.find("weighted,") != std::string::npos);
}

TEST_CASE("sweep-cache is sorted and non-increasing") {
  const auto dir = fixture::scratch_dir("cli_sweep");
  const auto cfg = write_cluster(dir);
  const auto res = call({"sweep-cache", "--config", cfg.string(), "--cache-sizes", "4,0,2,2,7", "--out",
                         (dir / "sweep.csv").string()});
  REQUIRE(res.code == 0);
  std::istringstream csv(fixture::read_file(dir / "sweep.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "cache_size,objective,iterations,converged\r");
  std::vector<long> sizes;
  std::vector<double> objectives;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    sizes.push_back(std::stol(line));
    objectives.push_back(std::stod(line.substr(line.find(',') + 1)));
  }
  CHECK(sizes == std::vector<long>{0, 2, 4, 7});
  for (std::size_t s = 1; s < objectives.size(); ++s) CHECK(objectives[s] <= objectives[s - 1] + 1e-9);
  CHECK(objectives.back() == doctest::Approx(0.0));
  CHECK(call({"sweep-cache", "--config", cfg.string(), "--cache-sizes", "-1", "--out", (dir / "x.csv").string()})
            .code == 2);
}

TEST_CASE("simulate is deterministic for a fixed seed") {
  const auto dir = fixture::scratch_dir("cli_simulate");
  const auto cfg = write_cluster(dir);
  const auto plan = (dir / "plan.json").string();
  REQUIRE(call({"optimize", "--config", cfg.string(), "--out", plan}).code == 0);
  auto sim = [&](const std::string& name, const std::string& seed) {
    return call({"simulate", "--config", cfg.string(), "--plan", plan, "--duration", "20000", "--seed", seed, "--out",
                 (dir / name).string()});
  };
  REQUIRE(sim("a.csv", "7").code == 0);
  REQUIRE(sim("b.csv", "7").code == 0);
  REQUIRE(sim("c.csv", "8").code == 0);
  CHECK(fixture::read_file(dir / "a.csv") == fixture::read_file(dir / "b.csv"));
  CHECK(fixture::read_file(dir / "a.slots.csv") == fixture::read_file(dir / "b.slots.csv"));
  CHECK(fixture::read_file(dir / "a.csv") != fixture::read_file(dir / "c.csv"));
  CHECK(fixture::read_file(dir / "a.csv").rfind("file_id,mean_latency,stderr,samples\r\n", 0) == 0);
}

TEST_CASE("evolve writes per-bin outputs") {
  const auto dir = fixture::scratch_dir("cli_evolve");
  const auto cfg = write_cluster(dir);
  const auto out_dir = dir / "evo";
  const auto res = call({"evolve", "--config", cfg.string(), "--out-dir", out_dir.string()});
  REQUIRE(res.code == 0);
  for (const char* name : {"plan_bin_0.json", "plan_bin_1.json", "cache_evolution.csv", "transitions.csv",
                           "rate_triggers.csv", "sim_bin_0.csv", "sim_bin_1.csv", "slots_bin_0.csv"}) {
    CHECK_MESSAGE(fs::exists(out_dir / name), name);
  }
  CHECK(fixture::read_file(out_dir / "cache_evolution.csv").rfind("bin_id,file_id,d_i\r\n", 0) == 0);
}

TEST_CASE("evolve needs two bins") {
  const auto dir = fixture::scratch_dir("cli_evolve_one");
  auto c = small_cluster(1);
  c.bins.pop_back();
  fcache::io::save_scenario(c, dir / "one.json");
  CHECK(call({"evolve", "--config", (dir / "one.json").string(), "--out-dir", (dir / "o").string()}).code == 2);
}

TEST_CASE("verify-mds counts subsets") {
  auto r = call({"verify-mds", "--n", "1", "--k", "1"});
  CHECK(r.code == 0);
  CHECK(r.out.find("subsets_checked=2 failures=0") != std::string::npos);
  r = call({"verify-mds", "--n", "7", "--k", "4"});
  CHECK(r.code == 0);
  CHECK(r.out.find("subsets_checked=330 failures=0 mode=exhaustive") != std::string::npos);
  r = call({"verify-mds", "--n", "6", "--k", "5"});
  CHECK(r.code == 0);
  CHECK(r.out.find("subsets_checked=462 failures=0") != std::string::npos);
  CHECK(call({"verify-mds", "--n", "200", "--k", "100"}).code == 2);
  CHECK(call({"verify-mds", "--n", "0", "--k", "1"}).code == 2);
}

TEST_CASE("error paths map to exit codes") {
  const auto dir = fixture::scratch_dir("cli_errors");
  const auto cfg = write_cluster(dir);
  CHECK(call({"optimize", "--config", (dir / "missing.json").string(), "--out", (dir / "p.json").string()}).code == 2);
  CHECK(call({"optimize", "--config", cfg.string(), "--out", (dir / "p.json").string(), "--bogus"}).code == 2);
  CHECK(call({"optimize", "--config", cfg.string(), "--out", (dir / "p.json").string(), "--epsilon", "-1"}).code == 2);
  CHECK(call({"optimize", "--config", cfg.string(), "--out", (dir / "p.json").string(), "--bin", "5"}).code == 2);
  CHECK(call({"nope"}).code == 2);
  CHECK(call({}).code == 2);
  CHECK(call({"--help"}).code == 0);

  std::ofstream(dir / "garbage.json") << "{ not json";
  CHECK(call({"optimize", "--config", (dir / "garbage.json").string(), "--out", (dir / "p.json").string()}).code == 2);

  // Load far beyond capacity: no stable plan exists.
  auto hot = small_cluster(0);
  for (double& rate : hot.bins[0].arrival_rates) rate = 50.0;
  fcache::io::save_scenario(hot, dir / "hot.json");
  CHECK(call({"optimize", "--config", (dir / "hot.json").string(), "--out", (dir / "p.json").string()}).code == 3);

  // A hand-written plan that overloads node 0.
  auto light = small_cluster(0);
  fcache::io::save_scenario(light, dir / "light.json");
  auto plan = fixture::plan_from_rows({{1, 1, 0, 0, 0}, {0, 1, 1, 0, 0}, {1, 1, 1, 0, 0}}, light);
  light.bins[0].arrival_rates = {5.0, 0.1, 0.1};
  fcache::io::save_scenario(light, dir / "overload.json");
  fcache::io::save_plan(plan, 0, dir / "overload_plan.json");
  CHECK(call({"bound", "--config", (dir / "overload.json").string(), "--plan", (dir / "overload_plan.json").string(),
              "--out", (dir / "b.csv").string()})
            .code == 4);
  CHECK(call({"simulate", "--config", (dir / "overload.json").string(), "--plan",
              (dir / "overload_plan.json").string(), "--duration", "100", "--out", (dir / "s.csv").string()})
            .code == 4);
}

TEST_CASE("bundled scenarios load and validate") {
  for (const auto& cfg : {fcache::scenarios::evolution_scenario(fcache::scenarios::kEvolutionCache,
                                                                fcache::scenarios::kEvolutionSeed, 1.0e6),
                          fcache::scenarios::placement_scenario(0.000125, fcache::scenarios::kPlacementCache)}) {
    const auto dir = fixture::scratch_dir("cli_bundled");
    fcache::io::save_scenario(cfg, dir / "s.json");
    CHECK_NOTHROW(fcache::io::load_scenario(dir / "s.json"));
  }
}
