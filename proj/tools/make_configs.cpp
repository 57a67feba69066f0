// Copyright 2026 The fcache Authors.
// SPDX-License-Identifier: Apache-2.0

// Writes the bundled scenario files used by the examples in the README.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "fcache/scenarios.hpp"
#include "io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate the bundled fcache scenario files", "fcache-make-configs"};
  std::filesystem::path out_dir = "configs";
  long cache = 500;
  std::uint64_t seed = 2017;
  app.add_option("--out-dir", out_dir, "Destination directory");
  app.add_option("--cache", cache, "Cache capacity of the reference clusters, in chunks");
  app.add_option("--seed", seed, "Placement seed");
  CLI11_PARSE(app, argc, argv);

  namespace sc = fcache::scenarios;
  try {
    std::filesystem::create_directories(out_dir);
    sc::ClusterOptions options;
    options.cache_capacity = cache;
    options.placement_seed = seed;
    fcache::io::save_scenario(sc::reference_cluster(options), out_dir / "reference_r1000.json");

    options.files = 100;
    options.cache_capacity = cache / 10;
    fcache::io::save_scenario(sc::reference_cluster(options), out_dir / "reference_r100.json");

    fcache::io::save_scenario(sc::evolution_scenario(sc::kEvolutionCache, sc::kEvolutionSeed, 1.0e6),
                              out_dir / "evolution.json");
    fcache::io::save_scenario(sc::placement_scenario(sc::placement_sweep_rates().front(), sc::kPlacementCache),
                              out_dir / "placement.json");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  std::cout << "wrote scenarios to " << out_dir.string() << '\n';
  return 0;
}
