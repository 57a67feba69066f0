// Copyright 2026 The fcache Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fcache::cli {

/// Process exit codes, stable for scripting.
enum ExitCode : int {
  kOk = 0,
  kValidation = 2,
  kInfeasible = 3,
  kUnstable = 4,
  kMdsFailure = 5,
};

struct OptimizeArgs {
  std::filesystem::path config;
  int bin = 0;
  double epsilon = 0.01;
  double batch_fraction = 0.1;
  std::optional<std::filesystem::path> warm_start;
  std::filesystem::path out;
  std::optional<std::filesystem::path> trace;  // default: <out stem>.convergence.csv
};

struct SweepArgs {
  std::filesystem::path config;
  int bin = 0;
  std::vector<long> cache_sizes;
  double epsilon = 0.01;
  double batch_fraction = 0.1;
  std::filesystem::path out;
};

struct SimulateArgs {
  std::filesystem::path config;
  std::filesystem::path plan;
  int bin = 0;
  double duration = 0.0;
  double warmup = -1.0;
  std::uint64_t seed = 1;
  double slot_length = 0.0;
  std::filesystem::path out;
  std::optional<std::filesystem::path> slots;  // default: <out stem>.slots.csv
};

struct EvolveArgs {
  std::filesystem::path config;
  std::uint64_t seed = 1;
  double epsilon = 0.01;
  double batch_fraction = 0.1;
  double rate_window = 0.0;  // 0: a fifth of the first bin
  double rate_threshold = 0.5;
  std::filesystem::path out_dir;
};

struct VerifyMdsArgs {
  int n = 0;
  int k = 0;
  std::uint64_t budget = 1'000'000;
  std::uint64_t seed = 1;
};

struct BoundArgs {
  std::filesystem::path config;
  std::filesystem::path plan;
  int bin = 0;
  std::filesystem::path out;
};

int cmd_optimize(const OptimizeArgs& args, std::ostream& out, std::ostream& err);
int cmd_sweep_cache(const SweepArgs& args, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err);
int cmd_evolve(const EvolveArgs& args, std::ostream& out, std::ostream& err);
int cmd_verify_mds(const VerifyMdsArgs& args, std::ostream& out, std::ostream& err);
int cmd_bound(const BoundArgs& args, std::ostream& out, std::ostream& err);

/// Parses argv (argv[0] is the program name) and dispatches to a command.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fcache::cli
