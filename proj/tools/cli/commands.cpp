// Copyright 2026 The fcache Authors.
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <algorithm>
#include <functional>
#include <iostream>

#include <CLI11.hpp>

#include "fcache/coding.hpp"
#include "fcache/latency.hpp"
#include "fcache/optimizer.hpp"
#include "fcache/simulator.hpp"
#include "io.hpp"

namespace fcache::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require_input(const fs::path& path, const char* flag) {
  if (path.empty()) throw UsageError(std::string(flag) + " is required");
  if (!fs::is_regular_file(path)) throw UsageError(std::string(flag) + ": no such file " + path.string());
}

void require_output(const fs::path& path, const char* flag) {
  if (path.empty()) throw UsageError(std::string(flag) + " is required");
  const fs::path parent = path.parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw UsageError(std::string(flag) + ": directory " + parent.string() + " does not exist");
  }
}

fs::path sibling(const fs::path& out, const std::string& suffix) {
  fs::path p = out;
  p.replace_extension(suffix);
  return p;
}

ScenarioConfig load_config(const fs::path& path) {
  ScenarioConfig config = io::load_scenario(path);
  validate_scenario(config);
  return config;
}

const WorkloadBin& pick_bin(const ScenarioConfig& config, int index) {
  if (index < 0 || index >= static_cast<int>(config.bins.size())) {
    throw UsageError("--bin " + std::to_string(index) + " out of range (scenario has " +
                     std::to_string(config.bins.size()) + " bins)");
  }
  return config.bins[static_cast<std::size_t>(index)];
}

void check_plan_shape(const ScenarioConfig& config, const SchedulePlan& plan) {
  if (plan.pi.rows() != config.files.size() || plan.pi.cols() != config.nodes.size()) {
    throw UsageError("plan dimensions do not match the scenario");
  }
}

// Maps the library's exception types onto the exit-code contract.
int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const io::FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const ProjectionError& e) {
    err << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const UnstableError& e) {
    err << "unstable: " << e.what() << '\n';
    return kUnstable;
  } catch (const CodingError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

OptimizerOptions optimizer_options(double epsilon, double batch_fraction) {
  if (!(epsilon >= 0.0)) throw UsageError("--epsilon must be non-negative");
  if (!(batch_fraction > 0.0 && batch_fraction <= 1.0)) throw UsageError("--batch-fraction must lie in (0, 1]");
  OptimizerOptions options;
  options.epsilon = epsilon;
  options.batch_fraction = batch_fraction;
  return options;
}

void write_file_results(const SimReport& report, const fs::path& path) {
  io::CsvWriter csv(path);
  csv.row({"file_id", "mean_latency", "stderr", "samples"});
  for (const auto& f : report.files) csv.field(f.file_id).field(f.mean_latency).field(f.std_error).field(f.samples).end_row();
}

void write_slots(const SimReport& report, const fs::path& path) {
  io::CsvWriter csv(path);
  csv.row({"slot", "chunks_from_cache", "chunks_from_storage"});
  for (const auto& s : report.slots) csv.field(s.slot).field(s.from_cache).field(s.from_storage).end_row();
}

const char* transition_name(TransitionKind kind) {
  switch (kind) {
    case TransitionKind::shrink: return "shrink";
    case TransitionKind::grow: return "grow";
    case TransitionKind::unchanged: break;
  }
  return "unchanged";
}

}  // namespace

int cmd_optimize(const OptimizeArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_input(args.config, "--config");
    if (args.warm_start) require_input(*args.warm_start, "--warm-start");
    require_output(args.out, "--out");
    const fs::path trace_path = args.trace.value_or(sibling(args.out, ".convergence.csv"));
    require_output(trace_path, "--trace");
    const OptimizerOptions options = optimizer_options(args.epsilon, args.batch_fraction);

    const ScenarioConfig config = load_config(args.config);
    const WorkloadBin& bin = pick_bin(config, args.bin);
    std::optional<SchedulePlan> warm;
    if (args.warm_start) {
      warm = io::load_plan(*args.warm_start);
      check_plan_shape(config, *warm);
    }

    const OptimizeResult result = optimize(config, bin, options, warm);
    io::save_plan(result.plan, args.bin, args.out);
    io::CsvWriter csv(trace_path);
    csv.row({"iteration", "objective", "fractional_files_remaining"});
    for (std::size_t c = 0; c < result.trace.objective.size(); ++c) {
      csv.field(static_cast<long>(c)).field(result.trace.objective[c]).field(result.trace.fractional_files[c]).end_row();
    }
    out << "objective=" << io::format_number(result.plan.objective) << " iterations=" << result.trace.iterations()
        << " converged=" << (result.trace.converged ? "true" : "false") << '\n';
    return kOk;
  });
}

int cmd_sweep_cache(const SweepArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_input(args.config, "--config");
    require_output(args.out, "--out");
    if (args.cache_sizes.empty()) throw UsageError("--cache-sizes needs at least one value");
    std::vector<long> sizes = args.cache_sizes;
    if (std::any_of(sizes.begin(), sizes.end(), [](long c) { return c < 0; })) {
      throw UsageError("--cache-sizes must be non-negative");
    }
    std::sort(sizes.begin(), sizes.end());
    sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
    const OptimizerOptions options = optimizer_options(args.epsilon, args.batch_fraction);

    ScenarioConfig config = load_config(args.config);
    pick_bin(config, args.bin);

    io::CsvWriter csv(args.out);
    csv.row({"cache_size", "objective", "iterations", "converged"});
    std::optional<SchedulePlan> warm;
    for (long size : sizes) {
      config.cache_capacity = size;
      const OptimizeResult result = optimize(config, config.bins[static_cast<std::size_t>(args.bin)], options, warm);
      csv.field(size).field(result.plan.objective).field(result.trace.iterations())
          .field(std::string(result.trace.converged ? "true" : "false")).end_row();
      out << "C=" << size << " objective=" << io::format_number(result.plan.objective) << '\n';
      warm = result.plan;
    }
    return kOk;
  });
}

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_input(args.config, "--config");
    require_input(args.plan, "--plan");
    require_output(args.out, "--out");
    const fs::path slots_path = args.slots.value_or(sibling(args.out, ".slots.csv"));
    require_output(slots_path, "--slots");
    if (!(args.duration > 0.0)) throw UsageError("--duration must be positive");

    const ScenarioConfig config = load_config(args.config);
    const WorkloadBin& bin = pick_bin(config, args.bin);
    const SchedulePlan plan = io::load_plan(args.plan);
    check_plan_shape(config, plan);

    SimOptions options;
    options.duration = args.duration;
    options.warmup = args.warmup;
    options.seed = args.seed;
    options.slot_length = args.slot_length;
    const SimReport report = run(config, plan, bin, options);
    write_file_results(report, args.out);
    write_slots(report, slots_path);
    out << "aggregate_mean=" << io::format_number(report.aggregate_mean)
        << " stderr=" << io::format_number(report.aggregate_std_error)
        << " requests=" << report.measured_requests << '\n';
    return kOk;
  });
}

int cmd_evolve(const EvolveArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_input(args.config, "--config");
    if (args.out_dir.empty()) throw UsageError("--out-dir is required");
    const OptimizerOptions options = optimizer_options(args.epsilon, args.batch_fraction);
    const ScenarioConfig config = load_config(args.config);
    if (config.bins.size() < 2) throw UsageError("evolve needs a scenario with at least two bins");
    fs::create_directories(args.out_dir);

    std::vector<SchedulePlan> plans;
    io::CsvWriter evolution(args.out_dir / "cache_evolution.csv");
    evolution.row({"bin_id", "file_id", "d_i"});
    for (std::size_t b = 0; b < config.bins.size(); ++b) {
      std::optional<SchedulePlan> warm;
      if (!plans.empty()) warm = plans.back();
      OptimizeResult result = optimize(config, config.bins[b], options, warm);
      if (warm) {
        // The bound is not convex in pi, so the previous bin's plan can pin the
        // search to a local minimum. Keep whichever start does better.
        OptimizeResult cold = optimize(config, config.bins[b], options);
        if (cold.plan.objective < result.plan.objective) result = std::move(cold);
      }
      io::save_plan(result.plan, static_cast<int>(b), args.out_dir / ("plan_bin_" + std::to_string(b) + ".json"));
      for (std::size_t i = 0; i < config.files.size(); ++i) {
        evolution.field(config.bins[b].id).field(static_cast<int>(i)).field(result.plan.d[i]).end_row();
      }
      out << "bin " << config.bins[b].id << ": objective=" << io::format_number(result.plan.objective) << '\n';
      plans.push_back(std::move(result.plan));
    }

    SimOptions sim;
    sim.seed = args.seed;
    sim.record_arrivals = true;
    const MultiBinResult result = run_multibin(config, plans, sim);
    std::vector<ArrivalRecord> arrivals;
    for (std::size_t b = 0; b < result.reports.size(); ++b) {
      const auto& rep = result.reports[b];
      write_file_results(rep, args.out_dir / ("sim_bin_" + std::to_string(b) + ".csv"));
      write_slots(rep, args.out_dir / ("slots_bin_" + std::to_string(b) + ".csv"));
      arrivals.insert(arrivals.end(), rep.arrivals.begin(), rep.arrivals.end());
    }

    io::CsvWriter transitions(args.out_dir / "transitions.csv");
    transitions.row({"bin_id", "file_id", "time", "d_before", "d_after", "kind"});
    for (const auto& t : result.transitions) {
      transitions.field(t.bin_id).field(t.file_id).field(t.time).field(t.d_before).field(t.d_after)
          .field(std::string(transition_name(t.kind))).end_row();
    }

    double end = 0.0;
    for (const auto& b : config.bins) end += b.duration;
    const double window = args.rate_window > 0.0 ? args.rate_window : config.bins.front().duration / 5.0;
    RateEstimator estimator(config.files.size(), window, args.rate_threshold);
    const RateEstimates rates = estimate_rates(estimator, arrivals, end);
    io::CsvWriter triggers(args.out_dir / "rate_triggers.csv");
    triggers.row({"file_id", "time", "previous_rate", "current_rate"});
    for (const auto& t : rates.triggers) {
      triggers.field(t.file_id).field(t.time).field(t.previous_rate).field(t.current_rate).end_row();
    }
    return kOk;
  });
}

int cmd_verify_mds(const VerifyMdsArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (args.n < 1 || args.k < 1) throw UsageError("--n and --k must be positive");
    if (args.n + args.k > kMaxCodeLength) throw UsageError("n + k must not exceed 256");
    if (args.budget == 0) throw UsageError("--budget must be positive");
    const GeneratorMatrix generator = make_generator(args.n, args.k);
    const MdsReport report = verify_mds(generator, args.budget, args.seed);
    out << "subsets_checked=" << report.subsets_checked << " failures=" << report.failures
        << " mode=" << (report.exhaustive ? "exhaustive" : "sampled") << '\n';
    return report.failures == 0 ? kOk : kMdsFailure;
  });
}

int cmd_bound(const BoundArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_input(args.config, "--config");
    require_input(args.plan, "--plan");
    require_output(args.out, "--out");
    const ScenarioConfig config = load_config(args.config);
    const WorkloadBin& bin = pick_bin(config, args.bin);
    const SchedulePlan plan = io::load_plan(args.plan);
    check_plan_shape(config, plan);

    const LatencyModel model(config, bin);
    const auto z = model.optimal_z(plan.pi);
    const auto bounds = model.file_bounds(plan.pi, z);
    double aggregate = 0.0;
    for (std::size_t i = 0; i < bounds.size(); ++i) aggregate += model.weights()[i] * bounds[i];

    io::CsvWriter csv(args.out);
    csv.row({"file_id", "U_i", "z_i", "d_i"});
    for (std::size_t i = 0; i < bounds.size(); ++i) {
      csv.field(static_cast<int>(i)).field(bounds[i]).field(z[i]).field(plan.d[i]).end_row();
    }
    csv.field(std::string("weighted")).field(aggregate).field(std::string()).field(std::string()).end_row();
    out << "aggregate=" << io::format_number(aggregate) << '\n';
    return kOk;
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Functional-cache latency optimizer and simulator for erasure-coded storage", "fcache"};
  app.require_subcommand(1);

  OptimizeArgs opt;
  auto* optimize_cmd = app.add_subcommand("optimize", "Optimize cache allocation and scheduling for one bin");
  optimize_cmd->add_option("--config", opt.config, "Scenario JSON")->required();
  optimize_cmd->add_option("--bin", opt.bin, "Bin index");
  optimize_cmd->add_option("--epsilon", opt.epsilon, "Outer-loop improvement tolerance");
  optimize_cmd->add_option("--batch-fraction", opt.batch_fraction, "Fraction of fractional files pinned per pass");
  optimize_cmd->add_option("--warm-start", opt.warm_start, "Plan JSON to start from");
  optimize_cmd->add_option("--out", opt.out, "Plan JSON output")->required();
  optimize_cmd->add_option("--trace", opt.trace, "Convergence CSV (default: <out>.convergence.csv)");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep-cache", "Optimize over a list of cache sizes with warm starts");
  sweep_cmd->add_option("--config", sweep.config, "Scenario JSON")->required();
  sweep_cmd->add_option("--bin", sweep.bin, "Bin index");
  sweep_cmd->add_option("--cache-sizes", sweep.cache_sizes, "Comma-separated cache sizes in chunks")
      ->required()->delimiter(',');
  sweep_cmd->add_option("--epsilon", sweep.epsilon, "Outer-loop improvement tolerance");
  sweep_cmd->add_option("--batch-fraction", sweep.batch_fraction, "Fraction of fractional files pinned per pass");
  sweep_cmd->add_option("--out", sweep.out, "CSV output")->required();

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Discrete-event simulation of one bin under a plan");
  simulate_cmd->add_option("--config", sim.config, "Scenario JSON")->required();
  simulate_cmd->add_option("--plan", sim.plan, "Plan JSON")->required();
  simulate_cmd->add_option("--bin", sim.bin, "Bin index");
  simulate_cmd->add_option("--duration", sim.duration, "Simulated time")->required();
  simulate_cmd->add_option("--warmup", sim.warmup, "Warmup time (default: 10% of duration)");
  simulate_cmd->add_option("--seed", sim.seed, "Random seed");
  simulate_cmd->add_option("--slot-length", sim.slot_length, "Chunk-source slot length (default: duration / 20)");
  simulate_cmd->add_option("--out", sim.out, "Per-file results CSV")->required();
  simulate_cmd->add_option("--slots", sim.slots, "Chunk-source CSV (default: <out>.slots.csv)");

  EvolveArgs evo;
  auto* evolve_cmd = app.add_subcommand("evolve", "Optimize and simulate every bin with lazy cache transitions");
  evolve_cmd->add_option("--config", evo.config, "Scenario JSON with at least two bins")->required();
  evolve_cmd->add_option("--seed", evo.seed, "Random seed");
  evolve_cmd->add_option("--epsilon", evo.epsilon, "Outer-loop improvement tolerance");
  evolve_cmd->add_option("--batch-fraction", evo.batch_fraction, "Fraction of fractional files pinned per pass");
  evolve_cmd->add_option("--rate-window", evo.rate_window, "Sliding window for rate detection");
  evolve_cmd->add_option("--rate-threshold", evo.rate_threshold, "Relative rate change that triggers a new bin");
  evolve_cmd->add_option("--out-dir", evo.out_dir, "Output directory")->required();

  VerifyMdsArgs mds;
  auto* mds_cmd = app.add_subcommand("verify-mds", "Check that every k chunks of the (n+k, k) code decode");
  mds_cmd->add_option("--n", mds.n, "Server chunks")->required();
  mds_cmd->add_option("--k", mds.k, "Recovery threshold")->required();
  mds_cmd->add_option("--budget", mds.budget, "Maximum subsets to decode");
  mds_cmd->add_option("--seed", mds.seed, "Random seed");

  BoundArgs bnd;
  auto* bound_cmd = app.add_subcommand("bound", "Evaluate the per-file latency bound of a plan");
  bound_cmd->add_option("--config", bnd.config, "Scenario JSON")->required();
  bound_cmd->add_option("--plan", bnd.plan, "Plan JSON")->required();
  bound_cmd->add_option("--bin", bnd.bin, "Bin index");
  bound_cmd->add_option("--out", bnd.out, "CSV output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << '\n';
    return kValidation;
  }

  if (optimize_cmd->parsed()) return cmd_optimize(opt, out, err);
  if (sweep_cmd->parsed()) return cmd_sweep_cache(sweep, out, err);
  if (simulate_cmd->parsed()) return cmd_simulate(sim, out, err);
  if (evolve_cmd->parsed()) return cmd_evolve(evo, out, err);
  if (mds_cmd->parsed()) return cmd_verify_mds(mds, out, err);
  if (bound_cmd->parsed()) return cmd_bound(bnd, out, err);
  return kValidation;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"fcache"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace fcache::cli
