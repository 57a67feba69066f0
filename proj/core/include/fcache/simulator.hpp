// Copyright 2026 The fcache Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "fcache/latency.hpp"
#include "fcache/model.hpp"

namespace fcache {

using Rng = std::mt19937_64;

struct AccessSet {
  int file_id = 0;
  std::vector<int> nodes;  // ascending node ids
};

/// Madow systematic sampling: one uniform offset u, and node j is chosen iff
/// some point u + q (q = 0, 1, ...) falls in [cum_{j-1}, cum_j). Inclusion
/// probability of node j is exactly pi_row[j]. Throws std::invalid_argument
/// when the row sum is not `target_size` within 1e-9.
AccessSet sample_access_set(std::span<const double> pi_row, int target_size, Rng& rng, int file_id = 0);

/// Draws one service time.
double sample_service(const ServiceDistributionSpec& spec, Rng& rng);

enum class EventKind { completion = 0, arrival = 1 };

/// Heap entry of the event loop. Completions precede arrivals at equal
/// timestamps, then lower ids, then insertion order.
struct SimEvent {
  double time = 0.0;
  EventKind kind = EventKind::arrival;
  int id = 0;  // node id for completions, unused for arrivals
  std::uint64_t seq = 0;

  friend bool operator>(const SimEvent& a, const SimEvent& b) {
    if (a.time != b.time) return a.time > b.time;
    if (a.kind != b.kind) return static_cast<int>(a.kind) > static_cast<int>(b.kind);
    if (a.id != b.id) return a.id > b.id;
    return a.seq > b.seq;
  }
};

struct SimOptions {
  double duration = 0.0;    // only used by run(); run_multibin uses bin durations
  double warmup = -1.0;     // negative: 10% of the first bin
  std::uint64_t seed = 1;
  double cache_delay = 0.0;
  int batches = 20;
  double slot_length = 0.0;  // chunk-source slot; 0: bin duration / 20
  bool record_requests = false;
  bool record_arrivals = false;
};

struct FileLatency {
  int file_id = 0;
  double mean_latency = 0.0;
  double std_error = 0.0;
  long samples = 0;
};

struct NodeUsage {
  double utilization = 0.0;
  double mean_sojourn = 0.0;
  double sojourn_std_error = 0.0;
  long chunks = 0;
};

struct SlotCounts {
  int slot = 0;
  long from_cache = 0;
  long from_storage = 0;
};

/// One measured file request, kept only with SimOptions::record_requests.
struct RequestRecord {
  int file_id = 0;
  double arrival = 0.0;
  double latency = 0.0;
  int cached = 0;
  std::vector<std::pair<int, double>> node_sojourns;
};

struct ArrivalRecord {
  int file_id = 0;
  double time = 0.0;
};

struct SimReport {
  int bin_id = 0;
  std::vector<FileLatency> files;
  double aggregate_mean = 0.0;
  double aggregate_std_error = 0.0;
  long measured_requests = 0;
  std::vector<NodeUsage> nodes;
  std::vector<SlotCounts> slots;
  long chunks_enqueued = 0;
  long chunks_completed = 0;
  long chunks_in_flight = 0;
  long storage_chunk_mismatches = 0;  // requests whose storage chunk count != k - d_effective
  std::vector<RequestRecord> requests;
  std::vector<ArrivalRecord> arrivals;
};

enum class TransitionKind { shrink, grow, unchanged };

struct TransitionEvent {
  int bin_id = 0;
  int file_id = 0;
  double time = 0.0;
  int d_before = 0;
  int d_after = 0;
  TransitionKind kind = TransitionKind::unchanged;
};

struct MultiBinResult {
  std::vector<SimReport> reports;
  std::vector<TransitionEvent> transitions;
};

/// Simulates one bin for `options.duration` time units.
SimReport run(const ScenarioConfig& config, const SchedulePlan& plan, const WorkloadBin& bin,
              const SimOptions& options);

/// Simulates config.bins back to back, one plan per bin. Cache shrinks apply
/// at the boundary; growth waits for the file's first request in the new bin.
MultiBinResult run_multibin(const ScenarioConfig& config, std::span<const SchedulePlan> plans,
                            const SimOptions& options);

/// Rescales a scheduling row onto `target` chunks, capped at 1 per node with
/// the excess spread proportionally over the uncapped nodes.
void rescale_row(std::span<double> row, std::span<const int> support, double target);

/// Sliding-window arrival-rate detector.
class RateEstimator {
 public:
  RateEstimator(std::size_t files, double window, double threshold, int min_events = 10, double step = 0.0);

  struct Trigger {
    int file_id = 0;
    double time = 0.0;
    double previous_rate = 0.0;
    double current_rate = 0.0;
  };

  /// Events must arrive in non-decreasing time order.
  void observe(int file_id, double time);
  /// Evaluates every window boundary up to `time`.
  void advance_to(double time);

  const std::vector<double>& rates() const { return rates_; }
  const std::vector<Trigger>& triggers() const { return triggers_; }
  double window() const { return window_; }

 private:
  void evaluate(double at);

  double window_;
  double threshold_;
  int min_events_;
  double step_;
  double floor_rate_;
  double next_eval_;
  std::vector<std::vector<double>> stamps_;  // per file, pruned to the last two windows
  std::vector<std::size_t> head_;
  std::vector<double> rates_;
  std::vector<Trigger> triggers_;
};

struct RateEstimates {
  std::vector<double> rates;
  std::vector<RateEstimator::Trigger> triggers;
};

RateEstimates estimate_rates(RateEstimator& estimator, std::span<const ArrivalRecord> events, double end_time);

}  // namespace fcache
