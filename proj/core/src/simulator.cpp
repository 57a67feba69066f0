// Copyright 2026 The fcache Authors.
// SPDX-License-Identifier: Apache-2.0

#include "fcache/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>

namespace fcache {

AccessSet sample_access_set(std::span<const double> pi_row, int target_size, Rng& rng, int file_id) {
  double sum = 0.0;
  for (double p : pi_row) sum += std::clamp(p, 0.0, 1.0);
  if (std::abs(sum - target_size) > 1e-9 * std::max(1.0, static_cast<double>(target_size))) {
    throw std::invalid_argument("access-set row sums to " + std::to_string(sum) + ", expected " +
                                std::to_string(target_size));
  }
  AccessSet set{file_id, {}};
  if (target_size == 0) return set;
  set.nodes.reserve(static_cast<std::size_t>(target_size));

  // Cumulative sums are rescaled so the last one is exactly target_size; every
  // point u + q with q < target_size then lands in some interval.
  const double scale = target_size / sum;
  std::size_t last = 0;
  for (std::size_t j = 0; j < pi_row.size(); ++j) {
    if (pi_row[j] > 0.0) last = j;
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double point = unit(rng);
  double cum = 0.0;
  for (std::size_t j = 0; j < pi_row.size() && static_cast<int>(set.nodes.size()) < target_size; ++j) {
    const double p = std::clamp(pi_row[j], 0.0, 1.0) * scale;
    if (p <= 0.0) continue;
    cum = j == last ? static_cast<double>(target_size) : cum + p;
    if (point < cum) {
      set.nodes.push_back(static_cast<int>(j));
      point += 1.0;
    }
  }
  return set;
}

double sample_service(const ServiceDistributionSpec& spec, Rng& rng) {
  switch (spec.family) {
    case ServiceFamily::exponential:
      return std::exponential_distribution<double>(spec.rate)(rng);
    case ServiceFamily::deterministic:
      return spec.value;
    case ServiceFamily::shifted_exponential:
      return spec.shift + std::exponential_distribution<double>(spec.rate)(rng);
    case ServiceFamily::lognormal: {
      const double sigma2 = std::log1p(spec.variance / (spec.mean * spec.mean));
      const double mu = std::log(spec.mean) - 0.5 * sigma2;
      return std::lognormal_distribution<double>(mu, std::sqrt(sigma2))(rng);
    }
    case ServiceFamily::empirical: {
      std::uniform_int_distribution<std::size_t> pick(0, spec.samples.size() - 1);
      return spec.samples[pick(rng)];
    }
  }
  return 0.0;
}

void rescale_row(std::span<double> row, std::span<const int> support, double target) {
  std::vector<double> v;
  v.reserve(support.size());
  double sum = 0.0;
  for (int j : support) {
    v.push_back(std::max(0.0, row[static_cast<std::size_t>(j)]));
    sum += v.back();
  }
  if (target <= 0.0 || support.empty()) {
    for (int j : support) row[static_cast<std::size_t>(j)] = 0.0;
    return;
  }
  if (sum <= 0.0) {
    std::fill(v.begin(), v.end(), 1.0);
    sum = static_cast<double>(v.size());
  }
  for (double& x : v) x *= target / sum;
  std::vector<bool> capped(v.size(), false);
  for (std::size_t round = 0; round <= v.size(); ++round) {
    double excess = 0.0, free_mass = 0.0;
    std::size_t free_count = 0;
    for (std::size_t s = 0; s < v.size(); ++s) {
      if (v[s] > 1.0) {
        excess += v[s] - 1.0;
        v[s] = 1.0;
        capped[s] = true;
      }
    }
    if (excess <= 0.0) break;
    for (std::size_t s = 0; s < v.size(); ++s) {
      if (!capped[s]) {
        free_mass += v[s];
        ++free_count;
      }
    }
    if (free_count == 0) break;
    for (std::size_t s = 0; s < v.size(); ++s) {
      if (capped[s]) continue;
      v[s] += free_mass > 0.0 ? excess * v[s] / free_mass : excess / static_cast<double>(free_count);
    }
  }
  for (std::size_t s = 0; s < support.size(); ++s) row[static_cast<std::size_t>(support[s])] = v[s];
}

namespace {

struct Accumulator {
  double sum = 0.0;
  long count = 0;
  std::vector<double> batch_sum;
  std::vector<long> batch_count;

  explicit Accumulator(int batches = 0) : batch_sum(static_cast<std::size_t>(batches), 0.0),
                                          batch_count(static_cast<std::size_t>(batches), 0) {}

  void add(double x, int batch) {
    sum += x;
    ++count;
    batch_sum[static_cast<std::size_t>(batch)] += x;
    ++batch_count[static_cast<std::size_t>(batch)];
  }

  double mean() const { return count > 0 ? sum / static_cast<double>(count) : 0.0; }

  // Batch-means standard error over the non-empty batches.
  double std_error() const {
    std::vector<double> means;
    for (std::size_t b = 0; b < batch_sum.size(); ++b) {
      if (batch_count[b] > 0) means.push_back(batch_sum[b] / static_cast<double>(batch_count[b]));
    }
    if (means.size() < 2) return 0.0;
    const double mu = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
    double ss = 0.0;
    for (double x : means) ss += (x - mu) * (x - mu);
    const auto nb = static_cast<double>(means.size());
    return std::sqrt(ss / (nb - 1.0) / nb);
  }
};

struct BinStats {
  double start = 0.0;
  double measure_start = 0.0;
  double end = 0.0;
  double slot_length = 0.0;
  std::vector<Accumulator> files;
  Accumulator aggregate;
  std::vector<Accumulator> nodes;
  std::vector<double> busy;
  std::vector<SlotCounts> slots;
  long enqueued = 0;
  long completed = 0;
  long mismatches = 0;
  std::vector<RequestRecord> requests;
  std::vector<ArrivalRecord> arrivals;
};

struct Request {
  int file = 0;
  int bin = 0;
  double arrival = 0.0;
  double finish = 0.0;
  int outstanding = 0;
  int cached = 0;
  bool measured = false;
  int batch = 0;
  std::vector<std::pair<int, double>> sojourns;
};

struct Job {
  std::size_t request = 0;
  double enqueued = 0.0;
};

enum class Phase { arrival, boundary };

class Engine {
 public:
  Engine(const ScenarioConfig& config, std::span<const SchedulePlan> plans,
         std::span<const WorkloadBin> bins, std::span<const double> durations, const SimOptions& options)
      : config_(config), plans_(plans), bins_(bins), options_(options), rng_(options.seed) {
    const std::size_t r = config.files.size();
    const std::size_t m = config.nodes.size();
    queues_.resize(m);
    busy_.assign(m, false);
    d_eff_.assign(r, 0);
    pending_.assign(r, -1);
    rows_ = Matrix(r, m, 0.0);

    double t = 0.0;
    for (std::size_t b = 0; b < bins.size(); ++b) {
      BinStats s;
      s.start = t;
      s.end = t + durations[b];
      double warm = 0.0;
      if (b == 0) warm = options.warmup < 0.0 ? 0.1 * durations[b] : options.warmup;
      s.measure_start = std::min(s.end, s.start + warm);
      s.slot_length = options.slot_length > 0.0 ? options.slot_length : durations[b] / 20.0;
      s.files.assign(r, Accumulator(options.batches));
      s.aggregate = Accumulator(options.batches);
      s.nodes.assign(m, Accumulator(options.batches));
      s.busy.assign(m, 0.0);
      const auto nslots = static_cast<int>(std::ceil(durations[b] / s.slot_length - 1e-9));
      for (int k = 0; k < std::max(nslots, 1); ++k) s.slots.push_back({k, 0, 0});
      stats_.push_back(std::move(s));
      t = stats_.back().end;
    }
  }

  MultiBinResult run() {
    enter_bin(0, 0.0);
    schedule_next_arrival(0.0);
    while (!events_.empty()) {
      const SimEvent ev = events_.top();
      events_.pop();
      if (ev.kind == EventKind::completion) {
        complete(static_cast<std::size_t>(ev.id), ev.time);
      } else if (phase_ == Phase::boundary) {
        const std::size_t next = current_ + 1;
        enter_bin(next, ev.time);
        schedule_next_arrival(ev.time);
      } else {
        arrive(ev.time);
        schedule_next_arrival(ev.time);
      }
    }
    return finish();
  }

 private:
  void push(double time, EventKind kind, int id) { events_.push({time, kind, id, seq_++}); }

  void enter_bin(std::size_t b, double time) {
    current_ = b;
    const SchedulePlan& plan = plans_[b];
    const WorkloadBin& bin = bins_[b];
    total_rate_ = bin.total_rate();
    if (total_rate_ > 0.0) chooser_ = std::discrete_distribution<int>(bin.arrival_rates.begin(), bin.arrival_rates.end());

    for (std::size_t i = 0; i < config_.files.size(); ++i) {
      const int d_new = plan.d[i];
      pending_[i] = -1;
      if (b == 0) {
        d_eff_[i] = d_new;
      } else if (d_new < d_eff_[i]) {
        transitions_.push_back({bin.id, static_cast<int>(i), time, d_eff_[i], d_new, TransitionKind::shrink});
        d_eff_[i] = d_new;
      } else if (d_new > d_eff_[i]) {
        pending_[i] = d_new;
      }
      refresh_row(i);
    }
  }

  void refresh_row(std::size_t i) {
    const auto& f = config_.files[i];
    const SchedulePlan& plan = plans_[current_];
    auto row = rows_.row(i);
    auto src = plan.pi.row(i);
    std::copy(src.begin(), src.end(), row.begin());
    if (d_eff_[i] != plan.d[i]) rescale_row(row, f.placement, f.k - d_eff_[i]);
  }

  void schedule_next_arrival(double now) {
    const BinStats& s = stats_[current_];
    double next = s.end;
    if (total_rate_ > 0.0) next = now + std::exponential_distribution<double>(total_rate_)(rng_);
    if (next < s.end) {
      phase_ = Phase::arrival;
      push(next, EventKind::arrival, 0);
    } else if (current_ + 1 < stats_.size()) {
      phase_ = Phase::boundary;
      push(s.end, EventKind::arrival, 0);
    }
  }

  void arrive(double t) {
    const int file = chooser_(rng_);
    const auto fi = static_cast<std::size_t>(file);
    const auto& f = config_.files[fi];
    BinStats& s = stats_[current_];

    Request req;
    req.file = file;
    req.bin = static_cast<int>(current_);
    req.arrival = t;
    req.finish = t;
    req.cached = d_eff_[fi];
    req.measured = t >= s.measure_start;
    if (req.measured) {
      const double span = (s.end - s.measure_start) / options_.batches;
      req.batch = std::clamp(static_cast<int>((t - s.measure_start) / span), 0, options_.batches - 1);
    }
    if (options_.record_arrivals) s.arrivals.push_back({file, t});

    const AccessSet set = sample_access_set(rows_.row(fi), f.k - req.cached, rng_, file);
    if (static_cast<int>(set.nodes.size()) != f.k - req.cached) ++s.mismatches;
    const auto slot = std::min<std::size_t>(static_cast<std::size_t>((t - s.start) / s.slot_length), s.slots.size() - 1);
    s.slots[slot].from_cache += req.cached;
    s.slots[slot].from_storage += static_cast<long>(set.nodes.size());
    if (req.cached > 0) req.finish = t + options_.cache_delay;

    const std::size_t id = requests_.size();
    req.outstanding = static_cast<int>(set.nodes.size());
    requests_.push_back(std::move(req));
    for (int j : set.nodes) {
      const auto nj = static_cast<std::size_t>(j);
      queues_[nj].push_back({id, t});
      ++s.enqueued;
      if (!busy_[nj]) start_service(nj, t);
    }
    if (requests_[id].outstanding == 0) finalize(id);

    // Lazy cache growth: this request used the old d; later ones see the new d.
    if (pending_[fi] >= 0) {
      transitions_.push_back({bins_[current_].id, file, t, d_eff_[fi], pending_[fi], TransitionKind::grow});
      d_eff_[fi] = pending_[fi];
      pending_[fi] = -1;
      refresh_row(fi);
    }
  }

  void start_service(std::size_t node, double t) {
    busy_[node] = true;
    const double service = sample_service(config_.nodes[node].service, rng_);
    const Request& req = requests_[queues_[node].front().request];
    if (req.measured) stats_[static_cast<std::size_t>(req.bin)].busy[node] += service;
    push(t + service, EventKind::completion, static_cast<int>(node));
  }

  void complete(std::size_t node, double t) {
    const Job job = queues_[node].front();
    queues_[node].pop_front();
    Request& req = requests_[job.request];
    BinStats& s = stats_[static_cast<std::size_t>(req.bin)];
    const double sojourn = t - job.enqueued;
    ++s.completed;
    if (req.measured) s.nodes[node].add(sojourn, req.batch);
    if (options_.record_requests && req.measured) req.sojourns.emplace_back(static_cast<int>(node), sojourn);
    req.finish = std::max(req.finish, t);
    if (--req.outstanding == 0) finalize(job.request);
    busy_[node] = false;
    if (!queues_[node].empty()) start_service(node, t);
  }

  void finalize(std::size_t id) {
    Request& req = requests_[id];
    if (!req.measured) return;
    BinStats& s = stats_[static_cast<std::size_t>(req.bin)];
    const double latency = req.finish - req.arrival;
    s.files[static_cast<std::size_t>(req.file)].add(latency, req.batch);
    s.aggregate.add(latency, req.batch);
    if (options_.record_requests) {
      s.requests.push_back({req.file, req.arrival, latency, req.cached, std::move(req.sojourns)});
    }
  }

  MultiBinResult finish() {
    MultiBinResult out;
    out.transitions = std::move(transitions_);
    for (std::size_t b = 0; b < stats_.size(); ++b) {
      BinStats& s = stats_[b];
      SimReport rep;
      rep.bin_id = bins_[b].id;
      for (std::size_t i = 0; i < s.files.size(); ++i) {
        const auto& a = s.files[i];
        rep.files.push_back({static_cast<int>(i), a.mean(), a.std_error(), a.count});
      }
      rep.aggregate_mean = s.aggregate.mean();
      rep.aggregate_std_error = s.aggregate.std_error();
      rep.measured_requests = s.aggregate.count;
      const double window = s.end - s.measure_start;
      for (std::size_t j = 0; j < s.nodes.size(); ++j) {
        const auto& a = s.nodes[j];
        rep.nodes.push_back({window > 0.0 ? s.busy[j] / window : 0.0, a.mean(), a.std_error(), a.count});
      }
      rep.slots = std::move(s.slots);
      rep.chunks_enqueued = s.enqueued;
      rep.chunks_completed = s.completed;
      rep.chunks_in_flight = s.enqueued - s.completed;
      rep.storage_chunk_mismatches = s.mismatches;
      rep.requests = std::move(s.requests);
      rep.arrivals = std::move(s.arrivals);
      out.reports.push_back(std::move(rep));
    }
    return out;
  }

  const ScenarioConfig& config_;
  std::span<const SchedulePlan> plans_;
  std::span<const WorkloadBin> bins_;
  SimOptions options_;
  Rng rng_;

  std::priority_queue<SimEvent, std::vector<SimEvent>, std::greater<>> events_;
  std::uint64_t seq_ = 0;
  std::vector<std::deque<Job>> queues_;
  std::vector<bool> busy_;
  std::vector<Request> requests_;
  std::vector<int> d_eff_;
  std::vector<int> pending_;
  Matrix rows_;
  std::vector<BinStats> stats_;
  std::vector<TransitionEvent> transitions_;
  std::size_t current_ = 0;
  double total_rate_ = 0.0;
  std::discrete_distribution<int> chooser_;
  Phase phase_ = Phase::arrival;
};

void check_plan(const ScenarioConfig& config, const SchedulePlan& plan, const WorkloadBin& bin) {
  const std::size_t r = config.files.size();
  const std::size_t m = config.nodes.size();
  if (plan.pi.rows() != r || plan.pi.cols() != m || plan.d.size() != r) {
    throw std::invalid_argument("plan dimensions do not match the scenario");
  }
  for (std::size_t i = 0; i < r; ++i) {
    const auto& f = config.files[i];
    if (plan.d[i] < 0 || plan.d[i] > f.k) throw std::invalid_argument("plan d out of range for file " + std::to_string(i));
    const double sum = plan.pi.row_sum(i);
    if (std::abs(sum - (f.k - plan.d[i])) > 1e-6) {
      throw std::invalid_argument("plan row " + std::to_string(i) + " does not sum to k - d");
    }
  }
  const LoadProfile load = load_profile(plan.pi, bin, config.nodes);
  for (std::size_t j = 0; j < m; ++j) {
    if (!(load.rho[j] < 1.0)) throw UnstableError(static_cast<int>(j), load.rho[j]);
  }
}

}  // namespace

SimReport run(const ScenarioConfig& config, const SchedulePlan& plan, const WorkloadBin& bin,
              const SimOptions& options) {
  if (!(options.duration > 0.0)) throw std::invalid_argument("simulation duration must be positive");
  check_plan(config, plan, bin);
  const double duration = options.duration;
  Engine engine(config, std::span(&plan, 1), std::span(&bin, 1), std::span(&duration, 1), options);
  return std::move(engine.run().reports.front());
}

MultiBinResult run_multibin(const ScenarioConfig& config, std::span<const SchedulePlan> plans,
                            const SimOptions& options) {
  if (plans.size() != config.bins.size()) throw std::invalid_argument("need one plan per bin");
  std::vector<double> durations;
  for (std::size_t b = 0; b < plans.size(); ++b) {
    check_plan(config, plans[b], config.bins[b]);
    durations.push_back(config.bins[b].duration);
  }
  Engine engine(config, plans, config.bins, durations, options);
  return engine.run();
}

RateEstimator::RateEstimator(std::size_t files, double window, double threshold, int min_events, double step)
    : window_(window),
      threshold_(threshold),
      min_events_(min_events),
      step_(step > 0.0 ? step : window),
      floor_rate_(min_events / window),
      next_eval_(step > 0.0 ? step : window),
      stamps_(files),
      head_(files, 0),
      rates_(files, 0.0) {
  if (!(window > 0.0)) throw std::invalid_argument("rate window must be positive");
}

void RateEstimator::observe(int file_id, double time) {
  while (next_eval_ < time) {
    evaluate(next_eval_);
    next_eval_ += step_;
  }
  stamps_[static_cast<std::size_t>(file_id)].push_back(time);
}

void RateEstimator::advance_to(double time) {
  while (next_eval_ <= time) {
    evaluate(next_eval_);
    next_eval_ += step_;
  }
}

void RateEstimator::evaluate(double at) {
  for (std::size_t i = 0; i < stamps_.size(); ++i) {
    auto& s = stamps_[i];
    auto& h = head_[i];
    while (h < s.size() && s[h] <= at - 2.0 * window_) ++h;
    if (h > 4096 && h * 2 > s.size()) {
      s.erase(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(h));
      h = 0;
    }
    long now = 0, prev = 0;
    for (std::size_t e = h; e < s.size() && s[e] <= at; ++e) (s[e] > at - window_ ? now : prev) += 1;
    const double r_now = static_cast<double>(now) / window_;
    const double r_prev = static_cast<double>(prev) / window_;
    rates_[i] = r_now;
    if (at + 1e-12 < 2.0 * window_) continue;
    if (now < min_events_ || prev < min_events_) continue;
    if (std::abs(r_now - r_prev) / std::max(r_prev, floor_rate_) > threshold_) {
      triggers_.push_back({static_cast<int>(i), at, r_prev, r_now});
    }
  }
}

RateEstimates estimate_rates(RateEstimator& estimator, std::span<const ArrivalRecord> events, double end_time) {
  for (const auto& e : events) estimator.observe(e.file_id, e.time);
  estimator.advance_to(end_time);
  return {estimator.rates(), estimator.triggers()};
}

}  // namespace fcache
