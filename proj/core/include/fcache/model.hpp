// Copyright 2026 The fcache Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fcache {

/// Dense row-major matrix of doubles. Rows are files, columns are nodes
/// wherever a scheduling matrix is involved.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  double row_sum(std::size_t r) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class ServiceFamily { exponential, deterministic, shifted_exponential, lognormal, empirical };

std::string to_string(ServiceFamily family);
ServiceFamily service_family_from_string(const std::string& name);

/// Chunk service-time distribution of one storage node. Only the fields used
/// by `family` are meaningful; build instances through the named factories.
struct ServiceDistributionSpec {
  ServiceFamily family = ServiceFamily::exponential;
  double rate = 0.0;      // exponential, shifted_exponential
  double value = 0.0;     // deterministic
  double shift = 0.0;     // shifted_exponential
  double mean = 0.0;      // lognormal
  double variance = 0.0;  // lognormal
  std::vector<double> samples;  // empirical

  static ServiceDistributionSpec exponential(double rate);
  static ServiceDistributionSpec deterministic(double value);
  static ServiceDistributionSpec shifted_exponential(double shift, double rate);
  static ServiceDistributionSpec lognormal(double mean, double variance);
  static ServiceDistributionSpec empirical(std::vector<double> samples);

  friend bool operator==(const ServiceDistributionSpec&, const ServiceDistributionSpec&) = default;
};

/// First three raw moments of a service time, plus its variance.
struct ServiceMoments {
  double mean = 0.0;
  double variance = 0.0;
  double second_moment = 0.0;
  double third_moment = 0.0;

  double rate() const { return 1.0 / mean; }
};

struct NodeSpec {
  int id = 0;
  ServiceDistributionSpec service;

  friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

struct FileSpec {
  int id = 0;
  int n = 0;
  int k = 0;
  std::vector<int> placement;  // S_i, |S_i| = n, in chunk order
  std::uint64_t size_bytes = 0;

  friend bool operator==(const FileSpec&, const FileSpec&) = default;
};

struct WorkloadBin {
  int id = 0;
  double duration = 0.0;
  std::vector<double> arrival_rates;  // one per file

  double total_rate() const;

  friend bool operator==(const WorkloadBin&, const WorkloadBin&) = default;
};

struct ScenarioConfig {
  std::vector<NodeSpec> nodes;
  std::vector<FileSpec> files;
  long cache_capacity = 0;  // C, in chunks
  std::vector<WorkloadBin> bins;
  std::string time_unit = "s";

  std::size_t node_count() const { return nodes.size(); }
  std::size_t file_count() const { return files.size(); }
  long total_k() const;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Per-node aggregate chunk arrival rate and utilization.
struct LoadProfile {
  std::vector<double> lambda_node;
  std::vector<double> rho;

  bool stable(double margin = 0.0) const;
  double max_rho() const;
};

/// Thrown by validate_scenario with every violated invariant.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

inline constexpr int kMaxCodeLength = 256;

/// Every violated invariant of `config`, one message per violation.
std::vector<std::string> scenario_violations(const ScenarioConfig& config);

/// Returns `config` unchanged when valid; throws ValidationError otherwise.
const ScenarioConfig& validate_scenario(const ScenarioConfig& config);

ServiceMoments moments_of(const ServiceDistributionSpec& spec);

/// Plug-in sample moments (population variance). Needs at least two samples.
ServiceMoments empirical_moments(std::span<const double> samples);

std::vector<ServiceMoments> node_moments(const ScenarioConfig& config);

/// Λ_j = Σ_i λ_i π_ij and ρ_j = Λ_j · E[X_j].
LoadProfile load_profile(const Matrix& pi, const WorkloadBin& bin,
                         std::span<const ServiceMoments> moments);
LoadProfile load_profile(const Matrix& pi, const WorkloadBin& bin,
                         const std::vector<NodeSpec>& nodes);

}  // namespace fcache
