// Copyright 2026 The fcache Authors.
// SPDX-License-Identifier: Apache-2.0

#include "fcache/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fcache {

double Matrix::row_sum(std::size_t r) const {
  auto values = row(r);
  return std::accumulate(values.begin(), values.end(), 0.0);
}

std::string to_string(ServiceFamily family) {
  switch (family) {
    case ServiceFamily::exponential: return "exponential";
    case ServiceFamily::deterministic: return "deterministic";
    case ServiceFamily::shifted_exponential: return "shifted_exponential";
    case ServiceFamily::lognormal: return "lognormal";
    case ServiceFamily::empirical: return "empirical";
  }
  return "unknown";
}

ServiceFamily service_family_from_string(const std::string& name) {
  for (auto family : {ServiceFamily::exponential, ServiceFamily::deterministic,
                      ServiceFamily::shifted_exponential, ServiceFamily::lognormal,
                      ServiceFamily::empirical}) {
    if (to_string(family) == name) return family;
  }
  throw std::invalid_argument("unknown service family '" + name + "'");
}

namespace {

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

void check_service(const std::string& who, const ServiceDistributionSpec& s,
                   std::vector<std::string>& out) {
  auto bad = [&](const std::string& what) { out.push_back(who + ": " + what); };
  switch (s.family) {
    case ServiceFamily::exponential:
      if (!positive(s.rate)) bad("exponential rate must be positive");
      break;
    case ServiceFamily::deterministic:
      if (!positive(s.value)) bad("deterministic value must be positive");
      break;
    case ServiceFamily::shifted_exponential:
      if (!positive(s.rate)) bad("shifted-exponential rate must be positive");
      if (!std::isfinite(s.shift) || s.shift < 0.0) bad("shift must be non-negative");
      break;
    case ServiceFamily::lognormal:
      if (!positive(s.mean)) bad("lognormal mean must be positive");
      if (!positive(s.variance)) bad("lognormal variance must be positive");
      break;
    case ServiceFamily::empirical:
      if (s.samples.empty()) {
        bad("empirical sample list is empty");
      } else if (!std::all_of(s.samples.begin(), s.samples.end(), positive)) {
        bad("empirical samples must be positive");
      }
      break;
  }
}

ServiceDistributionSpec checked(ServiceDistributionSpec s) {
  std::vector<std::string> problems;
  check_service("service", s, problems);
  if (!problems.empty()) throw std::invalid_argument(problems.front());
  return s;
}

}  // namespace

ServiceDistributionSpec ServiceDistributionSpec::exponential(double rate) {
  ServiceDistributionSpec s;
  s.family = ServiceFamily::exponential;
  s.rate = rate;
  return checked(std::move(s));
}

ServiceDistributionSpec ServiceDistributionSpec::deterministic(double value) {
  ServiceDistributionSpec s;
  s.family = ServiceFamily::deterministic;
  s.value = value;
  return checked(std::move(s));
}

ServiceDistributionSpec ServiceDistributionSpec::shifted_exponential(double shift, double rate) {
  ServiceDistributionSpec s;
  s.family = ServiceFamily::shifted_exponential;
  s.shift = shift;
  s.rate = rate;
  return checked(std::move(s));
}

ServiceDistributionSpec ServiceDistributionSpec::lognormal(double mean, double variance) {
  ServiceDistributionSpec s;
  s.family = ServiceFamily::lognormal;
  s.mean = mean;
  s.variance = variance;
  return checked(std::move(s));
}

ServiceDistributionSpec ServiceDistributionSpec::empirical(std::vector<double> samples) {
  ServiceDistributionSpec s;
  s.family = ServiceFamily::empirical;
  s.samples = std::move(samples);
  return checked(std::move(s));
}

double WorkloadBin::total_rate() const {
  return std::accumulate(arrival_rates.begin(), arrival_rates.end(), 0.0);
}

long ScenarioConfig::total_k() const {
  long total = 0;
  for (const auto& f : files) total += f.k;
  return total;
}

bool LoadProfile::stable(double margin) const {
  return std::all_of(rho.begin(), rho.end(), [&](double r) { return r < 1.0 - margin; });
}

double LoadProfile::max_rho() const {
  return rho.empty() ? 0.0 : *std::max_element(rho.begin(), rho.end());
}

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "invalid scenario (" << violations.size() << " violation"
           << (violations.size() == 1 ? "" : "s") << ")";
        for (const auto& v : violations) os << "\n  " << v;
        return os.str();
      }()),
      violations_(std::move(violations)) {}


std::vector<std::string> scenario_violations(const ScenarioConfig& config) {
  std::vector<std::string> out;
  const auto m = static_cast<int>(config.nodes.size());

  if (config.nodes.empty()) out.push_back("scenario: no nodes declared");
  std::set<int> node_ids;
  for (std::size_t j = 0; j < config.nodes.size(); ++j) {
    const auto& node = config.nodes[j];
    const std::string who = "node " + std::to_string(node.id);
    if (node.id < 0 || node.id >= m) out.push_back(who + ": id outside 0..m-1");
    if (!node_ids.insert(node.id).second) out.push_back(who + ": duplicate node id");
    if (node.id != static_cast<int>(j)) out.push_back(who + ": nodes must be listed in id order");
    check_service(who, node.service, out);
  }

  if (config.files.empty()) out.push_back("scenario: no files declared");
  for (std::size_t i = 0; i < config.files.size(); ++i) {
    const auto& f = config.files[i];
    const std::string who = "file " + std::to_string(f.id);
    if (f.id != static_cast<int>(i)) out.push_back(who + ": files must be listed in id order");
    if (f.k < 1) out.push_back(who + ": k must be at least 1");
    if (f.k > f.n) out.push_back(who + ": k exceeds n");
    if (f.n > m) out.push_back(who + ": n exceeds node count");
    if (f.n + f.k > kMaxCodeLength) out.push_back(who + ": n + k exceeds 256");
    if (static_cast<int>(f.placement.size()) != f.n) out.push_back(who + ": placement size differs from n");
    std::set<int> seen;
    bool distinct = true;
    for (int node : f.placement) {
      if (node < 0 || node >= m) out.push_back(who + ": placement refers to undeclared node " + std::to_string(node));
      distinct = seen.insert(node).second && distinct;
    }
    if (!distinct) out.push_back(who + ": placement not distinct");
  }

  if (config.cache_capacity < 0) out.push_back("scenario: cache capacity must be non-negative");
  if (config.bins.empty()) out.push_back("scenario: at least one bin required");
  for (const auto& bin : config.bins) {
    const std::string who = "bin " + std::to_string(bin.id);
    if (!positive(bin.duration)) out.push_back(who + ": duration must be positive");
    if (bin.arrival_rates.size() != config.files.size()) out.push_back(who + ": needs one rate per file");
    for (double rate : bin.arrival_rates) {
      if (!std::isfinite(rate) || rate < 0.0) {
        out.push_back(who + ": arrival rates must be non-negative");
        break;
      }
    }
  }
  if (config.time_unit.empty()) out.push_back("scenario: time unit missing");
  return out;
}

const ScenarioConfig& validate_scenario(const ScenarioConfig& config) {
  auto violations = scenario_violations(config);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return config;
}

ServiceMoments empirical_moments(std::span<const double> samples) {
  if (samples.size() < 2) throw std::invalid_argument("empirical moments need at least two samples");
  double s1 = 0.0, s2 = 0.0, s3 = 0.0;
  for (double x : samples) {
    s1 += x;
    s2 += x * x;
    s3 += x * x * x;
  }
  const auto n = static_cast<double>(samples.size());
  ServiceMoments m;
  m.mean = s1 / n;
  m.second_moment = s2 / n;
  m.third_moment = s3 / n;
  m.variance = std::max(0.0, m.second_moment - m.mean * m.mean);
  if (!std::isfinite(m.mean) || !std::isfinite(m.second_moment) || !std::isfinite(m.third_moment)) {
    throw std::domain_error("empirical service samples produce non-finite moments");
  }
  return m;
}

ServiceMoments moments_of(const ServiceDistributionSpec& spec) {
  ServiceMoments m;
  switch (spec.family) {
    case ServiceFamily::exponential: {
      const double mean = 1.0 / spec.rate;
      m.mean = mean;
      m.variance = mean * mean;
      m.second_moment = 2.0 * mean * mean;
      m.third_moment = 6.0 * mean * mean * mean;
      break;
    }
    case ServiceFamily::deterministic: {
      const double v = spec.value;
      m = {v, 0.0, v * v, v * v * v};
      break;
    }
    case ServiceFamily::shifted_exponential: {
      // X = s + E with E ~ Exp(rate); expand E[(s + E)^p] with E[E^p] = p!/rate^p.
      const double s = spec.shift;
      const double e1 = 1.0 / spec.rate;
      const double e2 = 2.0 * e1 * e1;
      const double e3 = 6.0 * e1 * e1 * e1;
      m.mean = s + e1;
      m.variance = e1 * e1;
      m.second_moment = s * s + 2.0 * s * e1 + e2;
      m.third_moment = s * s * s + 3.0 * s * s * e1 + 3.0 * s * e2 + e3;
      break;
    }
    case ServiceFamily::lognormal: {
      const double sigma2 = std::log1p(spec.variance / (spec.mean * spec.mean));
      const double mu = std::log(spec.mean) - 0.5 * sigma2;
      m.mean = spec.mean;
      m.variance = spec.variance;
      m.second_moment = spec.variance + spec.mean * spec.mean;
      m.third_moment = std::exp(3.0 * mu + 4.5 * sigma2);
      break;
    }
    case ServiceFamily::empirical:
      m = empirical_moments(spec.samples);
      break;
  }
  if (!std::isfinite(m.third_moment) || !(m.mean > 0.0)) {
    throw std::domain_error("service distribution has non-finite moments");
  }
  return m;
}

std::vector<ServiceMoments> node_moments(const ScenarioConfig& config) {
  std::vector<ServiceMoments> out;
  out.reserve(config.nodes.size());
  for (const auto& node : config.nodes) out.push_back(moments_of(node.service));
  return out;
}

LoadProfile load_profile(const Matrix& pi, const WorkloadBin& bin,
                         std::span<const ServiceMoments> moments) {
  LoadProfile p;
  p.lambda_node.assign(pi.cols(), 0.0);
  p.rho.assign(pi.cols(), 0.0);
  for (std::size_t i = 0; i < pi.rows(); ++i) {
    const double lambda = bin.arrival_rates[i];
    if (lambda == 0.0) continue;
    for (std::size_t j = 0; j < pi.cols(); ++j) p.lambda_node[j] += lambda * pi(i, j);
  }
  for (std::size_t j = 0; j < pi.cols(); ++j) p.rho[j] = p.lambda_node[j] * moments[j].mean;
  return p;
}

LoadProfile load_profile(const Matrix& pi, const WorkloadBin& bin,
                         const std::vector<NodeSpec>& nodes) {
  std::vector<ServiceMoments> moments;
  moments.reserve(nodes.size());
  for (const auto& node : nodes) moments.push_back(moments_of(node.service));
  return load_profile(pi, bin, moments);
}

}  // namespace fcache
