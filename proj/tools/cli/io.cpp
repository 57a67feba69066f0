// Copyright 2026 The fcache Authors.
// SPDX-License-Identifier: Apache-2.0

#include "io.hpp"

#include <charconv>
#include <fstream>
#include <memory>

namespace fcache::io {

using nlohmann::json;

namespace {

json service_to_json(const ServiceDistributionSpec& s) {
  json j = {{"family", to_string(s.family)}};
  switch (s.family) {
    case ServiceFamily::exponential: j["rate"] = s.rate; break;
    case ServiceFamily::deterministic: j["value"] = s.value; break;
    case ServiceFamily::shifted_exponential:
      j["shift"] = s.shift;
      j["rate"] = s.rate;
      break;
    case ServiceFamily::lognormal:
      j["mean"] = s.mean;
      j["variance"] = s.variance;
      break;
    case ServiceFamily::empirical: j["samples"] = s.samples; break;
  }
  return j;
}

ServiceDistributionSpec service_from_json(const json& j) {
  const auto family = service_family_from_string(j.at("family").get<std::string>());
  switch (family) {
    case ServiceFamily::exponential: return ServiceDistributionSpec::exponential(j.at("rate").get<double>());
    case ServiceFamily::deterministic: return ServiceDistributionSpec::deterministic(j.at("value").get<double>());
    case ServiceFamily::shifted_exponential:
      return ServiceDistributionSpec::shifted_exponential(j.at("shift").get<double>(), j.at("rate").get<double>());
    case ServiceFamily::lognormal:
      return ServiceDistributionSpec::lognormal(j.at("mean").get<double>(), j.at("variance").get<double>());
    case ServiceFamily::empirical:
      return ServiceDistributionSpec::empirical(j.at("samples").get<std::vector<double>>());
  }
  throw FormatError("unknown service family");
}

void check_version(const json& j, const char* what) {
  if (!j.is_object()) throw FormatError(std::string(what) + ": top level must be an object");
  const int version = j.value("version", -1);
  if (version != kFormatVersion) {
    throw FormatError(std::string(what) + ": unsupported version " + std::to_string(version));
  }
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

json to_json(const ScenarioConfig& config) {
  json nodes = json::array();
  for (const auto& n : config.nodes) nodes.push_back({{"id", n.id}, {"service", service_to_json(n.service)}});
  json files = json::array();
  for (const auto& f : config.files) {
    files.push_back({{"id", f.id}, {"n", f.n}, {"k", f.k}, {"placement", f.placement}, {"size_bytes", f.size_bytes}});
  }
  json bins = json::array();
  for (const auto& b : config.bins) {
    bins.push_back({{"id", b.id}, {"duration", b.duration}, {"arrival_rates", b.arrival_rates}});
  }
  return {{"version", kFormatVersion},
          {"time_unit", config.time_unit},
          {"cache_capacity", config.cache_capacity},
          {"nodes", nodes},
          {"files", files},
          {"bins", bins}};
}

ScenarioConfig scenario_from_json(const json& j) {
  check_version(j, "scenario");
  try {
    ScenarioConfig c;
    c.time_unit = j.value("time_unit", std::string("s"));
    c.cache_capacity = j.at("cache_capacity").get<long>();
    for (const auto& n : j.at("nodes")) c.nodes.push_back({n.at("id").get<int>(), service_from_json(n.at("service"))});
    for (const auto& f : j.at("files")) {
      FileSpec spec;
      spec.id = f.at("id").get<int>();
      spec.n = f.at("n").get<int>();
      spec.k = f.at("k").get<int>();
      spec.placement = f.at("placement").get<std::vector<int>>();
      spec.size_bytes = f.value("size_bytes", std::uint64_t{0});
      c.files.push_back(std::move(spec));
    }
    for (const auto& b : j.at("bins")) {
      c.bins.push_back({b.at("id").get<int>(), b.at("duration").get<double>(),
                        b.at("arrival_rates").get<std::vector<double>>()});
    }
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("scenario: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("scenario: ") + e.what());
  }
}

json to_json(const SchedulePlan& plan, int bin_index) {
  json pi = json::array();
  for (std::size_t i = 0; i < plan.pi.rows(); ++i) {
    auto row = plan.pi.row(i);
    pi.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return {{"version", kFormatVersion}, {"bin", bin_index}, {"objective", plan.objective},
          {"pi", pi}, {"d", plan.d}, {"z", plan.z}};
}

SchedulePlan plan_from_json(const json& j) {
  check_version(j, "plan");
  try {
    SchedulePlan plan;
    const auto rows = j.at("pi").get<std::vector<std::vector<double>>>();
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    plan.pi = Matrix(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != cols) throw FormatError("plan: ragged pi matrix");
      std::copy(rows[i].begin(), rows[i].end(), plan.pi.row(i).begin());
    }
    plan.d = j.at("d").get<std::vector<int>>();
    plan.z = j.at("z").get<std::vector<double>>();
    plan.objective = j.value("objective", 0.0);
    if (plan.d.size() != rows.size() || plan.z.size() != rows.size()) {
      throw FormatError("plan: d and z need one entry per pi row");
    }
    return plan;
  } catch (const json::exception& e) {
    throw FormatError(std::string("plan: ") + e.what());
  }
}

ScenarioConfig load_scenario(const std::filesystem::path& path) { return scenario_from_json(read_json(path)); }

void save_scenario(const ScenarioConfig& config, const std::filesystem::path& path) {
  write_json(to_json(config), path);
}

SchedulePlan load_plan(const std::filesystem::path& path) { return plan_from_json(read_json(path)); }

void save_plan(const SchedulePlan& plan, int bin_index, const std::filesystem::path& path) {
  write_json(to_json(plan, bin_index), path);
}

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : out_(std::make_unique<std::ofstream>(path, std::ios::binary)) {
  if (!*out_) throw FormatError("cannot write " + path.string());
}

CsvWriter& CsvWriter::field(const std::string& text) {
  if (!first_) line_ += ',';
  first_ = false;
  if (text.find_first_of(",\"\r\n") == std::string::npos) {
    line_ += text;
  } else {
    line_ += '"';
    for (char c : text) {
      if (c == '"') line_ += '"';
      line_ += c;
    }
    line_ += '"';
  }
  return *this;
}

CsvWriter& CsvWriter::field(double value) { return field(format_number(value)); }

CsvWriter& CsvWriter::field(long value) { return field(std::to_string(value)); }

void CsvWriter::end_row() {
  *out_ << line_ << "\r\n";
  line_.clear();
  first_ = true;
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (const auto& f : fields) field(f);
  end_row();
}

}  // namespace fcache::io
