// Copyright 2026 The fcache Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fcache/latency.hpp"
#include "fcache/model.hpp"

namespace fcache::io {

inline constexpr int kFormatVersion = 1;

/// Malformed or unreadable input file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json to_json(const ScenarioConfig& config);
ScenarioConfig scenario_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SchedulePlan& plan, int bin_index);
SchedulePlan plan_from_json(const nlohmann::json& j);

ScenarioConfig load_scenario(const std::filesystem::path& path);
void save_scenario(const ScenarioConfig& config, const std::filesystem::path& path);

SchedulePlan load_plan(const std::filesystem::path& path);
void save_plan(const SchedulePlan& plan, int bin_index, const std::filesystem::path& path);

/// Shortest decimal text that round-trips the double.
std::string format_number(double value);

/// RFC 4180 writer: CRLF line ends, fields quoted only when needed.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);

  CsvWriter& field(const std::string& text);
  CsvWriter& field(double value);
  CsvWriter& field(long value);
  CsvWriter& field(int value) { return field(static_cast<long>(value)); }
  void end_row();
  void row(const std::vector<std::string>& fields);

 private:
  std::string line_;
  bool first_ = true;
  std::unique_ptr<std::ofstream> out_;
};

}  // namespace fcache::io
