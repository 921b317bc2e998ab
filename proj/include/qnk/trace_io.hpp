#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qnk/core.hpp"

namespace qnk {

struct TraceHeader {
  std::string method;
  std::string matrix_name;
  Index n = 0;
  std::optional<double> kappa_estimate;
  nlohmann::json config_echo = nlohmann::json::object();

  friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

/// On-disk form of a solve: header, final status, one row per iterate
/// (row count = iterations + 1, row 0 is the initial point).
struct TraceFile {
  TraceHeader header;
  SolveStatus status = SolveStatus::max_iterations;
  std::vector<TraceRecord<double>> records;

  friend bool operator==(const TraceFile&, const TraceFile&) = default;
};

enum class TraceFormat { json, csv };

TraceFormat trace_format_from_string(const std::string& s);

nlohmann::json trace_to_json(const TraceFile& trace);
TraceFile trace_from_json(const nlohmann::json& j);

void export_trace(const TraceFile& trace, TraceFormat format, const std::string& path);
TraceFile read_trace(TraceFormat format, const std::string& path);

}  // namespace qnk
