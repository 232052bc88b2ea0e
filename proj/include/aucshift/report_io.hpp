#pragma once

#include <map>
#include <string>
#include <vector>

#include "aucshift/error.hpp"
#include "aucshift/inference.hpp"
#include "aucshift/simlab.hpp"

namespace aucshift {

// Writes to a temporary sibling file, then renames into place, so readers
// never observe partial files and failures leave nothing behind.
void write_text_atomic(const std::string& path, const std::string& content);

// One estimator's result row for the estimate command: the report plus the
// point-estimate internals and estimator diagnostics.
struct EstimateRecord {
  EstimateReport report;
  PointEstimate point;
  std::map<std::string, double> diagnostics;
  std::string ci_kind;
};

std::string estimate_records_json(const std::vector<EstimateRecord>& records);
std::string comparison_json(const ComparisonReport& report, const std::string& ci_kind);

// Metrics summary (JSON), per-replication estimates/SEs (CSV; empty cell =
// unavailable), and a fixed-width text table of the metric columns.
// Execution parameters that do not affect values (e.g. thread count) are
// deliberately omitted so outputs are byte-identical across thread counts.
std::string scenario_json(const ScenarioResult& result);
std::string scenario_reps_csv(const ScenarioResult& result);
std::string scenario_table(const ScenarioResult& result);

std::string error_json(const Error& error);

}  // namespace aucshift
