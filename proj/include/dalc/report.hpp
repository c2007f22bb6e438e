#pragma once

#include <string>
#include <vector>

#include "dalc/data.hpp"
#include "dalc/jobs.hpp"
#include "dalc/serial.hpp"

namespace dalc {

struct ReportRow {
  std::string approach;  // e.g. "dalc", "persistence"
  std::string detector_id;
  Period period = Period::AM;
  int hidden_layers = 0;  // 0 where the approach has no model shape
  int epochs = 0;
  double aare = 0.0;
  double search_seconds = 0.0;
};

struct ApproachAggregate {
  std::string approach;
  int count = 0;
  double mean_aare = 0.0;
  double stddev_aare = 0.0;  // population
  double max_aare = 0.0;
};

struct RunReport {
  std::vector<ReportRow> rows;  // ordered by (detector, period) per approach
  std::vector<ApproachAggregate> aggregates;
};

// Predicts each test target as the last value of its window; the customary
// do-nothing reference.
double persistence_baseline(const DpcDataset& dataset);

// Exact mean / population standard deviation / max per approach label.
// Rows are re-ordered by (approach, detector_id, period).
RunReport aggregate(const std::vector<ReportRow>& rows);
RunReport aggregate(const std::vector<JobResult>& results);

std::vector<ReportRow> rows_from_results(const std::vector<JobResult>& results,
                                         const std::string& approach = "dalc");

// Baseline log: JSON lines of {"job_id", "aare"}, labeled `approach`.
std::vector<ReportRow> load_baseline_log(const std::string& path,
                                         const std::string& approach);
void append_baseline_log(const std::string& path, const std::string& job_id,
                         double aare);

// CSV and JSON emissions carry the same numbers, formatted the same way.
std::string report_to_csv(const RunReport& report);
Json report_to_json(const RunReport& report);

}  // namespace dalc
