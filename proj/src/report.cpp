#include "dalc/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "dalc/metrics.hpp"

namespace dalc {

double persistence_baseline(const DpcDataset& dataset) {
  if (dataset.test_windows.empty())
    throw DataError("persistence baseline needs at least one test window");
  std::vector<double> predicted;
  predicted.reserve(dataset.test_windows.size());
  for (const Window& w : dataset.test_windows)
    predicted.push_back(dataset.normalization.denormalize(w.input.back()));
  return compute_aare(dataset.raw_test_targets, predicted);
}

std::vector<ReportRow> rows_from_results(const std::vector<JobResult>& results,
                                         const std::string& approach) {
  std::vector<ReportRow> rows;
  rows.reserve(results.size());
  for (const JobResult& r : results) {
    ReportRow row;
    row.approach = approach;
    parse_job_id(r.job_id, &row.detector_id, &row.period, nullptr);
    row.hidden_layers = r.chosen_config.hidden_layers;
    row.epochs = r.chosen_config.epochs;
    row.aare = r.aare;
    row.search_seconds = r.total_search_seconds;
    rows.push_back(std::move(row));
  }
  return rows;
}

RunReport aggregate(const std::vector<ReportRow>& rows) {
  if (rows.empty()) throw DomainError("nothing to aggregate");
  RunReport report;
  report.rows = rows;
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const ReportRow& a, const ReportRow& b) {
                     if (a.approach != b.approach) return a.approach < b.approach;
                     if (a.detector_id != b.detector_id)
                       return a.detector_id < b.detector_id;
                     return static_cast<int>(a.period) <
                            static_cast<int>(b.period);
                   });

  for (size_t i = 0; i < report.rows.size();) {
    size_t j = i;
    while (j < report.rows.size() &&
           report.rows[j].approach == report.rows[i].approach)
      ++j;
    ApproachAggregate agg;
    agg.approach = report.rows[i].approach;
    agg.count = static_cast<int>(j - i);
    double sum = 0.0, max = 0.0;
    for (size_t k = i; k < j; ++k) {
      sum += report.rows[k].aare;
      max = std::max(max, report.rows[k].aare);
    }
    agg.mean_aare = sum / agg.count;
    double sq = 0.0;
    for (size_t k = i; k < j; ++k) {
      const double d = report.rows[k].aare - agg.mean_aare;
      sq += d * d;
    }
    agg.stddev_aare = std::sqrt(sq / agg.count);
    agg.max_aare = max;
    report.aggregates.push_back(std::move(agg));
    i = j;
  }
  return report;
}

RunReport aggregate(const std::vector<JobResult>& results) {
  return aggregate(rows_from_results(results));
}

std::vector<ReportRow> load_baseline_log(const std::string& path,
                                         const std::string& approach) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open baseline log: " + path);
  std::vector<ReportRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const Json j = Json::parse(line);
      ReportRow row;
      row.approach = approach;
      parse_job_id(j.at("job_id").get<std::string>(), &row.detector_id,
                   &row.period, nullptr);
      row.aare = j.at("aare").get<double>();
      rows.push_back(std::move(row));
    } catch (const Json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

void append_baseline_log(const std::string& path, const std::string& job_id,
                         double aare) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw DataError("cannot append to baseline log: " + path);
  out << Json{{"job_id", job_id}, {"aare", aare}}.dump() << '\n';
}

namespace {

// Shortest round-trippable decimal, shared by the CSV and JSON emitters.
std::string format_number(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

std::string report_to_csv(const RunReport& report) {
  std::string out =
      "approach,detector_id,period,hidden_layers,epochs,aare,search_seconds\n";
  for (const ReportRow& r : report.rows) {
    out += r.approach;
    out += ',';
    out += r.detector_id;
    out += ',';
    out += to_string(r.period);
    out += ',';
    out += std::to_string(r.hidden_layers);
    out += ',';
    out += std::to_string(r.epochs);
    out += ',';
    out += format_number(r.aare);
    out += ',';
    out += format_number(r.search_seconds);
    out += '\n';
  }
  out += "\napproach,count,mean_aare,stddev_aare,max_aare\n";
  for (const ApproachAggregate& a : report.aggregates) {
    out += a.approach;
    out += ',';
    out += std::to_string(a.count);
    out += ',';
    out += format_number(a.mean_aare);
    out += ',';
    out += format_number(a.stddev_aare);
    out += ',';
    out += format_number(a.max_aare);
    out += '\n';
  }
  return out;
}

Json report_to_json(const RunReport& report) {
  Json rows = Json::array();
  for (const ReportRow& r : report.rows)
    rows.push_back(Json{{"approach", r.approach},
                        {"detector_id", r.detector_id},
                        {"period", to_string(r.period)},
                        {"hidden_layers", r.hidden_layers},
                        {"epochs", r.epochs},
                        {"aare", r.aare},
                        {"search_seconds", r.search_seconds}});
  Json aggregates = Json::array();
  for (const ApproachAggregate& a : report.aggregates)
    aggregates.push_back(Json{{"approach", a.approach},
                              {"count", a.count},
                              {"mean_aare", a.mean_aare},
                              {"stddev_aare", a.stddev_aare},
                              {"max_aare", a.max_aare}});
  return Json{{"rows", std::move(rows)}, {"aggregates", std::move(aggregates)}};
}

}  // namespace dalc
