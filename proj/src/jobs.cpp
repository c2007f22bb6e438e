#include "dalc/jobs.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "dalc/hashing.hpp"

namespace dalc {

std::string make_job_id(const std::string& detector_id, Period period,
                        const std::string& run_tag) {
  return detector_id + ":" + to_string(period) + ":" + run_tag;
}

void parse_job_id(const std::string& job_id, std::string* detector_id,
                  Period* period, std::string* run_tag) {
  const auto first = job_id.find(':');
  const auto second = first == std::string::npos
                          ? std::string::npos
                          : job_id.find(':', first + 1);
  if (first == std::string::npos || second == std::string::npos)
    throw DataError("malformed job id '" + job_id +
                    "', expected detector:period:tag");
  if (detector_id) *detector_id = job_id.substr(0, first);
  Period p = period_from_string(job_id.substr(first + 1, second - first - 1));
  if (period) *period = p;
  if (run_tag) *run_tag = job_id.substr(second + 1);
}

std::string trace_digest(const AlcTrace& trace) {
  const std::uint64_t h = fnv1a64(canonical_trace_string(trace));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

Json job_spec_to_json(const JobSpec& job) {
  return Json{{"job_id", job.job_id},
              {"dataset", dataset_to_json(job.dataset)},
              {"alc", Json{{"delta", job.delta},
                           {"base_seed", job.base_seed},
                           {"model", mdp_model_to_json(job.model)},
                           {"policy", policy_to_json(job.policy)},
                           {"trainer_defaults",
                            lstm_config_to_json(job.trainer_defaults)}}}};
}

JobSpec job_spec_from_json(const Json& j) {
  auto require = [](const Json& obj, const char* field) -> const Json& {
    auto it = obj.find(field);
    if (it == obj.end())
      throw DataError(std::string("missing field '") + field + "'");
    return *it;
  };
  const Json& alc = require(j, "alc");
  JobSpec job{require(j, "job_id").get<std::string>(),
              dataset_from_json(require(j, "dataset")),
              require(alc, "delta").get<double>(),
              require(alc, "base_seed").get<std::uint64_t>(),
              mdp_model_from_json(require(alc, "model")),
              policy_from_json(require(alc, "policy")),
              lstm_config_from_json(require(alc, "trainer_defaults"))};
  if (job.job_id.empty()) throw DataError("job_id must not be empty");
  return job;
}

Json job_result_to_json(const JobResult& r) {
  return Json{{"job_id", r.job_id},
              {"chosen_config",
               Json{{"hidden_layers", r.chosen_config.hidden_layers},
                    {"epochs", r.chosen_config.epochs}}},
              {"aare", r.aare},
              {"total_search_seconds", r.total_search_seconds},
              {"trace_digest", r.trace_digest},
              {"worker_id", r.worker_id}};
}

JobResult job_result_from_json(const Json& j) {
  auto require = [](const Json& obj, const char* field) -> const Json& {
    auto it = obj.find(field);
    if (it == obj.end())
      throw DataError(std::string("missing field '") + field + "'");
    return *it;
  };
  JobResult r;
  r.job_id = require(j, "job_id").get<std::string>();
  const Json& cc = require(j, "chosen_config");
  r.chosen_config.hidden_layers = require(cc, "hidden_layers").get<int>();
  r.chosen_config.epochs = require(cc, "epochs").get<int>();
  r.aare = require(j, "aare").get<double>();
  r.total_search_seconds = require(j, "total_search_seconds").get<double>();
  r.trace_digest = require(j, "trace_digest").get<std::string>();
  r.worker_id = require(j, "worker_id").get<std::string>();
  return r;
}

std::vector<JobSpec> build_jobs(const std::vector<SpeedRecord>& records,
                                const MdpModel& model,
                                const PolicyTable& policy, double delta,
                                std::uint64_t run_seed,
                                const LstmConfig& trainer_defaults,
                                const std::string& run_tag) {
  const auto dates = weekday_dates(records);
  if (dates.size() < 8)
    throw DataError("need at least 8 weekdays of data, found " +
                    std::to_string(dates.size()));
  const std::vector<Date> train_days(dates.begin(), dates.begin() + 5);
  const std::vector<Date> test_days(dates.begin() + 5, dates.begin() + 8);

  std::vector<JobSpec> jobs;
  for (const std::string& det : detector_ids(records)) {
    for (Period period : {Period::AM, Period::PM}) {
      const std::string job_id = make_job_id(det, period, run_tag);
      JobSpec job{job_id,
                  extract_dpc(records, Dpc{det, period}, train_days, test_days,
                              trainer_defaults.window_len),
                  delta,
                  mix_seed(run_seed, fnv1a64(job_id)),
                  model,
                  policy,
                  trainer_defaults};
      jobs.push_back(std::move(job));
    }
  }
  return jobs;
}

JobResult execute_job(const JobSpec& job, const Trainer& trainer,
                      const std::string& worker_id) {
  AlcParams params(job.delta, job.model, job.policy, job.base_seed,
                   job.trainer_defaults);
  CustomizedModel out = run_alc(job.dataset, params, trainer);
  JobResult r;
  r.job_id = job.job_id;
  r.chosen_config = ChosenConfig{out.outcome.model.config.hidden_layers,
                                 out.outcome.model.config.epochs};
  r.aare = out.outcome.aare;
  r.total_search_seconds = out.total_search_seconds;
  r.trace_digest = trace_digest(out.trace);
  r.worker_id = worker_id;
  return r;
}

std::vector<JobResult> run_jobs_sequential(const std::vector<JobSpec>& jobs,
                                           const Trainer& trainer,
                                           const std::string& worker_id) {
  std::vector<JobResult> results;
  results.reserve(jobs.size());
  for (const JobSpec& job : jobs)
    results.push_back(execute_job(job, trainer, worker_id));
  return results;
}

void append_result_log(const std::string& path, const JobResult& r) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw DataError("cannot append to result log: " + path);
  out << job_result_to_json(r).dump() << '\n';
  out.flush();
}

std::vector<JobResult> load_result_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open result log: " + path);
  std::vector<JobResult> results;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      results.push_back(job_result_from_json(Json::parse(line)));
    } catch (const Json::parse_error& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return results;
}

}  // namespace dalc
