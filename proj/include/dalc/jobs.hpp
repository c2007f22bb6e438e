#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dalc/alc.hpp"
#include "dalc/serial.hpp"

namespace dalc {

// One unit of distributed work: everything a worker needs to customize one
// detector-period, shipped inline. The per-job seed is derived from the
// job id at build time, so any worker produces identical output.
struct JobSpec {
  std::string job_id;  // "<detector>:<AM|PM>:<run tag>"
  DpcDataset dataset;
  double delta = 0.05;
  std::uint64_t base_seed = 0;
  MdpModel model;
  PolicyTable policy;
  LstmConfig trainer_defaults;
};

struct ChosenConfig {
  int hidden_layers = 0;
  int epochs = 0;

  friend bool operator==(const ChosenConfig&, const ChosenConfig&) = default;
};

struct JobResult {
  std::string job_id;
  ChosenConfig chosen_config;
  double aare = 0.0;
  double total_search_seconds = 0.0;
  std::string trace_digest;  // 16 hex chars over the deterministic trace
  std::string worker_id;

  friend bool operator==(const JobResult&, const JobResult&) = default;
};

std::string make_job_id(const std::string& detector_id, Period period,
                        const std::string& run_tag);
// Splits "<detector>:<period>:<tag>"; throws DataError on malformed ids.
void parse_job_id(const std::string& job_id, std::string* detector_id,
                  Period* period, std::string* run_tag);

// Digest over the deterministic trace fields (timings excluded).
std::string trace_digest(const AlcTrace& trace);

Json job_spec_to_json(const JobSpec& job);
JobSpec job_spec_from_json(const Json& j);
Json job_result_to_json(const JobResult& r);
JobResult job_result_from_json(const Json& j);

// One JobSpec per DPC found in the records, ordered by (detector, period).
// Uses the first five weekdays present as training days and the next three
// as testing days.
std::vector<JobSpec> build_jobs(const std::vector<SpeedRecord>& records,
                                const MdpModel& model,
                                const PolicyTable& policy, double delta,
                                std::uint64_t run_seed,
                                const LstmConfig& trainer_defaults,
                                const std::string& run_tag);

// Runs one job to completion with the given trainer.
JobResult execute_job(const JobSpec& job, const Trainer& trainer,
                      const std::string& worker_id);

// Reference execution: every job in order, in this process.
std::vector<JobResult> run_jobs_sequential(
    const std::vector<JobSpec>& jobs, const Trainer& trainer,
    const std::string& worker_id = "sequential");

// JSON-lines result log, one JobResult per line, append-only.
void append_result_log(const std::string& path, const JobResult& r);
std::vector<JobResult> load_result_log(const std::string& path);

}  // namespace dalc
