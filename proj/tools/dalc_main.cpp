// Command-line surface for the LSTM customization toolkit: policy
// computation, per-epoch calibration, synthetic data, single-DPC runs, the
// coordinator/worker pair, and result reporting.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "dalc/coordinator.hpp"
#include "dalc/hashing.hpp"
#include "dalc/report.hpp"
#include "dalc/serial.hpp"
#include "dalc/worker.hpp"

namespace {

using namespace dalc;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

struct TrainerFlags {
  int hidden_units = 32;
  int window_len = 12;
  double learning_rate = 0.001;

  LstmConfig defaults() const {
    LstmConfig cfg;
    cfg.hidden_units = hidden_units;
    cfg.window_len = window_len;
    cfg.learning_rate = learning_rate;
    return cfg;
  }
};

void add_trainer_flags(CLI::App* cmd, TrainerFlags& flags) {
  cmd->add_option("--units", flags.hidden_units, "Hidden units per layer")
      ->capture_default_str();
  cmd->add_option("--window", flags.window_len,
                  "Input window length in 5-minute samples")
      ->capture_default_str();
  cmd->add_option("--lr", flags.learning_rate, "Adam learning rate")
      ->capture_default_str();
}

DpcDataset dataset_from_csv(const std::string& csv_path,
                            const std::string& detector, Period period,
                            int window_len) {
  const auto records = parse_csv_file(csv_path);
  const auto dates = weekday_dates(records);
  if (dates.size() < 8)
    throw DataError("need at least 8 weekdays of data, found " +
                    std::to_string(dates.size()));
  return extract_dpc(records, Dpc{detector, period},
                     {dates.begin(), dates.begin() + 5},
                     {dates.begin() + 5, dates.begin() + 8}, window_len);
}

void print_policy(const MdpModel& model, const PolicyTable& policy) {
  std::printf("converged after %d sweeps (theta = %g s)\n", policy.iterations,
              model.theta());
  std::printf("%4s %4s %8s %18s  %s\n", "h", "j", "epochs",
              "expected_seconds", "action");
  for (const SearchState& s : build_state_space(model)) {
    const auto& action = policy.action[policy.state_index(s)];
    std::printf("%4d %4d %8d %18.3f  %s\n", s.layers, s.epoch_multiple,
                s.epoch_multiple * model.epoch_increment(),
                policy.value_at(s), action ? to_string(*action) : "-");
  }
}

int cmd_policy(const std::string& config_path, const std::string& json_path) {
  const MdpModel model = load_mdp_config(config_path);
  const PolicyTable policy = value_iteration(model);
  print_policy(model, policy);
  if (!json_path.empty()) {
    const Json j{{"model", mdp_model_to_json(model)},
                 {"policy", policy_to_json(policy)}};
    if (json_path == "-")
      std::cout << j.dump(2) << '\n';
    else
      save_json(j, json_path);
  }
  return kExitOk;
}

int cmd_calibrate(int layers, const std::string& csv_path,
                  const std::string& detector, const std::string& period_name,
                  int probe_epochs, std::uint64_t seed,
                  const TrainerFlags& flags, const std::string& json_path) {
  DpcDataset probe;
  if (csv_path.empty()) {
    const auto records =
        generate_synthetic(2, 8, seed, SyntheticProfile::BimodalCommute);
    const auto dates = weekday_dates(records);
    probe = extract_dpc(records, Dpc{"det-001", Period::AM},
                        {dates.begin(), dates.begin() + 5},
                        {dates.begin() + 5, dates.begin() + 8},
                        flags.window_len);
  } else {
    probe = dataset_from_csv(csv_path, detector,
                             period_from_string(period_name),
                             flags.window_len);
  }
  LstmConfig base = flags.defaults();
  base.seed = seed;
  const auto times = calibrate_epoch_times(layers, probe, probe_epochs, base);

  std::printf("%8s %22s\n", "layers", "seconds_per_epoch");
  std::string joined;
  for (const auto& [h, t] : times) {
    std::printf("%8d %22.6f\n", h, t);
    if (!joined.empty()) joined += ", ";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", t);
    joined += buf;
  }
  std::printf("\nepoch_time = %s\n", joined.c_str());
  if (!json_path.empty()) {
    Json j = Json::object();
    for (const auto& [h, t] : times) j[std::to_string(h)] = t;
    save_json(Json{{"epoch_time", j}}, json_path);
  }
  return kExitOk;
}

int cmd_gen_synth(int dpcs, int days, std::uint64_t seed,
                  const std::string& profile_name,
                  const std::string& out_path) {
  const auto records =
      generate_synthetic(dpcs, days, seed, profile_from_string(profile_name));
  const std::string csv = serialize_csv(records);
  if (out_path.empty() || out_path == "-") {
    std::fwrite(csv.data(), 1, csv.size(), stdout);
  } else {
    std::ofstream out(out_path);
    if (!out) throw DataError("cannot write " + out_path);
    out << csv;
    std::fprintf(stderr, "wrote %zu records to %s\n", records.size(),
                 out_path.c_str());
  }
  return kExitOk;
}

int cmd_run(const std::string& csv_path, const std::string& detector,
            const std::string& period_name, const std::string& config_path,
            double delta, std::uint64_t seed, const TrainerFlags& flags,
            const std::string& out_path, std::string trace_path,
            const std::string& baseline_log) {
  const Period period = period_from_string(period_name);
  const MdpModel model = load_mdp_config(config_path);
  const PolicyTable policy = value_iteration(model);
  const DpcDataset dataset =
      dataset_from_csv(csv_path, detector, period, flags.window_len);

  const std::string job_id = make_job_id(detector, period, "cli");
  AlcParams params(delta, model, policy, mix_seed(seed, fnv1a64(job_id)),
                   flags.defaults());
  const CustomizedModel result = run_alc(dataset, params, train);

  const double baseline = persistence_baseline(dataset);
  std::printf("detector %s %s: configuration (%d layers, %d epochs)\n",
              detector.c_str(), to_string(period),
              result.outcome.model.config.hidden_layers,
              result.outcome.model.config.epochs);
  std::printf("  aare            %.6f (%s)\n", result.outcome.aare,
              to_string(result.trace.reason));
  std::printf("  persistence     %.6f\n", baseline);
  std::printf("  search seconds  %.2f over %zu training runs\n",
              result.total_search_seconds, result.trace.steps.size());

  if (!out_path.empty()) {
    save_json(trained_model_to_json(result.outcome.model), out_path);
    if (trace_path.empty()) {
      trace_path = out_path;
      const auto dot = trace_path.rfind(".json");
      if (dot != std::string::npos && dot == trace_path.size() - 5)
        trace_path.resize(dot);
      trace_path += ".trace.json";
    }
    save_json(customized_model_to_json(result), trace_path);
    std::fprintf(stderr, "model -> %s\ntrace -> %s\n", out_path.c_str(),
                 trace_path.c_str());
  }
  if (!baseline_log.empty())
    append_baseline_log(baseline_log, job_id, baseline);
  return kExitOk;
}

std::vector<JobSpec> load_jobs_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open jobs file: " + path);
  std::vector<JobSpec> jobs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      jobs.push_back(job_spec_from_json(Json::parse(line)));
    } catch (const Json::parse_error& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (jobs.empty()) throw DataError(path + ": no jobs");
  return jobs;
}

int cmd_coordinator(const std::string& listen, const std::string& jobs_path,
                    const std::string& csv_path,
                    const std::string& config_path, double delta,
                    std::uint64_t seed, const std::string& tag,
                    const TrainerFlags& flags, const std::string& result_log,
                    double timeout_s, double deadline_s,
                    const std::string& report_path) {
  std::vector<JobSpec> jobs;
  if (!jobs_path.empty()) {
    jobs = load_jobs_file(jobs_path);
  } else if (!csv_path.empty() && !config_path.empty()) {
    const MdpModel model = load_mdp_config(config_path);
    const PolicyTable policy = value_iteration(model);
    jobs = build_jobs(parse_csv_file(csv_path), model, policy, delta, seed,
                      flags.defaults(), tag);
  } else {
    throw ConfigError("need either --jobs or both --data and --config");
  }
  std::fprintf(stderr, "serving %zu jobs on %s\n", jobs.size(),
               listen.c_str());

  const auto [host, port] = parse_address(listen);
  TcpListener listener(host, port);
  std::fprintf(stderr, "listening on %s:%u\n", host.c_str(),
               listener.port());

  CoordinatorOptions options;
  options.heartbeat_timeout_s = timeout_s;
  options.deadline_s = deadline_s;
  options.result_log_path = result_log;
  const CoordinatorReport report = coordinator_serve(jobs, listener, options);

  for (const JobResult& r : report.results)
    std::printf("%-24s (%d layers, %d epochs)  aare %.6f  worker %s\n",
                r.job_id.c_str(), r.chosen_config.hidden_layers,
                r.chosen_config.epochs, r.aare, r.worker_id.c_str());
  std::printf("%zu/%zu jobs completed%s\n", report.results.size(),
              jobs.size(), report.completed_all ? "" : " (partial)");

  if (!report_path.empty()) {
    Json history = Json::array();
    for (const auto& rec : report.history)
      history.push_back(Json{{"job_id", rec.job_id},
                             {"worker_id", rec.worker_id},
                             {"event", to_string(rec.event)},
                             {"detail", rec.detail}});
    Json results = Json::array();
    for (const auto& r : report.results)
      results.push_back(job_result_to_json(r));
    save_json(Json{{"completed_all", report.completed_all},
                   {"results", std::move(results)},
                   {"history", std::move(history)}},
              report_path);
  }
  return report.completed_all ? kExitOk : kExitRuntime;
}

int cmd_worker(const std::string& connect_addr, const std::string& worker_id,
               double heartbeat_s) {
  const auto [host, port] = parse_address(connect_addr);
  WorkerOptions options;
  options.worker_id = worker_id;
  options.heartbeat_interval_s = heartbeat_s;
  const WorkerStats stats = worker_loop(
      [host = host, port = port] { return tcp_connect(host, port); }, train,
      options);
  std::printf("worker %s done: %d jobs, %d errors, %d reconnects\n",
              worker_id.c_str(), stats.jobs_completed, stats.errors_sent,
              stats.reconnects);
  return kExitOk;
}

int cmd_report(const std::string& log_path, const std::string& baseline_path,
               const std::string& csv_path, const std::string& json_path) {
  auto rows = rows_from_results(load_result_log(log_path));
  if (!baseline_path.empty()) {
    const auto baseline = load_baseline_log(baseline_path, "persistence");
    rows.insert(rows.end(), baseline.begin(), baseline.end());
  }
  const RunReport report = aggregate(rows);

  std::printf("%-14s %6s %12s %12s %12s\n", "approach", "count", "mean_aare",
              "stddev_aare", "max_aare");
  for (const auto& a : report.aggregates)
    std::printf("%-14s %6d %12.6f %12.6f %12.6f\n", a.approach.c_str(),
                a.count, a.mean_aare, a.stddev_aare, a.max_aare);

  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw DataError("cannot write " + csv_path);
    out << report_to_csv(report);
  }
  if (!json_path.empty()) save_json(report_to_json(report), json_path);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-detector LSTM customization: least-expected-time search "
               "policy, automatic configuration search, and distributed "
               "execution"};
  app.require_subcommand(1);

  // policy
  std::string policy_config, policy_json;
  auto* policy_cmd = app.add_subcommand(
      "policy", "Compute the search policy for a model configuration file");
  policy_cmd->add_option("--config", policy_config, "Model parameter file")
      ->required();
  policy_cmd->add_option("--json", policy_json,
                         "Write model + policy JSON here ('-' for stdout)");

  // calibrate
  int cal_layers = 3, cal_epochs = 5;
  std::string cal_csv, cal_detector, cal_period = "AM", cal_json;
  std::uint64_t cal_seed = 1;
  TrainerFlags cal_flags;
  auto* cal_cmd = app.add_subcommand(
      "calibrate", "Measure per-epoch training seconds per layer count");
  cal_cmd->add_option("--layers", cal_layers, "Calibrate 1..N layers")
      ->capture_default_str();
  cal_cmd->add_option("--epochs", cal_epochs, "Probe epochs per layer (>= 3)")
      ->capture_default_str();
  cal_cmd->add_option("--data", cal_csv,
                      "Probe CSV (default: synthetic probe)");
  cal_cmd->add_option("--detector", cal_detector, "Detector id in --data");
  cal_cmd->add_option("--period", cal_period, "AM or PM")
      ->capture_default_str();
  cal_cmd->add_option("--seed", cal_seed, "Probe seed")->capture_default_str();
  cal_cmd->add_option("--json", cal_json, "Write measured times here");
  add_trainer_flags(cal_cmd, cal_flags);

  // gen-synth
  int gs_dpcs = 8, gs_days = 8;
  std::uint64_t gs_seed = 1;
  std::string gs_profile = "bimodalCommute", gs_out;
  auto* gs_cmd =
      app.add_subcommand("gen-synth", "Generate a synthetic detector CSV");
  gs_cmd->add_option("--dpcs", gs_dpcs, "Detector-period count (even)")
      ->capture_default_str();
  gs_cmd->add_option("--days", gs_days, "Weekdays to generate (>= 8)")
      ->capture_default_str();
  gs_cmd->add_option("--seed", gs_seed, "Generator seed")
      ->capture_default_str();
  gs_cmd->add_option("--profile", gs_profile,
                     "bimodalCommute, flat, or noisy")
      ->capture_default_str();
  gs_cmd->add_option("--out", gs_out, "Output CSV ('-' for stdout)");

  // run
  std::string run_csv, run_detector, run_period = "AM", run_config;
  std::string run_out, run_trace, run_baseline_log;
  double run_delta = 0.05;
  std::uint64_t run_seed = 1;
  TrainerFlags run_flags;
  auto* run_cmd = app.add_subcommand(
      "run", "Customize a model for one detector-period, sequentially");
  run_cmd->add_option("--data", run_csv, "Input CSV")->required();
  run_cmd->add_option("--detector", run_detector, "Detector id")->required();
  run_cmd->add_option("--period", run_period, "AM or PM")
      ->capture_default_str();
  run_cmd->add_option("--config", run_config, "Model parameter file")
      ->required();
  run_cmd->add_option("--delta", run_delta, "Accuracy satisfaction threshold")
      ->capture_default_str();
  run_cmd->add_option("--seed", run_seed, "Run seed")->capture_default_str();
  run_cmd->add_option("--out", run_out, "Write the customized model here");
  run_cmd->add_option("--trace", run_trace,
                      "Trace path (default: beside the model)");
  run_cmd->add_option("--baseline-log", run_baseline_log,
                      "Append the persistence baseline to this JSONL log");
  add_trainer_flags(run_cmd, run_flags);

  // coordinator
  std::string co_listen = "127.0.0.1:7077", co_jobs, co_csv, co_config;
  std::string co_tag = "run", co_result_log = "results.jsonl", co_report;
  double co_delta = 0.05, co_timeout = 30.0, co_deadline = 0.0;
  std::uint64_t co_seed = 1;
  TrainerFlags co_flags;
  auto* co_cmd = app.add_subcommand(
      "coordinator", "Serve customization jobs to pulling workers");
  co_cmd->add_option("--listen", co_listen, "host:port to listen on")
      ->capture_default_str();
  co_cmd->add_option("--jobs", co_jobs, "Prebuilt JSONL job file");
  co_cmd->add_option("--data", co_csv, "Build jobs from this CSV");
  co_cmd->add_option("--config", co_config, "Model parameter file");
  co_cmd->add_option("--delta", co_delta, "Accuracy satisfaction threshold")
      ->capture_default_str();
  co_cmd->add_option("--seed", co_seed, "Run seed")->capture_default_str();
  co_cmd->add_option("--tag", co_tag, "Run tag used in job ids")
      ->capture_default_str();
  co_cmd->add_option("--result-log", co_result_log,
                     "Append-only JSONL result log")
      ->capture_default_str();
  co_cmd->add_option("--timeout", co_timeout, "Heartbeat timeout seconds")
      ->capture_default_str();
  co_cmd->add_option("--deadline", co_deadline,
                     "Abort with a partial report after this many seconds");
  co_cmd->add_option("--report", co_report,
                     "Write the full report (results + history) here");
  add_trainer_flags(co_cmd, co_flags);

  // worker
  std::string wk_connect = "127.0.0.1:7077", wk_id = "worker-1";
  double wk_heartbeat = 15.0;
  auto* wk_cmd =
      app.add_subcommand("worker", "Pull and execute customization jobs");
  wk_cmd->add_option("--connect", wk_connect, "Coordinator host:port")
      ->capture_default_str();
  wk_cmd->add_option("--worker-id", wk_id, "Worker name in results")
      ->capture_default_str();
  wk_cmd->add_option("--heartbeat", wk_heartbeat,
                     "Heartbeat interval seconds")
      ->capture_default_str();

  // report
  std::string rp_log, rp_baseline, rp_csv, rp_json;
  auto* rp_cmd = app.add_subcommand(
      "report", "Aggregate a result log into per-approach statistics");
  rp_cmd->add_option("--log", rp_log, "JSONL result log")->required();
  rp_cmd->add_option("--baseline-log", rp_baseline,
                     "JSONL persistence baseline log");
  rp_cmd->add_option("--csv", rp_csv, "Write rows + aggregates as CSV");
  rp_cmd->add_option("--json", rp_json, "Write rows + aggregates as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (policy_cmd->parsed()) return cmd_policy(policy_config, policy_json);
    if (cal_cmd->parsed())
      return cmd_calibrate(cal_layers, cal_csv, cal_detector, cal_period,
                           cal_epochs, cal_seed, cal_flags, cal_json);
    if (gs_cmd->parsed())
      return cmd_gen_synth(gs_dpcs, gs_days, gs_seed, gs_profile, gs_out);
    if (run_cmd->parsed())
      return cmd_run(run_csv, run_detector, run_period, run_config, run_delta,
                     run_seed, run_flags, run_out, run_trace,
                     run_baseline_log);
    if (co_cmd->parsed())
      return cmd_coordinator(co_listen, co_jobs, co_csv, co_config, co_delta,
                             co_seed, co_tag, co_flags, co_result_log,
                             co_timeout, co_deadline, co_report);
    if (wk_cmd->parsed()) return cmd_worker(wk_connect, wk_id, wk_heartbeat);
    if (rp_cmd->parsed())
      return cmd_report(rp_log, rp_baseline, rp_csv, rp_json);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const ProtocolError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
