#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dalc/jobs.hpp"
#include "dalc/serial.hpp"

using namespace dalc;

namespace {

DpcDataset sample_dataset() {
  auto recs = generate_synthetic(2, 8, 31, SyntheticProfile::BimodalCommute);
  auto dates = weekdays_from(parse_date("2024-01-01"), 8);
  return extract_dpc(recs, Dpc{"det-001", Period::PM},
                     {dates.begin(), dates.begin() + 5},
                     {dates.begin() + 5, dates.end()}, 12);
}

}  // namespace

TEST_CASE("trained model json round trip is bit exact") {
  LstmConfig cfg;
  cfg.hidden_layers = 2;
  cfg.hidden_units = 5;
  cfg.window_len = 7;
  cfg.seed = 0xfeedbeefcafeULL;
  TrainedModel m = init_weights(cfg);
  m.normalization = Normalization{12.5, 47.25};

  TrainedModel back = trained_model_from_json(trained_model_to_json(m));
  CHECK(back.config == m.config);
  CHECK(back.normalization.min == m.normalization.min);
  CHECK(back.normalization.scale == m.normalization.scale);
  REQUIRE(back.weights.size() == m.weights.size());
  CHECK(back.weights == m.weights);

  SUBCASE("missing fields are data errors") {
    Json j = trained_model_to_json(m);
    j.erase("readout");
    CHECK_THROWS_AS(trained_model_from_json(j), DataError);
  }
  SUBCASE("wrong slice length is a data error") {
    Json j = trained_model_to_json(m);
    j["layers"][0]["b_input"].push_back(1.0);
    CHECK_THROWS_AS(trained_model_from_json(j), DataError);
  }
}

TEST_CASE("dataset json round trip preserves values and scoring") {
  DpcDataset ds = sample_dataset();
  DpcDataset back = dataset_from_json(dataset_to_json(ds));
  CHECK(back.dpc == ds.dpc);
  CHECK(back.window_len == ds.window_len);
  CHECK(back.raw_test_targets == ds.raw_test_targets);
  REQUIRE(back.train_windows.size() == ds.train_windows.size());
  for (size_t i = 0; i < ds.train_windows.size(); ++i) {
    CHECK(back.train_windows[i].input == ds.train_windows[i].input);
    CHECK(back.train_windows[i].target == ds.train_windows[i].target);
  }

  // Scoring a model against the dataset is identical pre/post serialization.
  LstmConfig cfg;
  cfg.epochs = 2;
  cfg.hidden_units = 4;
  cfg.seed = 8;
  auto before = train(cfg, ds);
  auto after = train(cfg, back);
  CHECK(before.aare == after.aare);
}

TEST_CASE("mdp model and policy json round trips") {
  MdpModel m(3, 300, 100, {2.214, 3.311, 4.728}, 0.5, 0.25, 1.0, 1e-6);
  m.set_alpha(SearchState{2, 1}, 0.75);
  MdpModel mback = mdp_model_from_json(mdp_model_to_json(m));
  CHECK(mback.max_layers() == 3);
  CHECK(mback.alpha(SearchState{2, 1}) == 0.75);
  CHECK(mback.alpha(SearchState{1, 1}) == 0.5);
  CHECK(mback.beta(SearchState{1, 1}) == 0.25);
  CHECK(mback.theta() == m.theta());

  PolicyTable p = value_iteration(m);
  PolicyTable pback = policy_from_json(policy_to_json(p));
  CHECK(pback.value == p.value);
  CHECK(pback.action == p.action);
  CHECK(pback.iterations == p.iterations);
}

TEST_CASE("job spec and result round trips") {
  MdpModel m(2, 200, 100, {1.0, 2.0});
  PolicyTable p = value_iteration(m);
  LstmConfig defaults;
  JobSpec job{"det-001:AM:t1", sample_dataset(), 0.05, 42, m, p, defaults};

  JobSpec back = job_spec_from_json(job_spec_to_json(job));
  CHECK(back.job_id == job.job_id);
  CHECK(back.delta == job.delta);
  CHECK(back.base_seed == job.base_seed);
  CHECK(back.dataset.raw_test_targets == job.dataset.raw_test_targets);
  CHECK(job_spec_to_json(back) == job_spec_to_json(job));

  JobResult r{"det-001:AM:t1", ChosenConfig{2, 300}, 0.034, 123.5,
              "0123456789abcdef", "w1"};
  CHECK(job_result_from_json(job_result_to_json(r)) == r);
}

TEST_CASE("job ids carry the dpc") {
  CHECK(make_job_id("det-007", Period::PM, "run1") == "det-007:PM:run1");
  std::string det, tag;
  Period period;
  parse_job_id("det-007:PM:run1", &det, &period, &tag);
  CHECK(det == "det-007");
  CHECK(period == Period::PM);
  CHECK(tag == "run1");
  CHECK_THROWS_AS(parse_job_id("nonsense", nullptr, nullptr, nullptr),
                  DataError);
}

TEST_CASE("trace digest covers outcomes, not timings") {
  AlcTrace t;
  t.steps.push_back(AlcStep{std::nullopt, std::nullopt, std::nullopt, 1, 100,
                            0.2, true, 0.2, 3.5});
  t.steps.push_back(AlcStep{SearchState{1, 1}, ActionKind::IncreaseEpochs,
                            ActionKind::IncreaseEpochs, 1, 200, 0.04, true,
                            0.04, 7.1});
  t.reason = TerminationReason::SatisfiedDelta;
  t.branch = TerminalBranch::PolicyEpochsSatisfied;
  t.final_state = SearchState{1, 2};

  AlcTrace same_but_slower = t;
  same_but_slower.steps[0].train_seconds = 99.0;
  CHECK(trace_digest(t) == trace_digest(same_but_slower));

  AlcTrace different = t;
  different.steps[1].aare = 0.041;
  CHECK(trace_digest(t) != trace_digest(different));

  AlcTrace back = trace_from_json(trace_to_json(t));
  CHECK(trace_digest(back) == trace_digest(t));
  CHECK(back.steps.size() == 2);
  CHECK(back.steps[1].suggested == ActionKind::IncreaseEpochs);
  CHECK(back.final_state == SearchState{1, 2});
}

TEST_CASE("result log replay reconstructs the results") {
  const std::string path = "serial_test_results.jsonl";
  std::remove(path.c_str());
  std::vector<JobResult> written{
      {"det-001:AM:t", ChosenConfig{1, 100}, 0.03, 10.0, "aa", "w1"},
      {"det-001:PM:t", ChosenConfig{2, 200}, 0.04, 20.0, "bb", "w2"},
  };
  for (const auto& r : written) append_result_log(path, r);
  CHECK(load_result_log(path) == written);
  std::remove(path.c_str());
}
