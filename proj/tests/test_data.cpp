#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "dalc/data.hpp"
#include "oracles.hpp"

using namespace dalc;

namespace {

// First eight weekdays of the synthetic calendar.
std::vector<Date> synth_dates() {
  return weekdays_from(parse_date("2024-01-01"), 8);
}

std::vector<Date> first_n(const std::vector<Date>& d, int n) {
  return {d.begin(), d.begin() + n};
}
std::vector<Date> after_n(const std::vector<Date>& d, int n) {
  return {d.begin() + n, d.end()};
}

}  // namespace

TEST_CASE("timestamp parsing and formatting") {
  const std::int64_t ts = parse_timestamp("2024-01-01T04:05:00");
  CHECK(format_timestamp(ts) == "2024-01-01T04:05:00");
  CHECK(parse_timestamp("2024-01-01T04:05") == ts);
  CHECK(is_weekday(date_of(ts)));
  CHECK_FALSE(is_weekday(parse_date("2024-01-06")));  // Saturday
  CHECK_THROWS_AS(parse_timestamp("2024-13-01T00:00"), DataError);
  CHECK_THROWS_AS(parse_timestamp("not a time"), DataError);
  CHECK_THROWS_AS(parse_timestamp("2024-01-01T25:00"), DataError);
}

TEST_CASE("csv parsing") {
  SUBCASE("empty body gives an empty list") {
    std::istringstream in("timestamp,detector_id,speed_mph\n");
    CHECK(parse_csv(in).empty());
  }
  SUBCASE("records are grouped and time-sorted per detector") {
    std::istringstream in(
        "timestamp,detector_id,speed_mph\n"
        "2024-01-01T04:05:00,b,50\n"
        "2024-01-01T04:00:00,a,61\n"
        "2024-01-01T04:00:00,b,49\n"
        "2024-01-01T04:05:00,a,62\n");
    auto recs = parse_csv(in);
    REQUIRE(recs.size() == 4);
    CHECK(recs[0].detector_id == "a");
    CHECK(recs[1].detector_id == "a");
    CHECK(recs[0].timestamp < recs[1].timestamp);
    CHECK(recs[2].detector_id == "b");
    CHECK(recs[2].timestamp < recs[3].timestamp);
  }
  SUBCASE("non-positive speed names the line") {
    std::istringstream in(
        "timestamp,detector_id,speed_mph\n"
        "2024-01-01T04:00:00,a,61\n"
        "2024-01-01T04:05:00,a,0\n");
    CHECK_THROWS_WITH_AS(parse_csv(in),
                         doctest::Contains("line 3"), DataError);
  }
  SUBCASE("bad header is rejected") {
    std::istringstream in("time,det,mph\n");
    CHECK_THROWS_AS(parse_csv(in), DataError);
  }
  SUBCASE("duplicates are rejected") {
    std::istringstream in(
        "timestamp,detector_id,speed_mph\n"
        "2024-01-01T04:00:00,a,61\n"
        "2024-01-01T04:00:00,a,62\n");
    CHECK_THROWS_AS(parse_csv(in), DataError);
  }
  SUBCASE("off-cadence timestamps are rejected") {
    std::istringstream in(
        "timestamp,detector_id,speed_mph\n"
        "2024-01-01T04:02:00,a,61\n");
    CHECK_THROWS_AS(parse_csv(in), DataError);
  }
  SUBCASE("serialize then parse is semantically identical") {
    auto recs = generate_synthetic(2, 8, 7, SyntheticProfile::BimodalCommute);
    std::istringstream in(serialize_csv(recs));
    auto round = parse_csv(in);
    REQUIRE(round.size() == recs.size());
    for (size_t i = 0; i < recs.size(); ++i) {
      CHECK(round[i].detector_id == recs[i].detector_id);
      CHECK(round[i].timestamp == recs[i].timestamp);
      CHECK(round[i].speed_mph == doctest::Approx(recs[i].speed_mph).epsilon(1e-9));
    }
  }
}

TEST_CASE("normalization") {
  Normalization n = Normalization::fit({40.0, 60.0, 55.0});
  CHECK(n.min == 40.0);
  CHECK(n.scale == 20.0);
  for (double x : {-3.0, 0.0, 40.0, 47.3, 60.0, 123.456}) {
    CHECK(std::abs(n.denormalize(n.normalize(x)) - x) < 1e-12);
  }
  SUBCASE("constant series keeps an invertible transform") {
    Normalization flat = Normalization::fit({60.0, 60.0});
    CHECK(flat.scale == 1.0);
    CHECK(flat.denormalize(flat.normalize(77.0)) == doctest::Approx(77.0));
  }
}

TEST_CASE("dpc extraction window counts") {
  auto recs = generate_synthetic(2, 8, 42, SyntheticProfile::BimodalCommute);
  auto dates = synth_dates();
  const Dpc dpc{"det-001", Period::AM};

  SUBCASE("full coverage, L = 12") {
    auto ds = extract_dpc(recs, dpc, first_n(dates, 5), after_n(dates, 5), 12);
    CHECK(ds.train_windows.size() == 300);  // (72 - 12) per day over 5 days
    CHECK(ds.test_windows.size() == 180);
    CHECK(ds.raw_test_targets.size() == 180);
    CHECK(ds.window_len == 12);
  }
  SUBCASE("L = 71 leaves one window per full day") {
    auto ds = extract_dpc(recs, dpc, first_n(dates, 5), after_n(dates, 5), 71);
    CHECK(ds.train_windows.size() == 5);
    CHECK(ds.test_windows.size() == 3);
  }
  SUBCASE("window length bounds") {
    CHECK_THROWS_AS(
        extract_dpc(recs, dpc, first_n(dates, 5), after_n(dates, 5), 72),
        ConfigError);
    CHECK_THROWS_AS(
        extract_dpc(recs, dpc, first_n(dates, 5), after_n(dates, 5), 0),
        ConfigError);
  }
}

TEST_CASE("gap handling") {
  auto recs = generate_synthetic(2, 8, 9, SyntheticProfile::Flat);
  auto dates = synth_dates();
  const Dpc dpc{"det-001", Period::AM};
  const std::int64_t day0 =
      static_cast<std::int64_t>(dates[0].time_since_epoch().count()) * 86400;

  auto drop_slots = [&](std::vector<SpeedRecord> rs, int first_slot,
                        int count) {
    const std::int64_t lo = day0 + 4 * 3600 + first_slot * 300;
    const std::int64_t hi = lo + count * 300;
    std::erase_if(rs, [&](const SpeedRecord& r) {
      return r.detector_id == dpc.detector_id && r.timestamp >= lo &&
             r.timestamp < hi;
    });
    return rs;
  };

  SUBCASE("a short gap is forward-filled and costs no window") {
    auto ds = extract_dpc(drop_slots(recs, 20, 3), dpc, first_n(dates, 5),
                          after_n(dates, 5), 12);
    CHECK(ds.train_windows.size() == 300);
  }
  SUBCASE("a 20-minute gap drops exactly the overlapping windows") {
    auto ds = extract_dpc(drop_slots(recs, 20, 4), dpc, first_n(dates, 5),
                          after_n(dates, 5), 12);
    std::vector<bool> present(kSlotsPerPeriod, true);
    for (int s = 20; s < 24; ++s) present[s] = false;
    const int day_windows = oracles::count_windows(present, 12, kMaxFillRun);
    CHECK(day_windows < 60);
    CHECK(ds.train_windows.size() == static_cast<size_t>(day_windows) + 4 * 60);
  }
  SUBCASE("a leading gap cannot be filled") {
    auto ds = extract_dpc(drop_slots(recs, 0, 2), dpc, first_n(dates, 5),
                          after_n(dates, 5), 12);
    std::vector<bool> present(kSlotsPerPeriod, true);
    present[0] = present[1] = false;
    const int day_windows = oracles::count_windows(present, 12, kMaxFillRun);
    CHECK(ds.train_windows.size() == static_cast<size_t>(day_windows) + 4 * 60);
  }
  SUBCASE("a nearly empty day contributes nothing but a warning") {
    auto rs = drop_slots(recs, 0, 68);  // leaves 4 samples on day one
    std::vector<std::string> warnings;
    auto ds = extract_dpc(rs, dpc, first_n(dates, 5), after_n(dates, 5), 12,
                          &warnings);
    CHECK(ds.train_windows.size() == 240);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("2024-01-01") != std::string::npos);
  }
  SUBCASE("no training data at all is an error") {
    std::vector<SpeedRecord> none;
    CHECK_THROWS_AS(
        extract_dpc(none, dpc, first_n(dates, 5), after_n(dates, 5), 12),
        DataError);
  }
}

TEST_CASE("extraction guards the split protocol") {
  auto recs = generate_synthetic(2, 10, 1, SyntheticProfile::Flat);
  auto dates = weekdays_from(parse_date("2024-01-01"), 10);
  const Dpc dpc{"det-001", Period::PM};

  SUBCASE("weekend days are rejected") {
    auto bad = first_n(dates, 5);
    bad[0] = parse_date("2024-01-06");
    CHECK_THROWS_AS(extract_dpc(recs, dpc, bad, after_n(dates, 5), 12),
                    DataError);
  }
  SUBCASE("training must precede testing") {
    CHECK_THROWS_AS(
        extract_dpc(recs, dpc, after_n(dates, 5), first_n(dates, 5), 12),
        DataError);
  }
}

TEST_CASE("normalization never sees test data") {
  // Training days are flat 60; craft a test-day spike far above the
  // training range and confirm the fitted range ignores it.
  auto recs = generate_synthetic(4, 8, 3, SyntheticProfile::Flat);
  auto dates = synth_dates();
  const Dpc dpc{"det-002", Period::AM};
  const std::int64_t test_day =
      static_cast<std::int64_t>(dates[5].time_since_epoch().count()) * 86400;
  for (auto& r : recs)
    if (r.detector_id == "det-002" && r.timestamp >= test_day &&
        r.timestamp < test_day + 86400)
      r.speed_mph = 95.0;

  auto ds = extract_dpc(recs, dpc, first_n(dates, 5), after_n(dates, 5), 12);
  CHECK(ds.normalization.min == doctest::Approx(60.0));
  CHECK(ds.normalization.scale == doctest::Approx(1.0));  // degenerate range
  CHECK(ds.raw_test_targets[0] == doctest::Approx(95.0));
}

TEST_CASE("synthetic generation") {
  SUBCASE("flat profile is constant 60") {
    auto recs = generate_synthetic(2, 8, 5, SyntheticProfile::Flat);
    CHECK(recs.size() == 8u * 2 * kSlotsPerPeriod);
    for (const auto& r : recs) CHECK(r.speed_mph == 60.0);
  }
  SUBCASE("same seed gives identical bytes") {
    auto a = generate_synthetic(4, 9, 77, SyntheticProfile::Noisy);
    auto b = generate_synthetic(4, 9, 77, SyntheticProfile::Noisy);
    CHECK(serialize_csv(a) == serialize_csv(b));
    auto c = generate_synthetic(4, 9, 78, SyntheticProfile::Noisy);
    CHECK(serialize_csv(a) != serialize_csv(c));
  }
  SUBCASE("dpc count must be even and days at least eight") {
    CHECK_THROWS_AS(generate_synthetic(3, 8, 1, SyntheticProfile::Flat),
                    ConfigError);
    CHECK_THROWS_AS(generate_synthetic(2, 7, 1, SyntheticProfile::Flat),
                    ConfigError);
  }
  SUBCASE("m detectors yield 2m DPCs") {
    auto recs = generate_synthetic(8, 8, 2, SyntheticProfile::BimodalCommute);
    auto ids = detector_ids(recs);
    CHECK(ids.size() == 4);
    CHECK(recs.size() == 8u * ids.size() * 2 * kSlotsPerPeriod);
  }
  SUBCASE("AM and PM shapes of a detector are dissimilar") {
    auto recs = generate_synthetic(4, 8, 11, SyntheticProfile::BimodalCommute);
    for (const auto& id : detector_ids(recs)) {
      std::vector<double> am, pm;
      for (const auto& r : recs) {
        if (r.detector_id != id) continue;
        const std::int64_t sec_of_day = r.timestamp % 86400;
        if (sec_of_day < 12 * 3600)
          am.push_back(r.speed_mph);
        else
          pm.push_back(r.speed_mph);
      }
      REQUIRE(am.size() == pm.size());
      double ma = 0, mp = 0;
      for (size_t i = 0; i < am.size(); ++i) {
        ma += am[i];
        mp += pm[i];
      }
      ma /= am.size();
      mp /= pm.size();
      double cov = 0, va = 0, vp = 0;
      for (size_t i = 0; i < am.size(); ++i) {
        cov += (am[i] - ma) * (pm[i] - mp);
        va += (am[i] - ma) * (am[i] - ma);
        vp += (pm[i] - mp) * (pm[i] - mp);
      }
      const double corr = cov / std::sqrt(va * vp);
      CHECK(corr < 0.5);
    }
  }
}
