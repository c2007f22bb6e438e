#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dalc/errors.hpp"

namespace dalc {

// Daily windows a detector is modeled in. AM covers [04:00, 10:00) and PM
// covers [14:00, 20:00) local wall clock, weekdays only; at the 5-minute
// cadence each period holds exactly 72 slots.
enum class Period { AM, PM };

const char* to_string(Period p);
Period period_from_string(std::string_view name);

inline constexpr int kSlotMinutes = 5;
inline constexpr int kSlotsPerPeriod = 72;  // 6 hours at 5-minute cadence
int period_start_hour(Period p);

using Date = std::chrono::sys_days;

// One CSV row: a detector's speed reading at a 5-minute boundary.
// Timestamps are local wall clock stored as seconds since the civil epoch,
// with no timezone adjustment.
struct SpeedRecord {
  std::int64_t timestamp = 0;
  std::string detector_id;
  double speed_mph = 0.0;

  friend bool operator==(const SpeedRecord&, const SpeedRecord&) = default;
};

// Accepts YYYY-MM-DDTHH:MM and YYYY-MM-DDTHH:MM:SS.
std::int64_t parse_timestamp(std::string_view iso);
std::string format_timestamp(std::int64_t ts);
Date date_of(std::int64_t ts);
bool is_weekday(Date d);
Date parse_date(std::string_view iso);  // YYYY-MM-DD
std::string format_date(Date d);

// A detector paired with one daily period; the unit that gets its own model.
struct Dpc {
  std::string detector_id;
  Period period = Period::AM;

  friend bool operator==(const Dpc&, const Dpc&) = default;
};

struct Window {
  std::vector<double> input;  // length L, normalized
  double target = 0.0;        // next step, normalized
};

// Min-max transform fitted on the training series only. A degenerate
// (constant) series keeps scale 1 so the transform stays invertible.
struct Normalization {
  double min = 0.0;
  double scale = 1.0;

  double normalize(double x) const { return (x - min) / scale; }
  double denormalize(double v) const { return v * scale + min; }

  static Normalization fit(const std::vector<double>& values);
};

// One detector-period's supervised data: sliding windows over the training
// days, windows over the later testing days, and the raw-unit test targets
// needed to score predictions in original units.
struct DpcDataset {
  Dpc dpc;
  int window_len = 0;
  Normalization normalization;
  std::vector<Window> train_windows;
  std::vector<Window> test_windows;
  std::vector<double> raw_test_targets;  // aligned with test_windows
};

// Parses `timestamp,detector_id,speed_mph` CSV. Rows are validated (positive
// speed, 5-minute cadence, no duplicate detector+timestamp) and returned
// sorted by detector then time. Errors name the offending line.
std::vector<SpeedRecord> parse_csv(std::istream& in);
std::vector<SpeedRecord> parse_csv_file(const std::string& path);
std::string serialize_csv(const std::vector<SpeedRecord>& records);

// Builds the supervised dataset for one DPC. Per day the period series is
// assembled slot by slot; runs of up to 3 missing slots are forward-filled,
// longer gaps leave their slots unusable and any window touching them is
// dropped. Windows never span a day boundary. Training days must be
// weekdays strictly before the (weekday) test days; the normalization is
// fitted on training values only. Throws DataError when no training window
// survives. Days too short to hold a window are reported via `warnings`.
DpcDataset extract_dpc(const std::vector<SpeedRecord>& records, const Dpc& dpc,
                       const std::vector<Date>& train_days,
                       const std::vector<Date>& test_days, int window_len,
                       std::vector<std::string>* warnings = nullptr);

inline constexpr int kMaxFillRun = 3;

enum class SyntheticProfile { BimodalCommute, Flat, Noisy };

const char* to_string(SyntheticProfile p);
SyntheticProfile profile_from_string(std::string_view name);

// Deterministic synthetic corpus: dpc_count/2 detectors (dpc_count must be
// even), each with AM and PM series for `days` consecutive weekdays starting
// Monday 2024-01-01. BimodalCommute gives the two periods of a detector
// deliberately different shapes; Flat is a constant 60 mph; Noisy is a
// mean-reverting walk around 60.
std::vector<SpeedRecord> generate_synthetic(int dpc_count, int days,
                                            std::uint64_t seed,
                                            SyntheticProfile profile);

// First `count` weekdays starting at `start` (itself included if a weekday).
std::vector<Date> weekdays_from(Date start, int count);

// Distinct detector ids present, sorted.
std::vector<std::string> detector_ids(const std::vector<SpeedRecord>& records);

// Distinct weekday dates with records, sorted.
std::vector<Date> weekday_dates(const std::vector<SpeedRecord>& records);

}  // namespace dalc
