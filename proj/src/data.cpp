#include "dalc/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "dalc/hashing.hpp"

namespace dalc {

const char* to_string(Period p) { return p == Period::AM ? "AM" : "PM"; }

Period period_from_string(std::string_view name) {
  if (name == "AM" || name == "am") return Period::AM;
  if (name == "PM" || name == "pm") return Period::PM;
  throw ConfigError("unknown period: " + std::string(name));
}

int period_start_hour(Period p) { return p == Period::AM ? 4 : 14; }

namespace {

constexpr std::int64_t kDaySeconds = 86400;

std::int64_t civil_seconds(int y, int mo, int d, int hh, int mm, int ss) {
  using namespace std::chrono;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                     day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw DataError("invalid calendar date in timestamp");
  auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * kDaySeconds + hh * 3600 + mm * 60 +
         ss;
}

}  // namespace

std::int64_t parse_timestamp(std::string_view iso) {
  int y, mo, d, hh, mm, ss = 0;
  char tail;
  std::string s(iso);
  int n = std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d%c", &y, &mo, &d, &hh, &mm,
                      &ss, &tail);
  if (n != 5 && n != 6) {
    ss = 0;
    n = std::sscanf(s.c_str(), "%d-%d-%dT%d:%d%c", &y, &mo, &d, &hh, &mm,
                    &tail);
    if (n != 5) throw DataError("cannot parse timestamp '" + s + "'");
  }
  if (hh < 0 || hh > 23 || mm < 0 || mm > 59 || ss < 0 || ss > 59)
    throw DataError("time of day out of range in '" + s + "'");
  return civil_seconds(y, mo, d, hh, mm, ss);
}

std::string format_timestamp(std::int64_t ts) {
  using namespace std::chrono;
  std::int64_t days = ts / kDaySeconds;
  std::int64_t sec = ts % kDaySeconds;
  if (sec < 0) {
    sec += kDaySeconds;
    --days;
  }
  year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d",
                static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<int>(sec / 3600),
                static_cast<int>(sec / 60 % 60), static_cast<int>(sec % 60));
  return buf;
}

Date date_of(std::int64_t ts) {
  std::int64_t days = ts / kDaySeconds;
  if (ts % kDaySeconds < 0) --days;
  return Date{std::chrono::days{days}};
}

bool is_weekday(Date d) {
  const auto code = std::chrono::weekday{d}.c_encoding();  // Sun=0 .. Sat=6
  return code >= 1 && code <= 5;
}

Date parse_date(std::string_view iso) {
  std::int64_t ts = parse_timestamp(std::string(iso) + "T00:00");
  return date_of(ts);
}

std::string format_date(Date d) {
  return format_timestamp(
             static_cast<std::int64_t>(d.time_since_epoch().count()) *
             kDaySeconds)
      .substr(0, 10);
}

Normalization Normalization::fit(const std::vector<double>& values) {
  if (values.empty()) throw DataError("cannot fit normalization to no data");
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  Normalization n;
  n.min = *lo;
  n.scale = (*hi - *lo) > 1e-9 ? (*hi - *lo) : 1.0;
  return n;
}

namespace {

std::vector<std::string> split_line(const std::string& line, char sep) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, sep)) cells.push_back(cell);
  if (!line.empty() && line.back() == sep) cells.emplace_back();
  return cells;
}

}  // namespace

std::vector<SpeedRecord> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) return {};
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "timestamp,detector_id,speed_mph")
    throw DataError("line 1: expected header 'timestamp,detector_id,speed_mph'");

  std::vector<SpeedRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line, ',');
    if (cells.size() != 3)
      throw DataError("line " + std::to_string(line_no) +
                      ": expected 3 columns");
    SpeedRecord rec;
    try {
      rec.timestamp = parse_timestamp(cells[0]);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (rec.timestamp % (kSlotMinutes * 60) != 0)
      throw DataError("line " + std::to_string(line_no) +
                      ": timestamp not on the 5-minute cadence");
    rec.detector_id = cells[1];
    if (rec.detector_id.empty())
      throw DataError("line " + std::to_string(line_no) +
                      ": empty detector id");
    try {
      size_t pos = 0;
      rec.speed_mph = std::stod(cells[2], &pos);
      if (pos != cells[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw DataError("line " + std::to_string(line_no) +
                      ": cannot parse speed '" + cells[2] + "'");
    }
    if (!(rec.speed_mph > 0.0) || !std::isfinite(rec.speed_mph))
      throw DataError("line " + std::to_string(line_no) +
                      ": speed must be positive, got " + cells[2]);
    records.push_back(std::move(rec));
  }

  std::stable_sort(records.begin(), records.end(),
                   [](const SpeedRecord& a, const SpeedRecord& b) {
                     if (a.detector_id != b.detector_id)
                       return a.detector_id < b.detector_id;
                     return a.timestamp < b.timestamp;
                   });
  for (size_t i = 1; i < records.size(); ++i) {
    if (records[i].detector_id == records[i - 1].detector_id &&
        records[i].timestamp == records[i - 1].timestamp)
      throw DataError("duplicate record for detector '" +
                      records[i].detector_id + "' at " +
                      format_timestamp(records[i].timestamp));
  }
  return records;
}

std::vector<SpeedRecord> parse_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file: " + path);
  return parse_csv(in);
}

std::string serialize_csv(const std::vector<SpeedRecord>& records) {
  std::string out = "timestamp,detector_id,speed_mph\n";
  char buf[64];
  for (const auto& r : records) {
    out += format_timestamp(r.timestamp);
    out += ',';
    out += r.detector_id;
    out += ',';
    std::snprintf(buf, sizeof buf, "%.10g", r.speed_mph);
    out += buf;
    out += '\n';
  }
  return out;
}

namespace {

// Per-day period series: values plus usability flags after gap filling.
struct DaySeries {
  std::vector<double> value;
  std::vector<bool> usable;
};

DaySeries assemble_day(const std::unordered_map<std::int64_t, double>& by_ts,
                       Date day, Period period) {
  DaySeries out;
  out.value.assign(kSlotsPerPeriod, 0.0);
  out.usable.assign(kSlotsPerPeriod, false);

  const std::int64_t base =
      static_cast<std::int64_t>(day.time_since_epoch().count()) * kDaySeconds +
      period_start_hour(period) * 3600;

  std::vector<bool> present(kSlotsPerPeriod, false);
  for (int i = 0; i < kSlotsPerPeriod; ++i) {
    auto it = by_ts.find(base + static_cast<std::int64_t>(i) * kSlotMinutes * 60);
    if (it != by_ts.end()) {
      out.value[i] = it->second;
      out.usable[i] = true;
      present[i] = true;
    }
  }

  // Forward-fill missing runs of up to kMaxFillRun slots; longer runs stay
  // unusable. Leading gaps have nothing to fill from.
  int i = 0;
  while (i < kSlotsPerPeriod) {
    if (present[i]) {
      ++i;
      continue;
    }
    int run_start = i;
    while (i < kSlotsPerPeriod && !present[i]) ++i;
    int run_len = i - run_start;
    if (run_start > 0 && run_len <= kMaxFillRun) {
      for (int s = run_start; s < run_start + run_len; ++s) {
        out.value[s] = out.value[run_start - 1];
        out.usable[s] = true;
      }
    }
  }
  return out;
}

}  // namespace

DpcDataset extract_dpc(const std::vector<SpeedRecord>& records, const Dpc& dpc,
                       const std::vector<Date>& train_days,
                       const std::vector<Date>& test_days, int window_len,
                       std::vector<std::string>* warnings) {
  if (window_len < 1 || window_len >= kSlotsPerPeriod)
    throw ConfigError("window length must be in 1.." +
                      std::to_string(kSlotsPerPeriod - 1));
  if (train_days.empty() || test_days.empty())
    throw DataError("need at least one training day and one testing day");
  for (Date d : train_days)
    if (!is_weekday(d))
      throw DataError("training day " + format_date(d) + " is not a weekday");
  for (Date d : test_days)
    if (!is_weekday(d))
      throw DataError("testing day " + format_date(d) + " is not a weekday");
  if (*std::max_element(train_days.begin(), train_days.end()) >=
      *std::min_element(test_days.begin(), test_days.end()))
    throw DataError("training days must strictly precede testing days");

  std::unordered_map<std::int64_t, double> by_ts;
  for (const auto& r : records)
    if (r.detector_id == dpc.detector_id) by_ts.emplace(r.timestamp, r.speed_mph);

  struct RawWindow {
    std::vector<double> input;
    double target;
  };
  auto collect_day = [&](Date day, std::vector<RawWindow>* out,
                         std::vector<double>* series_values) {
    DaySeries series = assemble_day(by_ts, day, dpc.period);
    int usable = static_cast<int>(
        std::count(series.usable.begin(), series.usable.end(), true));
    if (usable < window_len + 1) {
      if (warnings)
        warnings->push_back("day " + format_date(day) + " has only " +
                            std::to_string(usable) +
                            " usable samples; contributes no window");
      return;
    }
    if (series_values)
      for (int i = 0; i < kSlotsPerPeriod; ++i)
        if (series.usable[i]) series_values->push_back(series.value[i]);
    for (int p = 0; p + window_len < kSlotsPerPeriod; ++p) {
      bool ok = true;
      for (int s = p; s <= p + window_len; ++s)
        if (!series.usable[s]) {
          ok = false;
          break;
        }
      if (!ok) continue;
      RawWindow w;
      w.input.assign(series.value.begin() + p,
                     series.value.begin() + p + window_len);
      w.target = series.value[p + window_len];
      out->push_back(std::move(w));
    }
  };

  std::vector<RawWindow> raw_train, raw_test;
  std::vector<double> train_values;
  for (Date d : train_days) collect_day(d, &raw_train, &train_values);
  for (Date d : test_days) collect_day(d, &raw_test, nullptr);

  if (raw_train.empty())
    throw DataError("no usable training windows for detector '" +
                    dpc.detector_id + "' period " + to_string(dpc.period));

  DpcDataset ds;
  ds.dpc = dpc;
  ds.window_len = window_len;
  ds.normalization = Normalization::fit(train_values);

  auto normalize_into = [&](const std::vector<RawWindow>& raw,
                            std::vector<Window>* out) {
    out->reserve(raw.size());
    for (const auto& w : raw) {
      Window nw;
      nw.input.reserve(w.input.size());
      for (double x : w.input) nw.input.push_back(ds.normalization.normalize(x));
      nw.target = ds.normalization.normalize(w.target);
      out->push_back(std::move(nw));
    }
  };
  normalize_into(raw_train, &ds.train_windows);
  normalize_into(raw_test, &ds.test_windows);
  ds.raw_test_targets.reserve(raw_test.size());
  for (const auto& w : raw_test) ds.raw_test_targets.push_back(w.target);
  return ds;
}

const char* to_string(SyntheticProfile p) {
  switch (p) {
    case SyntheticProfile::BimodalCommute:
      return "bimodalCommute";
    case SyntheticProfile::Flat:
      return "flat";
    case SyntheticProfile::Noisy:
      return "noisy";
  }
  return "?";
}

SyntheticProfile profile_from_string(std::string_view name) {
  if (name == "bimodalCommute") return SyntheticProfile::BimodalCommute;
  if (name == "flat") return SyntheticProfile::Flat;
  if (name == "noisy") return SyntheticProfile::Noisy;
  throw ConfigError("unknown profile: " + std::string(name));
}

namespace {

// Engine-independent uniform/gaussian draws so output is stable across
// standard library implementations.
struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed) {}

  double uniform01() {  // in (0, 1]
    state = splitmix64(state);
    return (static_cast<double>(state >> 11) + 1.0) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  double gaussian(double mean, double stddev) {
    double u1 = uniform01();
    double u2 = uniform01();
    return mean + stddev * std::sqrt(-2.0 * std::log(u1)) *
                      std::cos(2.0 * 3.14159265358979323846 * u2);
  }
};

struct DipShape {
  double base;    // free-flow level at t = 0
  double trend;   // linear drift over the period
  double center;  // dip position in [0, 1]
  double width;
  double depth;
};

double shape_value(const DipShape& s, double t) {
  double z = (t - s.center) / s.width;
  return s.base + s.trend * t - s.depth * std::exp(-z * z);
}

}  // namespace

std::vector<SpeedRecord> generate_synthetic(int dpc_count, int days,
                                            std::uint64_t seed,
                                            SyntheticProfile profile) {
  if (dpc_count < 2 || dpc_count % 2 != 0)
    throw ConfigError("dpc count must be a positive even number");
  if (days < 8) throw ConfigError("need at least 8 days (5 train + 3 test)");

  const int detectors = dpc_count / 2;
  const Date start = Date{std::chrono::days{19723}};  // 2024-01-01, a Monday
  const std::vector<Date> dates = weekdays_from(start, days);

  std::vector<SpeedRecord> out;
  out.reserve(static_cast<size_t>(detectors) * dates.size() * 2 *
              kSlotsPerPeriod);

  for (int det = 0; det < detectors; ++det) {
    char id[16];
    std::snprintf(id, sizeof id, "det-%03d", det + 1);
    for (size_t di = 0; di < dates.size(); ++di) {
      for (Period period : {Period::AM, Period::PM}) {
        const std::uint64_t shape_seed =
            mix_seed(mix_seed(seed, static_cast<std::uint64_t>(det)),
                     period == Period::AM ? 1 : 2);
        Rng shape_rng(shape_seed);

        DipShape shape{};
        if (profile == SyntheticProfile::BimodalCommute) {
          if (period == Period::AM) {
            // Morning rush: early dip against a flat free-flow baseline.
            shape = DipShape{63.0 + shape_rng.uniform(-2.0, 2.0), 0.0,
                             0.28 + shape_rng.uniform(-0.03, 0.03), 0.11,
                             33.0 + shape_rng.uniform(-3.0, 3.0)};
          } else {
            // Evening rush: late dip against a slowly declining baseline.
            shape = DipShape{58.0 + shape_rng.uniform(-2.0, 2.0), -6.0,
                             0.72 + shape_rng.uniform(-0.03, 0.03), 0.13,
                             26.0 + shape_rng.uniform(-3.0, 3.0)};
          }
        }

        Rng day_rng(mix_seed(shape_seed, 1000 + di));
        const std::int64_t base =
            static_cast<std::int64_t>(dates[di].time_since_epoch().count()) *
                86400 +
            period_start_hour(period) * 3600;
        double walk = 60.0;
        const double day_depth_jitter = day_rng.uniform(-0.02, 0.02);
        for (int slot = 0; slot < kSlotsPerPeriod; ++slot) {
          double value = 60.0;
          switch (profile) {
            case SyntheticProfile::Flat:
              value = 60.0;
              break;
            case SyntheticProfile::BimodalCommute: {
              double t = static_cast<double>(slot) / (kSlotsPerPeriod - 1);
              DipShape s = shape;
              s.depth *= 1.0 + day_depth_jitter;
              value = shape_value(s, t) + day_rng.gaussian(0.0, 0.4);
              value = std::max(value, 5.0);
              break;
            }
            case SyntheticProfile::Noisy:
              walk = 60.0 + 0.85 * (walk - 60.0) + day_rng.gaussian(0.0, 2.5);
              walk = std::clamp(walk, 30.0, 80.0);
              value = walk;
              break;
          }
          out.push_back(SpeedRecord{
              base + static_cast<std::int64_t>(slot) * kSlotMinutes * 60, id,
              value});
        }
      }
    }
  }
  return out;
}

std::vector<Date> weekdays_from(Date start, int count) {
  std::vector<Date> dates;
  Date d = start;
  while (static_cast<int>(dates.size()) < count) {
    if (is_weekday(d)) dates.push_back(d);
    d += std::chrono::days{1};
  }
  return dates;
}

std::vector<std::string> detector_ids(const std::vector<SpeedRecord>& records) {
  std::vector<std::string> ids;
  for (const auto& r : records) ids.push_back(r.detector_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::vector<Date> weekday_dates(const std::vector<SpeedRecord>& records) {
  std::vector<Date> dates;
  for (const auto& r : records) {
    Date d = date_of(r.timestamp);
    if (is_weekday(d)) dates.push_back(d);
  }
  std::sort(dates.begin(), dates.end());
  dates.erase(std::unique(dates.begin(), dates.end()), dates.end());
  return dates;
}

}  // namespace dalc
