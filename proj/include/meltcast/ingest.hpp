#pragma once

#include <array>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "meltcast/dataset.hpp"
#include "meltcast/date.hpp"

namespace meltcast::ingest {

/// One hourly station report, in local solar time. Absent cells are nullopt.
struct WeatherRecord {
    Date date;
    int hour = 0;
    std::optional<double> air_temp;      // degC
    std::optional<double> wind_dir;      // degrees from true north, [0, 360)
    std::optional<double> wind_speed;    // m/s
    std::optional<double> dew_point;     // degC
    std::optional<double> rel_humidity;  // percent
    std::optional<double> pressure;      // hPa
    std::optional<double> visibility;    // m
};

/// The snapshot chosen to represent one calendar date. A date without a
/// qualifying report has `present == false` and every field empty.
struct DailyObservation {
    Date date;
    int day_of_year = 0;
    bool present = false;
    int hour = 0;
    std::optional<double> response_temp;
    std::optional<double> wind_dir;
    std::optional<double> wind_speed;
    std::optional<double> dew_point;
    std::optional<double> rel_humidity;
};

enum class YearRole { kTrain, kCalibration, kTest };
[[nodiscard]] const char* to_string(YearRole role) noexcept;

struct FeatureRow {
    Date date;
    int day_counter = 0;
    double lag_temp = 0.0;
    double lag_wind_cos = 0.0;
    double lag_wind_sin = 0.0;
    double lag_wind_speed = 0.0;
    double lag_dew_point = 0.0;
    double lag_rel_humidity = 0.0;
    double response = 0.0;
};

inline constexpr std::size_t kFeatureCount = 7;

/// Model feature order. The FeatureTable CSV prepends `date` and appends
/// `response` to these columns.
inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {
    "day_counter", "lag_temp", "lag_wind_cos", "lag_wind_sin",
    "lag_wind_speed", "lag_dew_point", "lag_rel_humidity"};

struct FeatureTable {
    YearRole role = YearRole::kTrain;
    int year = 0;
    int lag_days = 14;
    std::vector<FeatureRow> rows;
    /// Target-year dates dropped for a missing response or lagged predictor.
    std::vector<Date> excluded;

    [[nodiscard]] std::size_t exclusion_tally() const noexcept { return excluded.size(); }
    [[nodiscard]] Dataset dataset() const;
};

[[nodiscard]] std::array<double, kFeatureCount> feature_vector(const FeatureRow& row);

/// Reads the station CSV. Required header columns:
/// date,hour,air_temp,wind_dir,wind_speed,dew_point,rel_humidity,pressure,visibility
/// in any order; extra columns are ignored. Empty cells and `M` are missing;
/// so is any numeric cell that fails to parse. Out-of-range wind direction
/// or humidity becomes missing, 360 degrees is read as 0, and a dew point
/// above air temperature + 0.5 is treated as missing.
[[nodiscard]] std::vector<WeatherRecord> parse_records(std::istream& source);
[[nodiscard]] std::vector<WeatherRecord> parse_records_file(const std::string& path);

/// Picks, per calendar date, the report nearest `target_hour` within
/// `tolerance_hours` (ties go to the earlier hour, then to input order).
/// Output covers every date from Jan 1 of the earliest year seen to Dec 31
/// of the latest, in order; dates without a candidate are marked absent.
[[nodiscard]] std::vector<DailyObservation> select_daily(std::span<const WeatherRecord> records,
                                                         int target_hour = 14,
                                                         int tolerance_hours = 1);

/// Unit-circle encoding (cos, sin) of a direction in degrees.
[[nodiscard]] std::pair<std::optional<double>, std::optional<double>> encode_wind(
    std::optional<double> degrees);

/// Builds the lagged table for `target_year`: the response on date t is
/// paired with predictors observed on t - lag_days. Input order does not
/// matter. Throws BoundaryDataError listing every target date whose lag
/// source lies outside the ingested span, and FormatError on duplicate dates.
[[nodiscard]] FeatureTable build_features(std::span<const DailyObservation> daily, int target_year,
                                          YearRole role, int lag_days = 14);

}  // namespace meltcast::ingest
