#include "meltcast/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "meltcast/errors.hpp"
#include "meltcast/text.hpp"

namespace meltcast::ingest {

namespace {

constexpr std::array<const char*, 9> kRequiredColumns = {
    "date", "hour", "air_temp", "wind_dir", "wind_speed",
    "dew_point", "rel_humidity", "pressure", "visibility"};

enum Column : std::size_t {
    kDate, kHour, kAirTemp, kWindDir, kWindSpeed, kDewPoint, kRelHumidity, kPressure, kVisibility
};

std::string_view unquote(std::string_view cell) {
    cell = text::trim(cell);
    if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') {
        cell = cell.substr(1, cell.size() - 2);
    }
    return text::trim(cell);
}

std::optional<double> numeric_cell(std::string_view cell) {
    if (cell.empty() || cell == "M") return std::nullopt;
    auto v = text::parse_double(cell);
    if (v && !std::isfinite(*v)) return std::nullopt;
    return v;
}

void apply_physical_limits(WeatherRecord& rec) {
    if (rec.wind_dir) {
        if (*rec.wind_dir == 360.0) rec.wind_dir = 0.0;
        if (*rec.wind_dir < 0.0 || *rec.wind_dir >= 360.0) rec.wind_dir.reset();
    }
    if (rec.rel_humidity && (*rec.rel_humidity < 0.0 || *rec.rel_humidity > 100.0)) {
        rec.rel_humidity.reset();
    }
    if (rec.wind_speed && *rec.wind_speed < 0.0) rec.wind_speed.reset();
    if (rec.dew_point && rec.air_temp && *rec.dew_point > *rec.air_temp + 0.5) {
        rec.dew_point.reset();
    }
}

}  // namespace

const char* to_string(YearRole role) noexcept {
    switch (role) {
        case YearRole::kTrain: return "train";
        case YearRole::kCalibration: return "calibration";
        case YearRole::kTest: return "test";
    }
    return "unknown";
}

std::vector<WeatherRecord> parse_records(std::istream& source) {
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(source, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (!text::trim(line).empty()) {
            have_header = true;
            break;
        }
    }
    if (!have_header) throw EmptyInputError("station file is empty");

    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::array<std::size_t, kRequiredColumns.size()> index{};
    {
        const auto cells = text::split(line, ',');
        std::map<std::string, std::size_t> by_name;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            by_name.emplace(text::lowercase(unquote(cells[i])), i);
        }
        for (std::size_t c = 0; c < kRequiredColumns.size(); ++c) {
            auto it = by_name.find(kRequiredColumns[c]);
            if (it == by_name.end()) {
                throw FormatError(std::string("station file header is missing column '") +
                                  kRequiredColumns[c] + "'");
            }
            index[c] = it->second;
        }
    }
    const std::size_t min_cells = *std::max_element(index.begin(), index.end()) + 1;

    std::vector<WeatherRecord> out;
    while (std::getline(source, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;
        const auto cells = text::split(line, ',');
        if (cells.size() < min_cells) {
            throw FormatError("line " + std::to_string(line_no) + ": expected at least " +
                              std::to_string(min_cells) + " cells, found " +
                              std::to_string(cells.size()));
        }
        auto cell = [&](Column c) { return unquote(cells[index[c]]); };

        WeatherRecord rec;
        const auto date = Date::parse_iso(cell(kDate));
        if (!date) {
            throw FormatError("line " + std::to_string(line_no) + ": unparseable date '" +
                              std::string(cell(kDate)) + "'");
        }
        rec.date = *date;
        const auto hour = text::parse_int(cell(kHour));
        if (!hour || *hour < 0 || *hour > 23) {
            throw FormatError("line " + std::to_string(line_no) + ": hour must be 0..23, got '" +
                              std::string(cell(kHour)) + "'");
        }
        rec.hour = static_cast<int>(*hour);
        rec.air_temp = numeric_cell(cell(kAirTemp));
        rec.wind_dir = numeric_cell(cell(kWindDir));
        rec.wind_speed = numeric_cell(cell(kWindSpeed));
        rec.dew_point = numeric_cell(cell(kDewPoint));
        rec.rel_humidity = numeric_cell(cell(kRelHumidity));
        rec.pressure = numeric_cell(cell(kPressure));
        rec.visibility = numeric_cell(cell(kVisibility));
        apply_physical_limits(rec);
        out.push_back(rec);
    }
    return out;
}

std::vector<WeatherRecord> parse_records_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open station file '" + path + "'");
    try {
        return parse_records(in);
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    } catch (const EmptyInputError& e) {
        throw EmptyInputError(path + ": " + e.what());
    }
}

std::vector<DailyObservation> select_daily(std::span<const WeatherRecord> records, int target_hour,
                                           int tolerance_hours) {
    if (records.empty()) return {};
    if (tolerance_hours < 0) throw ConfigError("hour tolerance must be nonnegative");

    std::vector<const WeatherRecord*> sorted;
    sorted.reserve(records.size());
    for (const auto& r : records) sorted.push_back(&r);
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
        return a->date != b->date ? a->date < b->date : a->hour < b->hour;
    });

    const Date first = first_of_year(sorted.front()->date.year());
    const Date last = last_of_year(sorted.back()->date.year());
    std::vector<DailyObservation> out;
    out.reserve(static_cast<std::size_t>(days_between(first, last) + 1));

    std::size_t cursor = 0;
    for (Date d = first; d <= last; d = d.plus_days(1)) {
        DailyObservation obs;
        obs.date = d;
        obs.day_of_year = d.day_of_year();
        const WeatherRecord* best = nullptr;
        int best_distance = 0;
        for (; cursor < sorted.size() && sorted[cursor]->date == d; ++cursor) {
            const auto* rec = sorted[cursor];
            const int distance = std::abs(rec->hour - target_hour);
            if (distance > tolerance_hours) continue;
            // Strict comparison keeps the earlier hour (sorted) on ties.
            if (best == nullptr || distance < best_distance) {
                best = rec;
                best_distance = distance;
            }
        }
        if (best != nullptr) {
            obs.present = true;
            obs.hour = best->hour;
            obs.response_temp = best->air_temp;
            obs.wind_dir = best->wind_dir;
            obs.wind_speed = best->wind_speed;
            obs.dew_point = best->dew_point;
            obs.rel_humidity = best->rel_humidity;
        }
        out.push_back(obs);
    }
    return out;
}

std::pair<std::optional<double>, std::optional<double>> encode_wind(std::optional<double> degrees) {
    if (!degrees || !std::isfinite(*degrees)) return {std::nullopt, std::nullopt};
    const double radians = *degrees * std::numbers::pi / 180.0;
    return {std::cos(radians), std::sin(radians)};
}

std::array<double, kFeatureCount> feature_vector(const FeatureRow& row) {
    return {static_cast<double>(row.day_counter), row.lag_temp, row.lag_wind_cos, row.lag_wind_sin,
            row.lag_wind_speed, row.lag_dew_point, row.lag_rel_humidity};
}

Dataset FeatureTable::dataset() const {
    Dataset ds;
    ds.feature_names.assign(kFeatureNames.begin(), kFeatureNames.end());
    ds.features = Matrix(0, kFeatureCount);
    ds.dates.reserve(rows.size());
    ds.response.reserve(rows.size());
    for (const auto& r : rows) {
        ds.dates.push_back(r.date);
        ds.features.append_row(feature_vector(r));
        ds.response.push_back(r.response);
    }
    return ds;
}

FeatureTable build_features(std::span<const DailyObservation> daily, int target_year, YearRole role,
                            int lag_days) {
    if (lag_days < 1) throw ConfigError("lag_days must be at least 1");

    std::vector<const DailyObservation*> sorted;
    sorted.reserve(daily.size());
    for (const auto& d : daily) sorted.push_back(&d);
    std::sort(sorted.begin(), sorted.end(),
              [](const auto* a, const auto* b) { return a->date < b->date; });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i]->date == sorted[i - 1]->date) {
            throw FormatError("duplicate daily observation for " + sorted[i]->date.iso());
        }
    }
    auto lookup = [&](const Date& d) -> const DailyObservation* {
        auto it = std::lower_bound(sorted.begin(), sorted.end(), d,
                                   [](const auto* obs, const Date& key) { return obs->date < key; });
        return (it != sorted.end() && (*it)->date == d) ? *it : nullptr;
    };

    FeatureTable table;
    table.role = role;
    table.year = target_year;
    table.lag_days = lag_days;

    const Date year_start = first_of_year(target_year);
    const Date year_end = last_of_year(target_year);
    std::vector<Date> unreachable;
    for (Date t = year_start; t <= year_end; t = t.plus_days(1)) {
        const Date source = t.plus_days(-lag_days);
        const auto* lagged = lookup(source);
        if (lagged == nullptr && source < year_start) {
            unreachable.push_back(t);
            continue;
        }
        const auto* current = lookup(t);
        const bool response_ok = current && current->present && current->response_temp;
        const auto [wind_cos, wind_sin] =
            lagged ? encode_wind(lagged->wind_dir) : encode_wind(std::nullopt);
        const bool lag_ok = lagged && lagged->present && lagged->response_temp && wind_cos &&
                            lagged->wind_speed && lagged->dew_point && lagged->rel_humidity;
        if (!response_ok || !lag_ok) {
            table.excluded.push_back(t);
            continue;
        }
        FeatureRow row;
        row.date = t;
        row.day_counter = t.day_of_year();
        row.lag_temp = *lagged->response_temp;
        row.lag_wind_cos = *wind_cos;
        row.lag_wind_sin = *wind_sin;
        row.lag_wind_speed = *lagged->wind_speed;
        row.lag_dew_point = *lagged->dew_point;
        row.lag_rel_humidity = *lagged->rel_humidity;
        row.response = *current->response_temp;
        table.rows.push_back(row);
    }

    if (!unreachable.empty()) {
        std::ostringstream msg;
        msg << "cannot lag " << unreachable.size() << " date(s) of " << target_year
            << " by " << lag_days << " days: no observations for the preceding year tail ("
            << unreachable.front().iso();
        if (unreachable.size() > 1) msg << " .. " << unreachable.back().iso();
        msg << ")";
        throw BoundaryDataError(msg.str());
    }
    return table;
}

}  // namespace meltcast::ingest
